#include "bookrl/kernels.hpp"

#ifdef BOOKRL_HAS_OPENMP
#include <omp.h>
#endif

namespace bookrl::kernels {

namespace {
#ifdef BOOKRL_HAS_OPENMP
Mode g_default_mode = Mode::OpenMp;
#else
Mode g_default_mode = Mode::Serial;
#endif

inline Mode pick(Mode mode, int64_t work) {
    if (mode == Mode::OpenMp && work < kParallelGrainSize) return Mode::Serial;
    return mode;
}
}  // namespace

Mode default_mode() { return g_default_mode; }
void set_default_mode(Mode mode) { g_default_mode = mode; }

int max_threads() {
#ifdef BOOKRL_HAS_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void affine_forward_serial(const double* x, int batch, int in_dim,
                           const double* w, const double* b, int out_dim, double* y) {
    for (int bi = 0; bi < batch; ++bi) {
        const double* xb = x + static_cast<int64_t>(bi) * in_dim;
        double* yb = y + static_cast<int64_t>(bi) * out_dim;
        for (int o = 0; o < out_dim; ++o) {
            const double* wo = w + static_cast<int64_t>(o) * in_dim;
            double acc = b[o];
            for (int i = 0; i < in_dim; ++i) acc += wo[i] * xb[i];
            yb[o] = acc;
        }
    }
}

void affine_forward_omp(const double* x, int batch, int in_dim,
                        const double* w, const double* b, int out_dim, double* y) {
#ifdef BOOKRL_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int bi = 0; bi < batch; ++bi) {
        const double* xb = x + static_cast<int64_t>(bi) * in_dim;
        double* yb = y + static_cast<int64_t>(bi) * out_dim;
        for (int o = 0; o < out_dim; ++o) {
            const double* wo = w + static_cast<int64_t>(o) * in_dim;
            double acc = b[o];
            for (int i = 0; i < in_dim; ++i) acc += wo[i] * xb[i];
            yb[o] = acc;
        }
    }
}

void affine_forward(const double* x, int batch, int in_dim,
                    const double* w, const double* b, int out_dim, double* y, Mode mode) {
    int64_t work = static_cast<int64_t>(batch) * in_dim * out_dim;
    if (pick(mode, work) == Mode::OpenMp) {
        affine_forward_omp(x, batch, in_dim, w, b, out_dim, y);
    } else {
        affine_forward_serial(x, batch, in_dim, w, b, out_dim, y);
    }
}

void relu_forward_serial(double* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) {
        if (y[i] < 0.0) y[i] = 0.0;
    }
}

void relu_forward_omp(double* y, int64_t n) {
#ifdef BOOKRL_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < n; ++i) {
        if (y[i] < 0.0) y[i] = 0.0;
    }
}

void relu_forward(double* y, int64_t n, Mode mode) {
    if (pick(mode, n) == Mode::OpenMp) {
        relu_forward_omp(y, n);
    } else {
        relu_forward_serial(y, n);
    }
}

void affine_backward_input_serial(const double* dy, int batch, int out_dim,
                                  const double* w, int in_dim, double* dx) {
    for (int bi = 0; bi < batch; ++bi) {
        const double* dyb = dy + static_cast<int64_t>(bi) * out_dim;
        double* dxb = dx + static_cast<int64_t>(bi) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            double acc = 0.0;
            for (int o = 0; o < out_dim; ++o) acc += dyb[o] * w[static_cast<int64_t>(o) * in_dim + i];
            dxb[i] = acc;
        }
    }
}

void affine_backward_input_omp(const double* dy, int batch, int out_dim,
                               const double* w, int in_dim, double* dx) {
#ifdef BOOKRL_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int bi = 0; bi < batch; ++bi) {
        const double* dyb = dy + static_cast<int64_t>(bi) * out_dim;
        double* dxb = dx + static_cast<int64_t>(bi) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            double acc = 0.0;
            for (int o = 0; o < out_dim; ++o) acc += dyb[o] * w[static_cast<int64_t>(o) * in_dim + i];
            dxb[i] = acc;
        }
    }
}

void affine_backward_input(const double* dy, int batch, int out_dim,
                           const double* w, int in_dim, double* dx, Mode mode) {
    int64_t work = static_cast<int64_t>(batch) * in_dim * out_dim;
    if (pick(mode, work) == Mode::OpenMp) {
        affine_backward_input_omp(dy, batch, out_dim, w, in_dim, dx);
    } else {
        affine_backward_input_serial(dy, batch, out_dim, w, in_dim, dx);
    }
}

void affine_backward_params_serial(const double* x, int batch, int in_dim,
                                   const double* dy, int out_dim, double* dw, double* db) {
    for (int o = 0; o < out_dim; ++o) {
        double* dwo = dw + static_cast<int64_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) dwo[i] = 0.0;
        double acc_b = 0.0;
        for (int bi = 0; bi < batch; ++bi) {
            double g = dy[static_cast<int64_t>(bi) * out_dim + o];
            const double* xb = x + static_cast<int64_t>(bi) * in_dim;
            for (int i = 0; i < in_dim; ++i) dwo[i] += g * xb[i];
            acc_b += g;
        }
        db[o] = acc_b;
    }
}

void affine_backward_params_omp(const double* x, int batch, int in_dim,
                                const double* dy, int out_dim, double* dw, double* db) {
#ifdef BOOKRL_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int o = 0; o < out_dim; ++o) {
        double* dwo = dw + static_cast<int64_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) dwo[i] = 0.0;
        double acc_b = 0.0;
        for (int bi = 0; bi < batch; ++bi) {
            double g = dy[static_cast<int64_t>(bi) * out_dim + o];
            const double* xb = x + static_cast<int64_t>(bi) * in_dim;
            for (int i = 0; i < in_dim; ++i) dwo[i] += g * xb[i];
            acc_b += g;
        }
        db[o] = acc_b;
    }
}

void affine_backward_params(const double* x, int batch, int in_dim,
                            const double* dy, int out_dim, double* dw, double* db, Mode mode) {
    int64_t work = static_cast<int64_t>(batch) * in_dim * out_dim;
    if (pick(mode, work) == Mode::OpenMp) {
        affine_backward_params_omp(x, batch, in_dim, dy, out_dim, dw, db);
    } else {
        affine_backward_params_serial(x, batch, in_dim, dy, out_dim, dw, db);
    }
}

void relu_backward_serial(const double* out, double* dy, int64_t n) {
    for (int64_t i = 0; i < n; ++i) {
        if (out[i] <= 0.0) dy[i] = 0.0;
    }
}

void relu_backward_omp(const double* out, double* dy, int64_t n) {
#ifdef BOOKRL_HAS_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < n; ++i) {
        if (out[i] <= 0.0) dy[i] = 0.0;
    }
}

void relu_backward(const double* out, double* dy, int64_t n, Mode mode) {
    if (pick(mode, n) == Mode::OpenMp) {
        relu_backward_omp(out, dy, n);
    } else {
        relu_backward_serial(out, dy, n);
    }
}

}  // namespace bookrl::kernels
