#pragma once

#include <cstdint>

namespace bookrl::kernels {

// Every kernel has a serial reference and an OpenMP variant. Both make
// the same floating-point operations in the same per-element order, so
// results are bit-identical regardless of mode or thread count; tests
// assert this and the bench target compares their speed.
enum class Mode { Serial, OpenMp };

Mode default_mode();
void set_default_mode(Mode mode);
int max_threads();

// Work sizes below this are run serially even in OpenMp mode; identical
// results either way, so the cutover is purely a scheduling choice.
inline constexpr int64_t kParallelGrainSize = 16384;

namespace detail {
template <class F>
void parallel_for_omp(int64_t n, F&& f);
}

// f(i) must be independent across i.
template <class F>
void parallel_for(int64_t n, F&& f, Mode mode) {
    if (mode == Mode::OpenMp) {
        detail::parallel_for_omp(n, f);
    } else {
        for (int64_t i = 0; i < n; ++i) f(i);
    }
}

template <class F>
void parallel_for(int64_t n, F&& f) {
    parallel_for(n, f, default_mode());
}

#ifdef BOOKRL_HAS_OPENMP
template <class F>
void detail::parallel_for_omp(int64_t n, F&& f) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) f(i);
}
#else
template <class F>
void detail::parallel_for_omp(int64_t n, F&& f) {
    for (int64_t i = 0; i < n; ++i) f(i);
}
#endif

// Dense batch kernels. x is batch-major: x[b*in_dim + i]. w is row-major
// out_dim x in_dim. Each output element is a serial sum over its inputs.

void affine_forward_serial(const double* x, int batch, int in_dim,
                           const double* w, const double* b, int out_dim, double* y);
void affine_forward_omp(const double* x, int batch, int in_dim,
                        const double* w, const double* b, int out_dim, double* y);
void affine_forward(const double* x, int batch, int in_dim,
                    const double* w, const double* b, int out_dim, double* y, Mode mode);

void relu_forward_serial(double* y, int64_t n);
void relu_forward_omp(double* y, int64_t n);
void relu_forward(double* y, int64_t n, Mode mode);

// dx[b,i] = sum_o dy[b,o] * w[o,i]
void affine_backward_input_serial(const double* dy, int batch, int out_dim,
                                  const double* w, int in_dim, double* dx);
void affine_backward_input_omp(const double* dy, int batch, int out_dim,
                               const double* w, int in_dim, double* dx);
void affine_backward_input(const double* dy, int batch, int out_dim,
                           const double* w, int in_dim, double* dx, Mode mode);

// dw[o,i] = sum_b dy[b,o] * x[b,i]; db[o] = sum_b dy[b,o].
// Batch sums run in fixed sample order within each output element.
void affine_backward_params_serial(const double* x, int batch, int in_dim,
                                   const double* dy, int out_dim, double* dw, double* db);
void affine_backward_params_omp(const double* x, int batch, int in_dim,
                                const double* dy, int out_dim, double* dw, double* db);
void affine_backward_params(const double* x, int batch, int in_dim,
                            const double* dy, int out_dim, double* dw, double* db, Mode mode);

// dy[j] = out[j] > 0 ? dy[j] : 0
void relu_backward_serial(const double* out, double* dy, int64_t n);
void relu_backward_omp(const double* out, double* dy, int64_t n);
void relu_backward(const double* out, double* dy, int64_t n, Mode mode);

}  // namespace bookrl::kernels
