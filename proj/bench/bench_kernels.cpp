// Compares the serial reference kernels against the OpenMP variants and
// checks that both produce identical bits.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "bookrl/book.hpp"
#include "bookrl/kernels.hpp"
#include "bookrl/rng.hpp"

using namespace bookrl;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <class F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        double t0 = now_ms();
        f();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

int mismatches(const std::vector<double>& a, const std::vector<double>& b) {
    int bad = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) ++bad;
    }
    return bad;
}

void fill(std::vector<double>& v, Rng& rng) {
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
}

void bench_affine(int batch, int in_dim, int out_dim, int reps) {
    Rng rng(42);
    std::vector<double> x(static_cast<size_t>(batch) * in_dim);
    std::vector<double> w(static_cast<size_t>(out_dim) * in_dim);
    std::vector<double> b(out_dim);
    fill(x, rng);
    fill(w, rng);
    fill(b, rng);
    std::vector<double> y_serial(static_cast<size_t>(batch) * out_dim);
    std::vector<double> y_omp(y_serial.size());

    double t_serial = time_best_of(reps, [&] {
        kernels::affine_forward_serial(x.data(), batch, in_dim, w.data(), b.data(), out_dim,
                                       y_serial.data());
    });
    double t_omp = time_best_of(reps, [&] {
        kernels::affine_forward_omp(x.data(), batch, in_dim, w.data(), b.data(), out_dim,
                                    y_omp.data());
    });
    int bad = mismatches(y_serial, y_omp);

    std::vector<double> dy(static_cast<size_t>(batch) * out_dim);
    fill(dy, rng);
    std::vector<double> dw_serial(w.size()), db_serial(b.size());
    std::vector<double> dw_omp(w.size()), db_omp(b.size());
    double t_bwd_serial = time_best_of(reps, [&] {
        kernels::affine_backward_params_serial(x.data(), batch, in_dim, dy.data(), out_dim,
                                               dw_serial.data(), db_serial.data());
    });
    double t_bwd_omp = time_best_of(reps, [&] {
        kernels::affine_backward_params_omp(x.data(), batch, in_dim, dy.data(), out_dim,
                                            dw_omp.data(), db_omp.data());
    });
    bad += mismatches(dw_serial, dw_omp) + mismatches(db_serial, db_omp);

    std::printf("affine  B=%-5d in=%-4d out=%-4d  fwd %8.3f / %8.3f ms (x%.2f)   bwd %8.3f / %8.3f ms (x%.2f)  %s\n",
                batch, in_dim, out_dim, t_serial, t_omp, t_serial / t_omp, t_bwd_serial, t_bwd_omp,
                t_bwd_serial / t_bwd_omp, bad == 0 ? "bits equal" : "MISMATCH");
}

void bench_priority_scan(size_t entries, int actions, int reps) {
    Rng rng(7);
    std::vector<BookEntry> book(entries);
    for (BookEntry& e : book) {
        e.q.resize(actions);
        e.f.resize(actions);
        e.known.assign(actions, 1);
        for (int a = 0; a < actions; ++a) {
            e.q[a] = rng.uniform(-5.0, 5.0);
            e.f[a] = rng.uniform_int(21);
        }
    }
    std::vector<double> out_serial(entries), out_omp(entries);
    double t_serial = time_best_of(reps, [&] {
        kernels::parallel_for(static_cast<int64_t>(entries),
                              [&](int64_t i) { out_serial[i] = entry_priority(book[i]); },
                              kernels::Mode::Serial);
    });
    double t_omp = time_best_of(reps, [&] {
        kernels::parallel_for(static_cast<int64_t>(entries),
                              [&](int64_t i) { out_omp[i] = entry_priority(book[i]); },
                              kernels::Mode::OpenMp);
    });
    int bad = mismatches(out_serial, out_omp);
    std::printf("priority scan n=%-8zu A=%d        %8.3f / %8.3f ms (x%.2f)  %s\n", entries, actions,
                t_serial, t_omp, t_serial / t_omp, bad == 0 ? "bits equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    bool quick = argc > 1 && std::string(argv[1]) == "--quick";
    std::printf("threads available: %d   (serial / openmp, best of several runs)\n",
                kernels::max_threads());
    if (quick) {
        bench_affine(64, 64, 64, 3);
        bench_priority_scan(10000, 2, 3);
        return 0;
    }
    bench_affine(256, 256, 256, 5);
    bench_affine(1024, 256, 256, 5);
    bench_affine(4096, 64, 64, 5);
    bench_affine(32, 64, 2, 20);  // the writer's working size
    bench_priority_scan(100000, 2, 10);
    bench_priority_scan(1000000, 4, 5);
    return 0;
}
