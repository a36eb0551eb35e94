// Times the serial reference kernels against the OpenMP versions and checks
// that both produce bit-identical results.

#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include "dlp/kernels.hpp"
#include "dlp/rng.hpp"
#include "dlp/tensor.hpp"

using namespace dlp;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
    return t;
}

double time_ms(const std::function<Tensor()>& fn, int reps, Tensor& out) {
    out = fn();  // warm up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) out = fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

bool identical(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (int64_t i = 0; i < a.numel(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

int main() {
    Rng rng(1234);
    const int reps = 3;
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-26s %10s %10s %8s %6s\n", "kernel", "serial ms", "omp ms", "speedup", "match");

    Tensor x = random_tensor({2, 32, 64, 64}, rng);
    Tensor w = random_tensor({64, 32, 3, 3}, rng);
    Tensor b = random_tensor({64}, rng);
    kernels::Conv2dOpts opts{1, 1, false};
    Tensor gy = random_tensor({2, 64, 64, 64}, rng);
    Tensor wt = random_tensor({32, 64, 3, 3}, rng);
    kernels::ConvT2dOpts topts;
    Tensor gyt = random_tensor({2, 64, 128, 128}, rng);

    struct Case {
        const char* name;
        std::function<Tensor()> serial, omp;
    };
    const Case cases[] = {
        {"conv2d_forward 3x3",
         [&] { return kernels::serial::conv2d_forward(x, w, b, opts); },
         [&] { return kernels::omp::conv2d_forward(x, w, b, opts); }},
        {"conv2d_grad_input 3x3",
         [&] { return kernels::serial::conv2d_grad_input(gy, w, x.shape(), opts); },
         [&] { return kernels::omp::conv2d_grad_input(gy, w, x.shape(), opts); }},
        {"conv2d_grad_weight 3x3",
         [&] {
             Tensor gw(w.shape()), gb(b.shape());
             kernels::serial::conv2d_grad_weight(gy, x, opts, gw, gb);
             return gw;
         },
         [&] {
             Tensor gw(w.shape()), gb(b.shape());
             kernels::omp::conv2d_grad_weight(gy, x, opts, gw, gb);
             return gw;
         }},
        {"convt2d_forward s2",
         [&] { return kernels::serial::convt2d_forward(x, wt, b, topts); },
         [&] { return kernels::omp::convt2d_forward(x, wt, b, topts); }},
        {"convt2d_grad_input s2",
         [&] { return kernels::serial::convt2d_grad_input(gyt, wt, x.shape(), topts); },
         [&] { return kernels::omp::convt2d_grad_input(gyt, wt, x.shape(), topts); }},
        {"maxpool2_forward",
         [&] {
             std::vector<int64_t> argmax;
             return kernels::serial::maxpool2_forward(x, argmax);
         },
         [&] {
             std::vector<int64_t> argmax;
             return kernels::omp::maxpool2_forward(x, argmax);
         }},
    };

    for (const auto& c : cases) {
        Tensor s_out, p_out;
        const double t_serial = time_ms(c.serial, reps, s_out);
        const double t_omp = time_ms(c.omp, reps, p_out);
        std::printf("%-26s %10.2f %10.2f %7.2fx %6s\n", c.name, t_serial, t_omp,
                    t_serial / t_omp, identical(s_out, p_out) ? "yes" : "NO");
    }
    return 0;
}
