#include "dlp/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace dlp::kernels {

namespace {
#ifdef _OPENMP
std::atomic<bool> g_parallel{true};
#else
std::atomic<bool> g_parallel{false};
#endif
}  // namespace

void set_parallel(bool enabled) {
#ifndef _OPENMP
    enabled = false;
#endif
    g_parallel.store(enabled);
}

bool parallel_enabled() { return g_parallel.load(); }

int64_t conv2d_out_size(int64_t in, int64_t kernel, int64_t stride, int64_t pad) {
    const int64_t eff = in + 2 * pad - kernel;
    if (eff < 0) throw std::invalid_argument("conv2d: input smaller than kernel");
    return eff / stride + 1;
}

int64_t convt2d_out_size(int64_t in, int64_t kernel, const ConvT2dOpts& o) {
    return (in - 1) * o.stride - 2 * o.pad + kernel + o.out_pad;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOpts& o) {
    return parallel_enabled() ? omp::conv2d_forward(x, w, b, o) : serial::conv2d_forward(x, w, b, o);
}

Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w,
                         const std::vector<int64_t>& in_shape, const Conv2dOpts& o) {
    return parallel_enabled() ? omp::conv2d_grad_input(gout, w, in_shape, o)
                              : serial::conv2d_grad_input(gout, w, in_shape, o);
}

void conv2d_grad_weight(const Tensor& gout, const Tensor& x, const Conv2dOpts& o,
                        Tensor& gw, Tensor& gb) {
    if (parallel_enabled())
        omp::conv2d_grad_weight(gout, x, o, gw, gb);
    else
        serial::conv2d_grad_weight(gout, x, o, gw, gb);
}

Tensor convt2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvT2dOpts& o) {
    return parallel_enabled() ? omp::convt2d_forward(x, w, b, o)
                              : serial::convt2d_forward(x, w, b, o);
}

Tensor convt2d_grad_input(const Tensor& gout, const Tensor& w,
                          const std::vector<int64_t>& in_shape, const ConvT2dOpts& o) {
    return parallel_enabled() ? omp::convt2d_grad_input(gout, w, in_shape, o)
                              : serial::convt2d_grad_input(gout, w, in_shape, o);
}

void convt2d_grad_weight(const Tensor& gout, const Tensor& x, const ConvT2dOpts& o,
                         Tensor& gw, Tensor& gb) {
    if (parallel_enabled())
        omp::convt2d_grad_weight(gout, x, o, gw, gb);
    else
        serial::convt2d_grad_weight(gout, x, o, gw, gb);
}

Tensor maxpool2_forward(const Tensor& x, std::vector<int64_t>& argmax) {
    return parallel_enabled() ? omp::maxpool2_forward(x, argmax)
                              : serial::maxpool2_forward(x, argmax);
}

Tensor maxpool2_backward(const Tensor& gout, const std::vector<int64_t>& argmax,
                         const std::vector<int64_t>& in_shape) {
    return parallel_enabled() ? omp::maxpool2_backward(gout, argmax, in_shape)
                              : serial::maxpool2_backward(gout, argmax, in_shape);
}

}  // namespace dlp::kernels
