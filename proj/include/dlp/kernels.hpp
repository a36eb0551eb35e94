#pragma once

#include <cstdint>
#include <vector>

#include "dlp/tensor.hpp"

namespace dlp::kernels {

struct Conv2dOpts {
    int64_t stride = 1;
    int64_t pad = 0;
    bool reflect = false;  // reflection padding (no edge repeat); zero padding otherwise
};

struct ConvT2dOpts {
    int64_t stride = 2;
    int64_t pad = 1;
    int64_t out_pad = 1;
};

int64_t conv2d_out_size(int64_t in, int64_t kernel, int64_t stride, int64_t pad);
int64_t convt2d_out_size(int64_t in, int64_t kernel, const ConvT2dOpts& o);

// Backend selection. Parallel is the default when built with OpenMP; the
// serial implementation is the reference the parallel one is tested against.
void set_parallel(bool enabled);
bool parallel_enabled();

// x: N×Cin×H×W, w: Cout×Cin×kh×kw, b: Cout or empty.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOpts& o);
Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w,
                         const std::vector<int64_t>& in_shape, const Conv2dOpts& o);
void conv2d_grad_weight(const Tensor& gout, const Tensor& x, const Conv2dOpts& o,
                        Tensor& gw, Tensor& gb);

// Transposed convolution; w: Cin×Cout×kh×kw.
Tensor convt2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvT2dOpts& o);
Tensor convt2d_grad_input(const Tensor& gout, const Tensor& w,
                          const std::vector<int64_t>& in_shape, const ConvT2dOpts& o);
void convt2d_grad_weight(const Tensor& gout, const Tensor& x, const ConvT2dOpts& o,
                         Tensor& gw, Tensor& gb);

// 2×2 max pooling, stride 2. argmax records the flat input index per output.
Tensor maxpool2_forward(const Tensor& x, std::vector<int64_t>& argmax);
Tensor maxpool2_backward(const Tensor& gout, const std::vector<int64_t>& argmax,
                         const std::vector<int64_t>& in_shape);

namespace serial {
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOpts& o);
Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w,
                         const std::vector<int64_t>& in_shape, const Conv2dOpts& o);
void conv2d_grad_weight(const Tensor& gout, const Tensor& x, const Conv2dOpts& o,
                        Tensor& gw, Tensor& gb);
Tensor convt2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvT2dOpts& o);
Tensor convt2d_grad_input(const Tensor& gout, const Tensor& w,
                          const std::vector<int64_t>& in_shape, const ConvT2dOpts& o);
void convt2d_grad_weight(const Tensor& gout, const Tensor& x, const ConvT2dOpts& o,
                         Tensor& gw, Tensor& gb);
Tensor maxpool2_forward(const Tensor& x, std::vector<int64_t>& argmax);
Tensor maxpool2_backward(const Tensor& gout, const std::vector<int64_t>& argmax,
                         const std::vector<int64_t>& in_shape);
}  // namespace serial

namespace omp {
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOpts& o);
Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w,
                         const std::vector<int64_t>& in_shape, const Conv2dOpts& o);
void conv2d_grad_weight(const Tensor& gout, const Tensor& x, const Conv2dOpts& o,
                        Tensor& gw, Tensor& gb);
Tensor convt2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvT2dOpts& o);
Tensor convt2d_grad_input(const Tensor& gout, const Tensor& w,
                          const std::vector<int64_t>& in_shape, const ConvT2dOpts& o);
void convt2d_grad_weight(const Tensor& gout, const Tensor& x, const ConvT2dOpts& o,
                         Tensor& gw, Tensor& gb);
Tensor maxpool2_forward(const Tensor& x, std::vector<int64_t>& argmax);
Tensor maxpool2_backward(const Tensor& gout, const std::vector<int64_t>& argmax,
                         const std::vector<int64_t>& in_shape);
}  // namespace omp

}  // namespace dlp::kernels
