// OpenMP kernel backend. Every loop is owner-computes over disjoint planes
// or weight slices, so results are bit-identical to the serial reference
// for any thread count.

#include "kernels_detail.hpp"

namespace dlp::kernels::omp {

using namespace detail;

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOpts& o) {
    check_conv_args(x, w, b, o);
    const int64_t N = x.dim(0), Co = w.dim(0);
    const int64_t Ho = conv2d_out_size(x.dim(2), w.dim(2), o.stride, o.pad);
    const int64_t Wo = conv2d_out_size(x.dim(3), w.dim(3), o.stride, o.pad);
    Tensor out({N, Co, Ho, Wo});
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < N; ++n)
        for (int64_t co = 0; co < Co; ++co) conv2d_forward_plane(x, w, b, o, n, co, out);
    return out;
}

Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w,
                         const std::vector<int64_t>& in_shape, const Conv2dOpts& o) {
    Tensor gin(in_shape);
    const int64_t N = gin.dim(0), Ci = gin.dim(1);
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < N; ++n)
        for (int64_t ci = 0; ci < Ci; ++ci) conv2d_grad_input_plane(gout, w, o, n, ci, gin);
    return gin;
}

void conv2d_grad_weight(const Tensor& gout, const Tensor& x, const Conv2dOpts& o,
                        Tensor& gw, Tensor& gb) {
    const int64_t Co = gw.dim(0);
#pragma omp parallel for schedule(static)
    for (int64_t co = 0; co < Co; ++co) conv2d_grad_weight_slice(gout, x, o, co, gw, gb);
}

Tensor convt2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvT2dOpts& o) {
    const int64_t N = x.dim(0), Co = w.dim(1);
    const int64_t Ho = convt2d_out_size(x.dim(2), w.dim(2), o);
    const int64_t Wo = convt2d_out_size(x.dim(3), w.dim(3), o);
    Tensor out({N, Co, Ho, Wo});
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < N; ++n)
        for (int64_t co = 0; co < Co; ++co) convt2d_forward_plane(x, w, b, o, n, co, out);
    return out;
}

Tensor convt2d_grad_input(const Tensor& gout, const Tensor& w,
                          const std::vector<int64_t>& in_shape, const ConvT2dOpts& o) {
    Tensor gin(in_shape);
    const int64_t N = gin.dim(0), Ci = gin.dim(1);
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < N; ++n)
        for (int64_t ci = 0; ci < Ci; ++ci) convt2d_grad_input_plane(gout, w, o, n, ci, gin);
    return gin;
}

void convt2d_grad_weight(const Tensor& gout, const Tensor& x, const ConvT2dOpts& o,
                         Tensor& gw, Tensor& gb) {
    const int64_t Ci = gw.dim(0);
#pragma omp parallel for schedule(static)
    for (int64_t ci = 0; ci < Ci; ++ci) convt2d_grad_weight_slice(gout, x, o, ci, gw);
    if (!gb.empty()) convt2d_grad_bias(gout, gb);
}

Tensor maxpool2_forward(const Tensor& x, std::vector<int64_t>& argmax) {
    const int64_t N = x.dim(0), C = x.dim(1);
    const int64_t Ho = x.dim(2) / 2, Wo = x.dim(3) / 2;
    Tensor out({N, C, Ho, Wo});
    argmax.assign(static_cast<size_t>(out.numel()), -1);
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) maxpool2_forward_plane(x, n, c, out, argmax);
    return out;
}

Tensor maxpool2_backward(const Tensor& gout, const std::vector<int64_t>& argmax,
                         const std::vector<int64_t>& in_shape) {
    // scatter through disjoint argmax windows; planes are independent
    Tensor gin(in_shape);
    const int64_t planes = gout.dim(0) * gout.dim(1);
    const int64_t plane = gout.dim(2) * gout.dim(3);
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        for (int64_t i = p * plane; i < (p + 1) * plane; ++i) {
            const int64_t src = argmax[static_cast<size_t>(i)];
            if (src >= 0) gin[src] += gout[i];
        }
    }
    return gin;
}

}  // namespace dlp::kernels::omp
