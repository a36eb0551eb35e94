// Reference kernel implementations: plain loops, no threading.
// The OpenMP backend is validated against these bit-for-bit.

#include "kernels_detail.hpp"

namespace dlp::kernels::serial {

using namespace detail;

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOpts& o) {
    check_conv_args(x, w, b, o);
    const int64_t N = x.dim(0), Co = w.dim(0);
    const int64_t Ho = conv2d_out_size(x.dim(2), w.dim(2), o.stride, o.pad);
    const int64_t Wo = conv2d_out_size(x.dim(3), w.dim(3), o.stride, o.pad);
    Tensor out({N, Co, Ho, Wo});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t co = 0; co < Co; ++co) conv2d_forward_plane(x, w, b, o, n, co, out);
    return out;
}

Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w,
                         const std::vector<int64_t>& in_shape, const Conv2dOpts& o) {
    Tensor gin(in_shape);
    for (int64_t n = 0; n < gin.dim(0); ++n)
        for (int64_t ci = 0; ci < gin.dim(1); ++ci)
            conv2d_grad_input_plane(gout, w, o, n, ci, gin);
    return gin;
}

void conv2d_grad_weight(const Tensor& gout, const Tensor& x, const Conv2dOpts& o,
                        Tensor& gw, Tensor& gb) {
    for (int64_t co = 0; co < gw.dim(0); ++co)
        conv2d_grad_weight_slice(gout, x, o, co, gw, gb);
}

Tensor convt2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvT2dOpts& o) {
    const int64_t N = x.dim(0), Co = w.dim(1);
    const int64_t Ho = convt2d_out_size(x.dim(2), w.dim(2), o);
    const int64_t Wo = convt2d_out_size(x.dim(3), w.dim(3), o);
    Tensor out({N, Co, Ho, Wo});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t co = 0; co < Co; ++co) convt2d_forward_plane(x, w, b, o, n, co, out);
    return out;
}

Tensor convt2d_grad_input(const Tensor& gout, const Tensor& w,
                          const std::vector<int64_t>& in_shape, const ConvT2dOpts& o) {
    Tensor gin(in_shape);
    for (int64_t n = 0; n < gin.dim(0); ++n)
        for (int64_t ci = 0; ci < gin.dim(1); ++ci)
            convt2d_grad_input_plane(gout, w, o, n, ci, gin);
    return gin;
}

void convt2d_grad_weight(const Tensor& gout, const Tensor& x, const ConvT2dOpts& o,
                         Tensor& gw, Tensor& gb) {
    for (int64_t ci = 0; ci < gw.dim(0); ++ci)
        convt2d_grad_weight_slice(gout, x, o, ci, gw);
    if (!gb.empty()) convt2d_grad_bias(gout, gb);
}

Tensor maxpool2_forward(const Tensor& x, std::vector<int64_t>& argmax) {
    const int64_t N = x.dim(0), C = x.dim(1);
    const int64_t Ho = x.dim(2) / 2, Wo = x.dim(3) / 2;
    Tensor out({N, C, Ho, Wo});
    argmax.assign(static_cast<size_t>(out.numel()), -1);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) maxpool2_forward_plane(x, n, c, out, argmax);
    return out;
}

Tensor maxpool2_backward(const Tensor& gout, const std::vector<int64_t>& argmax,
                         const std::vector<int64_t>& in_shape) {
    Tensor gin(in_shape);
    for (int64_t i = 0; i < gout.numel(); ++i)
        if (argmax[static_cast<size_t>(i)] >= 0) gin[argmax[static_cast<size_t>(i)]] += gout[i];
    return gin;
}

}  // namespace dlp::kernels::serial
