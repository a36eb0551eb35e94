#pragma once

// Per-owner work units shared by the serial and OpenMP kernel backends.
// Each helper writes only the plane/slice it owns, so the parallel backend
// is bit-identical to the serial one for any thread count.

#include <stdexcept>

#include "dlp/kernels.hpp"

namespace dlp::kernels::detail {

// Reflection index without edge repeat; valid for pad <= size-1.
inline int64_t reflect_index(int64_t t, int64_t size) {
    if (t < 0) return -t;
    if (t >= size) return 2 * size - 2 - t;
    return t;
}

inline void check_conv_args(const Tensor& x, const Tensor& w, const Tensor& b,
                            const Conv2dOpts& o) {
    if (x.ndim() != 4 || w.ndim() != 4) throw std::invalid_argument("conv2d: expected 4-D tensors");
    if (x.dim(1) != w.dim(1)) throw std::invalid_argument("conv2d: channel mismatch");
    if (!b.empty() && b.dim(0) != w.dim(0)) throw std::invalid_argument("conv2d: bias mismatch");
    if (o.stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (o.reflect && (o.pad > x.dim(2) - 1 || o.pad > x.dim(3) - 1))
        throw std::invalid_argument("conv2d: reflection pad exceeds input size");
}

// One output plane (n, co) of the forward convolution.
inline void conv2d_forward_plane(const Tensor& x, const Tensor& w, const Tensor& b,
                                 const Conv2dOpts& o, int64_t n, int64_t co, Tensor& out) {
    const int64_t C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t kh = w.dim(2), kw = w.dim(3);
    const int64_t Ho = out.dim(2), Wo = out.dim(3);
    for (int64_t ho = 0; ho < Ho; ++ho) {
        for (int64_t wo = 0; wo < Wo; ++wo) {
            double acc = b.empty() ? 0.0 : b[co];
            for (int64_t ci = 0; ci < C; ++ci) {
                for (int64_t r = 0; r < kh; ++r) {
                    int64_t hi = ho * o.stride + r - o.pad;
                    if (o.reflect) {
                        hi = reflect_index(hi, H);
                    } else if (hi < 0 || hi >= H) {
                        continue;
                    }
                    for (int64_t s = 0; s < kw; ++s) {
                        int64_t wi = wo * o.stride + s - o.pad;
                        if (o.reflect) {
                            wi = reflect_index(wi, W);
                        } else if (wi < 0 || wi >= W) {
                            continue;
                        }
                        acc += x.at(n, ci, hi, wi) * w.at(co, ci, r, s);
                    }
                }
            }
            out.at(n, co, ho, wo) = acc;
        }
    }
}

// One input-gradient plane (n, ci); scatter from gout through the pad map.
inline void conv2d_grad_input_plane(const Tensor& gout, const Tensor& w, const Conv2dOpts& o,
                                    int64_t n, int64_t ci, Tensor& gin) {
    const int64_t Co = gout.dim(1), Ho = gout.dim(2), Wo = gout.dim(3);
    const int64_t kh = w.dim(2), kw = w.dim(3);
    const int64_t H = gin.dim(2), W = gin.dim(3);
    for (int64_t co = 0; co < Co; ++co) {
        for (int64_t ho = 0; ho < Ho; ++ho) {
            for (int64_t wo = 0; wo < Wo; ++wo) {
                const double g = gout.at(n, co, ho, wo);
                for (int64_t r = 0; r < kh; ++r) {
                    int64_t hi = ho * o.stride + r - o.pad;
                    if (o.reflect) {
                        hi = reflect_index(hi, H);
                    } else if (hi < 0 || hi >= H) {
                        continue;
                    }
                    for (int64_t s = 0; s < kw; ++s) {
                        int64_t wi = wo * o.stride + s - o.pad;
                        if (o.reflect) {
                            wi = reflect_index(wi, W);
                        } else if (wi < 0 || wi >= W) {
                            continue;
                        }
                        gin.at(n, ci, hi, wi) += g * w.at(co, ci, r, s);
                    }
                }
            }
        }
    }
}

// The weight-gradient slice for output channel co, plus its bias gradient.
inline void conv2d_grad_weight_slice(const Tensor& gout, const Tensor& x, const Conv2dOpts& o,
                                     int64_t co, Tensor& gw, Tensor& gb) {
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t kh = gw.dim(2), kw = gw.dim(3);
    const int64_t Ho = gout.dim(2), Wo = gout.dim(3);
    double bias_acc = 0.0;
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t ho = 0; ho < Ho; ++ho) {
            for (int64_t wo = 0; wo < Wo; ++wo) {
                const double g = gout.at(n, co, ho, wo);
                bias_acc += g;
                for (int64_t ci = 0; ci < C; ++ci) {
                    for (int64_t r = 0; r < kh; ++r) {
                        int64_t hi = ho * o.stride + r - o.pad;
                        if (o.reflect) {
                            hi = reflect_index(hi, H);
                        } else if (hi < 0 || hi >= H) {
                            continue;
                        }
                        for (int64_t s = 0; s < kw; ++s) {
                            int64_t wi = wo * o.stride + s - o.pad;
                            if (o.reflect) {
                                wi = reflect_index(wi, W);
                            } else if (wi < 0 || wi >= W) {
                                continue;
                            }
                            gw.at(co, ci, r, s) += g * x.at(n, ci, hi, wi);
                        }
                    }
                }
            }
        }
    }
    if (!gb.empty()) gb[co] += bias_acc;
}

// One output plane (n, co) of the transposed convolution.
inline void convt2d_forward_plane(const Tensor& x, const Tensor& w, const Tensor& b,
                                  const ConvT2dOpts& o, int64_t n, int64_t co, Tensor& out) {
    const int64_t Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t kh = w.dim(2), kw = w.dim(3);
    const int64_t Ho = out.dim(2), Wo = out.dim(3);
    if (!b.empty()) {
        for (int64_t ho = 0; ho < Ho; ++ho)
            for (int64_t wo = 0; wo < Wo; ++wo) out.at(n, co, ho, wo) = b[co];
    }
    for (int64_t ci = 0; ci < Ci; ++ci) {
        for (int64_t hi = 0; hi < H; ++hi) {
            for (int64_t wi = 0; wi < W; ++wi) {
                const double v = x.at(n, ci, hi, wi);
                for (int64_t r = 0; r < kh; ++r) {
                    const int64_t ho = hi * o.stride + r - o.pad;
                    if (ho < 0 || ho >= Ho) continue;
                    for (int64_t s = 0; s < kw; ++s) {
                        const int64_t wo = wi * o.stride + s - o.pad;
                        if (wo < 0 || wo >= Wo) continue;
                        out.at(n, co, ho, wo) += v * w.at(ci, co, r, s);
                    }
                }
            }
        }
    }
}

// One input-gradient plane (n, ci) of the transposed convolution (pure gather).
inline void convt2d_grad_input_plane(const Tensor& gout, const Tensor& w, const ConvT2dOpts& o,
                                     int64_t n, int64_t ci, Tensor& gin) {
    const int64_t Co = gout.dim(1), Ho = gout.dim(2), Wo = gout.dim(3);
    const int64_t kh = w.dim(2), kw = w.dim(3);
    const int64_t H = gin.dim(2), W = gin.dim(3);
    for (int64_t hi = 0; hi < H; ++hi) {
        for (int64_t wi = 0; wi < W; ++wi) {
            double acc = 0.0;
            for (int64_t co = 0; co < Co; ++co) {
                for (int64_t r = 0; r < kh; ++r) {
                    const int64_t ho = hi * o.stride + r - o.pad;
                    if (ho < 0 || ho >= Ho) continue;
                    for (int64_t s = 0; s < kw; ++s) {
                        const int64_t wo = wi * o.stride + s - o.pad;
                        if (wo < 0 || wo >= Wo) continue;
                        acc += gout.at(n, co, ho, wo) * w.at(ci, co, r, s);
                    }
                }
            }
            gin.at(n, ci, hi, wi) = acc;
        }
    }
}

// The weight-gradient slice for input channel ci of the transposed convolution.
inline void convt2d_grad_weight_slice(const Tensor& gout, const Tensor& x, const ConvT2dOpts& o,
                                      int64_t ci, Tensor& gw) {
    const int64_t N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int64_t Co = gw.dim(1), kh = gw.dim(2), kw = gw.dim(3);
    const int64_t Ho = gout.dim(2), Wo = gout.dim(3);
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t hi = 0; hi < H; ++hi) {
            for (int64_t wi = 0; wi < W; ++wi) {
                const double v = x.at(n, ci, hi, wi);
                for (int64_t co = 0; co < Co; ++co) {
                    for (int64_t r = 0; r < kh; ++r) {
                        const int64_t ho = hi * o.stride + r - o.pad;
                        if (ho < 0 || ho >= Ho) continue;
                        for (int64_t s = 0; s < kw; ++s) {
                            const int64_t wo = wi * o.stride + s - o.pad;
                            if (wo < 0 || wo >= Wo) continue;
                            gw.at(ci, co, r, s) += v * gout.at(n, co, ho, wo);
                        }
                    }
                }
            }
        }
    }
}

inline void convt2d_grad_bias(const Tensor& gout, Tensor& gb) {
    const int64_t N = gout.dim(0), Co = gout.dim(1), Ho = gout.dim(2), Wo = gout.dim(3);
    for (int64_t co = 0; co < Co; ++co) {
        double acc = 0.0;
        for (int64_t n = 0; n < N; ++n)
            for (int64_t ho = 0; ho < Ho; ++ho)
                for (int64_t wo = 0; wo < Wo; ++wo) acc += gout.at(n, co, ho, wo);
        gb[co] += acc;
    }
}

// One (n, c) plane of 2x2/stride-2 max pooling.
inline void maxpool2_forward_plane(const Tensor& x, int64_t n, int64_t c, Tensor& out,
                                   std::vector<int64_t>& argmax) {
    const int64_t H = x.dim(2), W = x.dim(3);
    const int64_t Ho = out.dim(2), Wo = out.dim(3);
    for (int64_t ho = 0; ho < Ho; ++ho) {
        for (int64_t wo = 0; wo < Wo; ++wo) {
            int64_t best_idx = -1;
            double best = 0.0;
            for (int64_t r = 0; r < 2; ++r) {
                for (int64_t s = 0; s < 2; ++s) {
                    const int64_t hi = 2 * ho + r, wi = 2 * wo + s;
                    if (hi >= H || wi >= W) continue;
                    const int64_t idx = ((n * x.dim(1) + c) * H + hi) * W + wi;
                    const double v = x[idx];
                    if (best_idx < 0 || v > best) {
                        best = v;
                        best_idx = idx;
                    }
                }
            }
            out.at(n, c, ho, wo) = best;
            argmax[static_cast<size_t>(((n * out.dim(1) + c) * Ho + ho) * Wo + wo)] = best_idx;
        }
    }
}

}  // namespace dlp::kernels::detail
