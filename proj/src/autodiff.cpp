#include "dlp/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace dlp::ag {

void Node::ensure_grad() {
    if (grad.numel() != value.numel()) grad = Tensor(value.shape());
}

void Node::accumulate(const Tensor& g) {
    ensure_grad();
    const int64_t n = grad.numel();
    for (int64_t i = 0; i < n; ++i) grad[i] += g[i];
}

Var leaf(Tensor value, bool trainable, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->trainable = trainable;
    n->requires_grad = trainable;
    n->name = std::move(name);
    return n;
}

Var constant(Tensor value) { return leaf(std::move(value), false); }

Var detach(const Var& v) { return constant(v->value); }

namespace {

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> bw) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p && p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backward_fn = std::move(bw);
    return n;
}

void topo_sort(const Var& root, std::vector<Node*>& order) {
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p && p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

}  // namespace

void backward(const Var& root) {
    if (root->value.numel() != 1)
        throw std::invalid_argument("backward: root must be a scalar");
    if (!root->requires_grad) return;
    std::vector<Node*> order;
    topo_sort(root, order);
    root->ensure_grad();
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.numel() == n->value.numel()) n->backward_fn(*n);
    }
}

// ---------------------------------------------------------------- conv ops

Var conv2d(const Var& x, const Var& w, const Var& b, const kernels::Conv2dOpts& o) {
    Tensor out = kernels::conv2d_forward(x->value, w->value, b ? b->value : Tensor{}, o);
    std::vector<Var> parents{x, w};
    if (b) parents.push_back(b);
    return make_op(std::move(out), std::move(parents), [x, w, b, o](Node& n) {
        if (x->requires_grad)
            x->accumulate(kernels::conv2d_grad_input(n.grad, w->value, x->value.shape(), o));
        if (w->requires_grad || (b && b->requires_grad)) {
            Tensor gw(w->value.shape());
            Tensor gb = b ? Tensor(b->value.shape()) : Tensor{};
            kernels::conv2d_grad_weight(n.grad, x->value, o, gw, gb);
            if (w->requires_grad) w->accumulate(gw);
            if (b && b->requires_grad) b->accumulate(gb);
        }
    });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, const kernels::ConvT2dOpts& o) {
    Tensor out = kernels::convt2d_forward(x->value, w->value, b ? b->value : Tensor{}, o);
    std::vector<Var> parents{x, w};
    if (b) parents.push_back(b);
    return make_op(std::move(out), std::move(parents), [x, w, b, o](Node& n) {
        if (x->requires_grad)
            x->accumulate(kernels::convt2d_grad_input(n.grad, w->value, x->value.shape(), o));
        if (w->requires_grad || (b && b->requires_grad)) {
            Tensor gw(w->value.shape());
            Tensor gb = b ? Tensor(b->value.shape()) : Tensor{};
            kernels::convt2d_grad_weight(n.grad, x->value, o, gw, gb);
            if (w->requires_grad) w->accumulate(gw);
            if (b && b->requires_grad) b->accumulate(gb);
        }
    });
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const Tensor& xv = x->value;
    const int64_t N = xv.dim(0), C = xv.dim(1), HW = xv.dim(2) * xv.dim(3);
    Tensor out(xv.shape());
    // cache per-(n,c) statistics for the backward pass
    auto mean = std::make_shared<std::vector<double>>(N * C);
    auto inv_std = std::make_shared<std::vector<double>>(N * C);
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            const int64_t base = (n * C + c) * HW;
            double mu = 0.0;
            for (int64_t i = 0; i < HW; ++i) mu += xv[base + i];
            mu /= static_cast<double>(HW);
            double var = 0.0;
            for (int64_t i = 0; i < HW; ++i) {
                const double d = xv[base + i] - mu;
                var += d * d;
            }
            var /= static_cast<double>(HW);
            const double is = 1.0 / std::sqrt(var + eps);
            (*mean)[n * C + c] = mu;
            (*inv_std)[n * C + c] = is;
            const double g = gamma ? gamma->value[c] : 1.0;
            const double bb = beta ? beta->value[c] : 0.0;
            for (int64_t i = 0; i < HW; ++i) out[base + i] = g * (xv[base + i] - mu) * is + bb;
        }
    }
    std::vector<Var> parents{x};
    if (gamma) parents.push_back(gamma);
    if (beta) parents.push_back(beta);
    return make_op(std::move(out), std::move(parents),
                   [x, gamma, beta, mean, inv_std, N, C, HW](Node& n) {
        Tensor gx(x->value.shape());
        Tensor ggamma = gamma ? Tensor(gamma->value.shape()) : Tensor{};
        Tensor gbeta = beta ? Tensor(beta->value.shape()) : Tensor{};
        const Tensor& xv = x->value;
        for (int64_t nn = 0; nn < N; ++nn) {
            for (int64_t c = 0; c < C; ++c) {
                const int64_t base = (nn * C + c) * HW;
                const double mu = (*mean)[nn * C + c];
                const double is = (*inv_std)[nn * C + c];
                const double g = gamma ? gamma->value[c] : 1.0;
                double sum_gy = 0.0, sum_gy_xhat = 0.0;
                for (int64_t i = 0; i < HW; ++i) {
                    const double xhat = (xv[base + i] - mu) * is;
                    const double gy = n.grad[base + i];
                    sum_gy += gy;
                    sum_gy_xhat += gy * xhat;
                }
                if (!ggamma.empty()) ggamma[c] += sum_gy_xhat;
                if (!gbeta.empty()) gbeta[c] += sum_gy;
                if (x->requires_grad) {
                    const double m = static_cast<double>(HW);
                    for (int64_t i = 0; i < HW; ++i) {
                        const double xhat = (xv[base + i] - mu) * is;
                        gx[base + i] = g * is *
                            (n.grad[base + i] - sum_gy / m - xhat * sum_gy_xhat / m);
                    }
                }
            }
        }
        if (x->requires_grad) x->accumulate(gx);
        if (gamma && gamma->requires_grad) gamma->accumulate(ggamma);
        if (beta && beta->requires_grad) beta->accumulate(gbeta);
    });
}

Var maxpool2(const Var& x) {
    auto argmax = std::make_shared<std::vector<int64_t>>();
    Tensor out = kernels::maxpool2_forward(x->value, *argmax);
    return make_op(std::move(out), {x}, [x, argmax](Node& n) {
        if (x->requires_grad)
            x->accumulate(kernels::maxpool2_backward(n.grad, *argmax, x->value.shape()));
    });
}

// ----------------------------------------------------------- pointwise ops

namespace {

template <typename F, typename DF>
Var pointwise(const Var& x, F f, DF df) {
    Tensor out(x->value.shape());
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = f(x->value[i]);
    return make_op(std::move(out), {x}, [x, df](Node& nd) {
        if (!x->requires_grad) return;
        Tensor g(x->value.shape());
        const int64_t m = g.numel();
        for (int64_t i = 0; i < m; ++i) g[i] = nd.grad[i] * df(x->value[i], nd.value[i]);
        x->accumulate(g);
    });
}

}  // namespace

Var relu(const Var& x) {
    return pointwise(x, [](double v) { return v > 0.0 ? v : 0.0; },
                     [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& x, double slope) {
    return pointwise(x, [slope](double v) { return v > 0.0 ? v : slope * v; },
                     [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var tanh_op(const Var& x) {
    return pointwise(x, [](double v) { return std::tanh(v); },
                     [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& x) {
    return pointwise(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                     [](double, double y) { return y * (1.0 - y); });
}

Var abs_op(const Var& x) {
    return pointwise(x, [](double v) { return std::fabs(v); },
                     [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var square(const Var& x) {
    return pointwise(x, [](double v) { return v * v; },
                     [](double v, double) { return 2.0 * v; });
}

Var add(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("add: shape mismatch");
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + b->value[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) a->accumulate(n.grad);
        if (b->requires_grad) b->accumulate(n.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("sub: shape mismatch");
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] - b->value[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) a->accumulate(n.grad);
        if (b->requires_grad) {
            Tensor g(n.grad.shape());
            for (int64_t i = 0; i < g.numel(); ++i) g[i] = -n.grad[i];
            b->accumulate(g);
        }
    });
}

Var add_scalar(const Var& a, double c) {
    return pointwise(a, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var mul_scalar(const Var& a, double c) {
    return pointwise(a, [c](double v) { return v * c; }, [c](double, double) { return c; });
}

Var concat_channels(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: empty input");
    const Tensor& p0 = parts[0]->value;
    const int64_t N = p0.dim(0), H = p0.dim(2), W = p0.dim(3);
    int64_t C = 0;
    for (const auto& p : parts) {
        if (p->value.dim(0) != N || p->value.dim(2) != H || p->value.dim(3) != W)
            throw std::invalid_argument("concat_channels: shape mismatch");
        C += p->value.dim(1);
    }
    Tensor out({N, C, H, W});
    int64_t off = 0;
    for (const auto& p : parts) {
        const int64_t pc = p->value.dim(1);
        for (int64_t n = 0; n < N; ++n)
            for (int64_t c = 0; c < pc; ++c)
                for (int64_t h = 0; h < H; ++h)
                    for (int64_t w = 0; w < W; ++w)
                        out.at(n, off + c, h, w) = p->value.at(n, c, h, w);
        off += pc;
    }
    return make_op(std::move(out), parts, [parts, N, H, W](Node& nd) {
        int64_t off = 0;
        for (const auto& p : parts) {
            const int64_t pc = p->value.dim(1);
            if (p->requires_grad) {
                Tensor g(p->value.shape());
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t c = 0; c < pc; ++c)
                        for (int64_t h = 0; h < H; ++h)
                            for (int64_t w = 0; w < W; ++w)
                                g.at(n, c, h, w) = nd.grad.at(n, off + c, h, w);
                p->accumulate(g);
            }
            off += pc;
        }
    });
}

Var channel_scale(const Var& x, const Var& w) {
    const Tensor& xv = x->value;
    const int64_t N = xv.dim(0), C = xv.dim(1), HW = xv.dim(2) * xv.dim(3);
    if (w->value.numel() != C) throw std::invalid_argument("channel_scale: weight size mismatch");
    Tensor out(xv.shape());
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const int64_t base = (n * C + c) * HW;
            for (int64_t i = 0; i < HW; ++i) out[base + i] = xv[base + i] * w->value[c];
        }
    return make_op(std::move(out), {x, w}, [x, w, N, C, HW](Node& nd) {
        if (x->requires_grad) {
            Tensor g(x->value.shape());
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < C; ++c) {
                    const int64_t base = (n * C + c) * HW;
                    for (int64_t i = 0; i < HW; ++i) g[base + i] = nd.grad[base + i] * w->value[c];
                }
            x->accumulate(g);
        }
        if (w->requires_grad) {
            Tensor g(w->value.shape());
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < C; ++c) {
                    const int64_t base = (n * C + c) * HW;
                    for (int64_t i = 0; i < HW; ++i) g[c] += nd.grad[base + i] * x->value[base + i];
                }
            w->accumulate(g);
        }
    });
}

Var channel_shift(const Var& x, const Var& b) {
    const Tensor& xv = x->value;
    const int64_t N = xv.dim(0), C = xv.dim(1), HW = xv.dim(2) * xv.dim(3);
    if (b->value.numel() != C) throw std::invalid_argument("channel_shift: bias size mismatch");
    Tensor out(xv.shape());
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const int64_t base = (n * C + c) * HW;
            for (int64_t i = 0; i < HW; ++i) out[base + i] = xv[base + i] + b->value[c];
        }
    return make_op(std::move(out), {x, b}, [x, b, N, C, HW](Node& nd) {
        if (x->requires_grad) x->accumulate(nd.grad);
        if (b->requires_grad) {
            Tensor g(b->value.shape());
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < C; ++c) {
                    const int64_t base = (n * C + c) * HW;
                    for (int64_t i = 0; i < HW; ++i) g[c] += nd.grad[base + i];
                }
            b->accumulate(g);
        }
    });
}

Var channel_l2_normalize(const Var& x, double eps) {
    const Tensor& xv = x->value;
    const int64_t N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    Tensor out(xv.shape());
    for (int64_t n = 0; n < N; ++n)
        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w) {
                double s = eps;
                for (int64_t c = 0; c < C; ++c) s += xv.at(n, c, h, w) * xv.at(n, c, h, w);
                const double inv = 1.0 / std::sqrt(s);
                for (int64_t c = 0; c < C; ++c) out.at(n, c, h, w) = xv.at(n, c, h, w) * inv;
            }
    return make_op(std::move(out), {x}, [x, eps, N, C, H, W](Node& nd) {
        if (!x->requires_grad) return;
        const Tensor& xv = x->value;
        Tensor g(xv.shape());
        for (int64_t n = 0; n < N; ++n)
            for (int64_t h = 0; h < H; ++h)
                for (int64_t w = 0; w < W; ++w) {
                    double s = eps, dot = 0.0;
                    for (int64_t c = 0; c < C; ++c) {
                        s += xv.at(n, c, h, w) * xv.at(n, c, h, w);
                        dot += nd.grad.at(n, c, h, w) * xv.at(n, c, h, w);
                    }
                    const double inv = 1.0 / std::sqrt(s);
                    const double inv3 = inv * inv * inv;
                    for (int64_t c = 0; c < C; ++c)
                        g.at(n, c, h, w) =
                            nd.grad.at(n, c, h, w) * inv - xv.at(n, c, h, w) * dot * inv3;
                }
        x->accumulate(g);
    });
}

Var mean_all(const Var& x) {
    const int64_t n = x->value.numel();
    Tensor out = Tensor::scalar(x->value.sum() / static_cast<double>(n));
    return make_op(std::move(out), {x}, [x, n](Node& nd) {
        if (!x->requires_grad) return;
        Tensor g(x->value.shape(), nd.grad[0] / static_cast<double>(n));
        x->accumulate(g);
    });
}

Var global_avg_pool(const Var& x) {
    const Tensor& xv = x->value;
    const int64_t N = xv.dim(0), C = xv.dim(1), HW = xv.dim(2) * xv.dim(3);
    Tensor out({N, C, 1, 1});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const int64_t base = (n * C + c) * HW;
            double s = 0.0;
            for (int64_t i = 0; i < HW; ++i) s += xv[base + i];
            out[n * C + c] = s / static_cast<double>(HW);
        }
    return make_op(std::move(out), {x}, [x, N, C, HW](Node& nd) {
        if (!x->requires_grad) return;
        Tensor g(x->value.shape());
        for (int64_t n = 0; n < N; ++n)
            for (int64_t c = 0; c < C; ++c) {
                const int64_t base = (n * C + c) * HW;
                const double gv = nd.grad[n * C + c] / static_cast<double>(HW);
                for (int64_t i = 0; i < HW; ++i) g[base + i] = gv;
            }
        x->accumulate(g);
    });
}

}  // namespace dlp::ag
