#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dlp/kernels.hpp"
#include "dlp/tensor.hpp"

namespace dlp::ag {

struct Node;
using Var = std::shared_ptr<Node>;

// A node in the backward tape. Leaves hold parameters or inputs; interior
// nodes carry the function that routes their gradient to the parents.
struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    bool trainable = false;  // leaf that an optimizer may update
    std::string name;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;

    void accumulate(const Tensor& g);
    void ensure_grad();
};

Var leaf(Tensor value, bool trainable = false, std::string name = {});
Var constant(Tensor value);
Var detach(const Var& v);

// Runs reverse-mode accumulation from a scalar root (seed gradient 1).
void backward(const Var& root);

// --- ops ---
Var conv2d(const Var& x, const Var& w, const Var& b, const kernels::Conv2dOpts& o);
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, const kernels::ConvT2dOpts& o);
Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var maxpool2(const Var& x);

Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var tanh_op(const Var& x);
Var sigmoid(const Var& x);
Var abs_op(const Var& x);
Var square(const Var& x);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var add_scalar(const Var& a, double c);
Var mul_scalar(const Var& a, double c);
Var concat_channels(const std::vector<Var>& parts);

// per-channel scale: y[n,c,h,w] = x[n,c,h,w] * w[c]
Var channel_scale(const Var& x, const Var& w);
// per-channel shift: y[n,c,h,w] = x[n,c,h,w] + b[c]
Var channel_shift(const Var& x, const Var& b);
// per-pixel unit normalization across channels
Var channel_l2_normalize(const Var& x, double eps = 1e-10);

Var mean_all(const Var& x);                  // scalar
Var global_avg_pool(const Var& x);           // N×C×1×1

}  // namespace dlp::ag
