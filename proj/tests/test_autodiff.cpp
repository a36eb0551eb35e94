#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dlp/autodiff.hpp"
#include "dlp/rng.hpp"
#include "gradcheck.hpp"

using namespace dlp;
using namespace dlp::ag;

namespace {

Var random_leaf(std::vector<int64_t> shape, Rng& rng, bool trainable = true) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
    return leaf(std::move(t), trainable);
}

std::vector<std::pair<Var, int64_t>> all_elements(const Var& v) {
    std::vector<std::pair<Var, int64_t>> out;
    for (int64_t i = 0; i < v->value.numel(); ++i) out.emplace_back(v, i);
    return out;
}

}  // namespace

TEST_CASE("mean_all gradient is uniform") {
    Rng rng(1);
    Var x = random_leaf({1, 2, 3, 3}, rng);
    Var loss = mean_all(x);
    backward(loss);
    for (int64_t i = 0; i < x->value.numel(); ++i)
        CHECK(x->grad[i] == doctest::Approx(1.0 / 18.0));
}

TEST_CASE("conv2d gradients match central differences") {
    Rng rng(2);
    for (bool reflect : {false, true}) {
        Var x = random_leaf({1, 2, 5, 5}, rng);
        Var w = random_leaf({3, 2, 3, 3}, rng);
        Var b = random_leaf({3}, rng);
        kernels::Conv2dOpts o{1, 1, reflect};
        auto f = [&]() { return mean_all(square(conv2d(x, w, b, o))); };
        auto probes = all_elements(x);
        auto wp = all_elements(w);
        probes.insert(probes.end(), wp.begin(), wp.end());
        probes.emplace_back(b, 0);
        auto res = testing::gradcheck(f, probes);
        CHECK(res.max_rel_err < 1e-6);
    }
}

TEST_CASE("strided conv2d gradient") {
    Rng rng(3);
    Var x = random_leaf({1, 2, 6, 6}, rng);
    Var w = random_leaf({4, 2, 3, 3}, rng);
    kernels::Conv2dOpts o{2, 1, false};
    auto f = [&]() { return mean_all(square(conv2d(x, w, nullptr, o))); };
    auto res = testing::gradcheck(f, all_elements(w));
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("conv_transpose2d gradients match central differences") {
    Rng rng(4);
    Var x = random_leaf({1, 3, 4, 4}, rng);
    Var w = random_leaf({3, 2, 3, 3}, rng);
    Var b = random_leaf({2}, rng);
    kernels::ConvT2dOpts o{2, 1, 1};
    auto f = [&]() { return mean_all(square(conv_transpose2d(x, w, b, o))); };
    auto probes = all_elements(x);
    auto wp = all_elements(w);
    probes.insert(probes.end(), wp.begin(), wp.end());
    probes.emplace_back(b, 1);
    auto res = testing::gradcheck(f, probes);
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("instance_norm gradients match central differences") {
    Rng rng(5);
    Var x = random_leaf({2, 3, 4, 4}, rng);
    Var gamma = random_leaf({3}, rng);
    Var beta = random_leaf({3}, rng);
    auto f = [&]() { return mean_all(square(instance_norm(x, gamma, beta))); };
    auto probes = all_elements(x);
    for (auto& v : {gamma, beta}) {
        auto e = all_elements(v);
        probes.insert(probes.end(), e.begin(), e.end());
    }
    auto res = testing::gradcheck(f, probes);
    CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("pointwise op gradients") {
    Rng rng(6);
    Var x = random_leaf({1, 1, 4, 4}, rng);
    for (auto fn : {+[](const Var& v) { return tanh_op(v); },
                    +[](const Var& v) { return sigmoid(v); },
                    +[](const Var& v) { return leaky_relu(v, 0.2); },
                    +[](const Var& v) { return square(v); }}) {
        auto f = [&]() { return mean_all(square(fn(x))); };
        auto res = testing::gradcheck(f, all_elements(x));
        CHECK(res.max_rel_err < 1e-5);
    }
}

TEST_CASE("concat and channel ops gradients") {
    Rng rng(7);
    Var a = random_leaf({1, 2, 3, 3}, rng);
    Var b = random_leaf({1, 3, 3, 3}, rng);
    Var s = random_leaf({5}, rng);
    auto f = [&]() {
        Var c = concat_channels({a, b});
        return mean_all(square(channel_l2_normalize(channel_scale(c, s))));
    };
    auto probes = all_elements(a);
    for (auto& v : {b, s}) {
        auto e = all_elements(v);
        probes.insert(probes.end(), e.begin(), e.end());
    }
    auto res = testing::gradcheck(f, probes);
    CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("maxpool gradient matches central differences") {
    Rng rng(8);
    Var x = random_leaf({1, 2, 6, 6}, rng);
    auto f = [&]() { return mean_all(square(maxpool2(x))); };
    auto res = testing::gradcheck(f, all_elements(x));
    CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("gradient accumulates over reuse of the same node") {
    Var x = leaf(Tensor::scalar(3.0), true);
    Var loss = mean_all(square(add(x, x)));  // (2x)^2, d/dx = 8x = 24
    backward(loss);
    CHECK(x->grad[0] == doctest::Approx(24.0));
}

TEST_CASE("detach blocks gradient flow") {
    Var x = leaf(Tensor::scalar(2.0), true);
    Var d = detach(x);
    Var loss = mean_all(square(d));
    CHECK_FALSE(loss->requires_grad);
    backward(mean_all(square(x)));
    CHECK(x->grad[0] == doctest::Approx(4.0));
}

TEST_CASE("frozen leaves receive no gradient but pass it through") {
    Rng rng(9);
    Var x = random_leaf({1, 2, 4, 4}, rng, true);
    Var w = random_leaf({2, 2, 3, 3}, rng, false);  // frozen
    Var loss = mean_all(square(conv2d(x, w, nullptr, {1, 1, false})));
    backward(loss);
    CHECK(w->grad.numel() == 0);
    CHECK(x->grad.numel() == x->value.numel());
    double norm = 0;
    for (int64_t i = 0; i < x->grad.numel(); ++i) norm += std::fabs(x->grad[i]);
    CHECK(norm > 0.0);
}

TEST_CASE("backward requires a scalar root") {
    Var x = leaf(Tensor({2}, {1.0, 2.0}), true);
    CHECK_THROWS(backward(x));
}
