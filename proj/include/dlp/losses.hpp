#pragma once

#include "dlp/autodiff.hpp"
#include "dlp/backends.hpp"

namespace dlp::losses {

struct LossWeights {
    double lambda_gan = 1.0;
    double lambda_dual = 10.0;
    double lambda_id = 5.0;
    double mu = 1.0;
    bool use_feature = true;
    bool use_semantic = true;
    bool use_identity = true;

    void validate() const;
};

struct LossReport {
    double d_x = 0, d_y = 0;
    double g_adv = 0, f_adv = 0;
    double feature = 0, semantic = 0, dual = 0, identity = 0;
    double total = 0;
};

// ½·mean[(real−1)²] + ½·mean[fake²]
ag::Var lsgan_d_loss(const ag::Var& real_scores, const ag::Var& fake_scores);
double lsgan_d_loss(const Tensor& real_scores, const Tensor& fake_scores);

// ½·mean[(fake−1)²]
ag::Var lsgan_g_loss(const ag::Var& fake_scores);
double lsgan_g_loss(const Tensor& fake_scores);

// mean|feat(x)−feat(rec_x)| + mean|feat(y)−feat(rec_y)|
ag::Var feature_loss(const ag::Var& x, const ag::Var& rec_x, const ag::Var& y,
                     const ag::Var& rec_y, const backends::BackendHandle& feat);

// dist(edge(x), edge(g_x)) + dist(edge(y), edge(f_y))
ag::Var semantic_loss(const ag::Var& x, const ag::Var& g_x, const ag::Var& y,
                      const ag::Var& f_y, const backends::BackendHandle& edge,
                      const backends::BackendHandle& dist);

// feature + mu * semantic
double dual_loss(double feature, double semantic, double mu);
ag::Var dual_loss(const ag::Var& feature, const ag::Var& semantic, double mu);

// mean|F(x)−x| + mean|G(y)−y|
ag::Var identity_loss(const ag::Var& x, const ag::Var& f_of_x, const ag::Var& y,
                      const ag::Var& g_of_y);

// Generator objective; terms may be null when disabled (treated as zero).
ag::Var total_objective(const ag::Var& g_adv, const ag::Var& f_adv, const ag::Var& feature,
                        const ag::Var& semantic, const ag::Var& identity, const LossWeights& w);
double total_objective(double g_plus_f_adv, double feature, double semantic, double identity,
                       const LossWeights& w);

}  // namespace dlp::losses
