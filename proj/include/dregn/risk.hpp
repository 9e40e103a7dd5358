#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dregn/model.hpp"

namespace dregn {

/// Strictly convex generator f with derivative df. Only the uLSIF instance
/// f(t)=(t-1)^2/2 is shipped; the abstraction keeps the extension point open.
struct BregmanGenerator {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::string name;

    static BregmanGenerator ulsif();
};

// BR_f(t||t_hat) = f(t) - f(t_hat) - df(t_hat)(t - t_hat); non-negative,
// zero iff t == t_hat.
double bregman_div(const BregmanGenerator& gen, double t, double t_hat);

// ell_pos = -df(r), ell_all = df(r)*r - f(r). Additive constants retained so
// reported values match the closed forms (uLSIF: 1-r and (r^2-1)/2).
struct PointwiseLosses {
    double ell_pos;
    double ell_all;
};
PointwiseLosses pointwise_losses(const BregmanGenerator& gen, double r_hat);

enum class RiskFamily { ranking_ulsif, pu_regression, bpr };
enum class WeightingKind { uniform, popularity, hard_adaptive, hard_static };

struct RiskConfig {
    RiskFamily family = RiskFamily::ranking_ulsif;
    WeightingKind weighting = WeightingKind::hard_adaptive;
    bool use_is_correction = false;
    bool use_nn_correction = false;
    double d_bar = 50.0;     // density-ratio upper bound for the NN clamp
    double l2_lambda = 0.0;
    double pop_c0 = 64.0;
    double pop_alpha = 0.5;

    void validate() const;
    void save(const std::string& path) const;
    static RiskConfig load(const std::string& path);
};

std::string to_string(RiskFamily f);
std::string to_string(WeightingKind w);
RiskFamily risk_family_from_string(const std::string& s);
WeightingKind weighting_from_string(const std::string& s);

/// Everything the batch losses consume. Weights are constants during
/// differentiation; scores are r_hat = softplus(inner product).
struct BatchLossInput {
    Matrix scores;                            // |U_B| x |I_B|
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> pos_mask;
    Vector priors;                            // pi_u^+ per batch user
    Matrix weights_pos;                       // w+
    Matrix weights_neg;                       // w-
    Vector item_sampling_prob;                // s(i), used when IS correction on
};

struct UserRiskTerms {
    double r_pos_sq = 0.0;   // R_u^{+,1}
    double r_pos_cross = 0.0;// R_u^{+,2}
    double r_pos_lin = 0.0;  // R_u^{+,3}
    double r_unlabelled = 0.0;// R_u^{+-}
    double r_cor = 0.0;      // R_u^{cor} (NN correction only)
    double loss = 0.0;
};

struct LossResult {
    double loss = 0.0;
    Matrix grad_scores;  // d loss / d r_hat, same shape as scores
    std::vector<UserRiskTerms> per_user;
};

// Self-normalised ranking-uLSIF empirical risk with optional importance-
// sampling and non-negative corrections. Throws if a batch user has no
// positives or a weight normaliser vanishes.
LossResult ranking_ulsif_loss(const BatchLossInput& b, const RiskConfig& cfg);

// PU-regression counterpart (weighted WMF risk), averaged over batch users.
LossResult pu_regression_loss(const BatchLossInput& b, const RiskConfig& cfg);

// Pairwise log-sigmoid baseline over raw inner products. grad_pos_diff[k] is
// the derivative with respect to (pos[k] - neg[k]).
struct BprResult {
    double loss = 0.0;
    Vector grad_pos_diff;
};
BprResult bpr_loss(const Vector& pos_scores, const Vector& neg_scores);

// lambda * 1/2 * sum of squared layer-0 embedding rows for batch users/items.
double l2_penalty(const ScorerModel& model, const std::vector<int>& users,
                  const std::vector<int>& items, double lambda);

}  // namespace dregn
