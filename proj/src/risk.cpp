#include "dregn/risk.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dregn {

BregmanGenerator BregmanGenerator::ulsif() {
    BregmanGenerator g;
    g.f = [](double t) { return 0.5 * (t - 1.0) * (t - 1.0); };
    g.df = [](double t) { return t - 1.0; };
    g.name = "ulsif";
    return g;
}

double bregman_div(const BregmanGenerator& gen, double t, double t_hat) {
    if (!std::isfinite(t) || !std::isfinite(t_hat))
        throw std::domain_error("bregman_div: arguments must be finite");
    return gen.f(t) - gen.f(t_hat) - gen.df(t_hat) * (t - t_hat);
}

PointwiseLosses pointwise_losses(const BregmanGenerator& gen, double r_hat) {
    if (!(r_hat > 0.0)) throw std::domain_error("pointwise_losses: r_hat must be positive");
    return {-gen.df(r_hat), gen.df(r_hat) * r_hat - gen.f(r_hat)};
}

void RiskConfig::validate() const {
    if (use_nn_correction && !(d_bar > 0.0))
        throw std::invalid_argument("d_bar must be positive with NN correction");
    if (l2_lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    if (!(pop_c0 > 0.0)) throw std::invalid_argument("c0 must be positive");
}

std::string to_string(RiskFamily f) {
    switch (f) {
        case RiskFamily::ranking_ulsif: return "ranking_ulsif";
        case RiskFamily::pu_regression: return "pu_regression";
        default: return "bpr";
    }
}

std::string to_string(WeightingKind w) {
    switch (w) {
        case WeightingKind::uniform: return "uniform";
        case WeightingKind::popularity: return "popularity";
        case WeightingKind::hard_adaptive: return "hard_adaptive";
        default: return "hard_static";
    }
}

RiskFamily risk_family_from_string(const std::string& s) {
    if (s == "ranking_ulsif") return RiskFamily::ranking_ulsif;
    if (s == "pu_regression") return RiskFamily::pu_regression;
    if (s == "bpr") return RiskFamily::bpr;
    throw std::invalid_argument("unknown risk family: " + s);
}

WeightingKind weighting_from_string(const std::string& s) {
    if (s == "uniform") return WeightingKind::uniform;
    if (s == "popularity") return WeightingKind::popularity;
    if (s == "hard_adaptive") return WeightingKind::hard_adaptive;
    if (s == "hard_static") return WeightingKind::hard_static;
    throw std::invalid_argument("unknown weighting: " + s);
}

void RiskConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "family=" << to_string(family) << '\n'
        << "weighting=" << to_string(weighting) << '\n'
        << "is_correction=" << (use_is_correction ? 1 : 0) << '\n'
        << "nn_correction=" << (use_nn_correction ? 1 : 0) << '\n'
        << "d_bar=" << d_bar << '\n'
        << "lambda=" << l2_lambda << '\n'
        << "c0=" << pop_c0 << '\n'
        << "alpha=" << pop_alpha << '\n';
}

RiskConfig RiskConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("malformed config line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    RiskConfig cfg;
    if (kv.count("family")) cfg.family = risk_family_from_string(kv["family"]);
    if (kv.count("weighting")) cfg.weighting = weighting_from_string(kv["weighting"]);
    if (kv.count("is_correction")) cfg.use_is_correction = std::stoi(kv["is_correction"]) != 0;
    if (kv.count("nn_correction")) cfg.use_nn_correction = std::stoi(kv["nn_correction"]) != 0;
    if (kv.count("d_bar")) cfg.d_bar = std::stod(kv["d_bar"]);
    if (kv.count("lambda")) cfg.l2_lambda = std::stod(kv["lambda"]);
    if (kv.count("c0")) cfg.pop_c0 = std::stod(kv["c0"]);
    if (kv.count("alpha")) cfg.pop_alpha = std::stod(kv["alpha"]);
    cfg.validate();
    return cfg;
}

namespace {

void check_batch(const BatchLossInput& b) {
    const Eigen::Index nu = b.scores.rows();
    const Eigen::Index ni = b.scores.cols();
    if (b.pos_mask.rows() != nu || b.pos_mask.cols() != ni ||
        b.weights_pos.rows() != nu || b.weights_neg.rows() != nu || b.priors.size() != nu)
        throw std::invalid_argument("batch loss input shape mismatch");
}

}  // namespace

LossResult ranking_ulsif_loss(const BatchLossInput& b, const RiskConfig& cfg) {
    check_batch(b);
    const Eigen::Index nu = b.scores.rows();
    const Eigen::Index ni = b.scores.cols();
    if (cfg.use_is_correction && b.item_sampling_prob.size() != ni)
        throw std::invalid_argument("item_sampling_prob missing for IS correction");

    LossResult res;
    res.grad_scores = Matrix::Zero(nu, ni);
    res.per_user.resize(static_cast<std::size_t>(nu));
    const double inv_nu = 1.0 / static_cast<double>(nu);

    for (Eigen::Index u = 0; u < nu; ++u) {
        double sum_wp = 0.0, sum_wn_pos = 0.0;
        double sum_wp_r2 = 0.0, sum_wn_r2 = 0.0, sum_wp_r = 0.0;
        bool any_pos = false;
        for (Eigen::Index i = 0; i < ni; ++i) {
            if (!b.pos_mask(u, i)) continue;
            any_pos = true;
            const double r = b.scores(u, i);
            const double wp = b.weights_pos(u, i);
            const double wn = b.weights_neg(u, i);
            sum_wp += wp;
            sum_wn_pos += wn;
            sum_wp_r2 += wp * r * r;
            sum_wn_r2 += wn * r * r;
            sum_wp_r += wp * r;
        }
        if (!any_pos) throw std::runtime_error("batch user without positives");
        if (!(sum_wp > 0.0) || !(sum_wn_pos > 0.0))
            throw std::runtime_error("zero weight normaliser over positives");

        double sum_v = 0.0, sum_v_r2 = 0.0;
        for (Eigen::Index i = 0; i < ni; ++i) {
            double v = b.weights_neg(u, i);
            if (cfg.use_is_correction) v /= b.item_sampling_prob[i];
            const double r = b.scores(u, i);
            sum_v += v;
            sum_v_r2 += v * r * r;
        }
        if (!(sum_v > 0.0)) throw std::runtime_error("zero weight normaliser over batch items");

        const double prior = b.priors[u];
        UserRiskTerms& t = res.per_user[static_cast<std::size_t>(u)];
        t.r_pos_sq = prior / (2.0 * sum_wp) * sum_wp_r2;
        t.r_pos_cross = prior / (2.0 * sum_wn_pos) * sum_wn_r2;
        t.r_pos_lin = sum_wp_r / sum_wp;
        t.r_unlabelled = sum_v_r2 / (2.0 * sum_v);

        bool clamp_active = false;
        if (cfg.use_nn_correction) {
            t.r_cor = sum_wp_r2 / (2.0 * cfg.d_bar * sum_wp);
            clamp_active = (t.r_unlabelled - t.r_cor) < 0.0;
            t.loss = t.r_pos_sq - t.r_pos_cross - t.r_pos_lin + t.r_cor +
                     std::max(t.r_unlabelled - t.r_cor, 0.0);
        } else {
            t.loss = t.r_pos_sq - t.r_pos_cross - t.r_pos_lin + t.r_unlabelled;
        }
        res.loss += t.loss * inv_nu;

        // gradients, weights held constant
        for (Eigen::Index i = 0; i < ni; ++i) {
            const double r = b.scores(u, i);
            double g = 0.0;
            if (b.pos_mask(u, i)) {
                const double wp = b.weights_pos(u, i);
                const double wn = b.weights_neg(u, i);
                g += prior * wp * r / sum_wp;        // R^{+,1}
                g -= prior * wn * r / sum_wn_pos;    // R^{+,2}
                g -= wp / sum_wp;                    // R^{+,3}
                if (cfg.use_nn_correction && clamp_active)
                    g += wp * r / (cfg.d_bar * sum_wp);  // R^{cor}
            }
            if (!cfg.use_nn_correction || !clamp_active) {
                double v = b.weights_neg(u, i);
                if (cfg.use_is_correction) v /= b.item_sampling_prob[i];
                g += v * r / sum_v;  // R^{+-}
            }
            res.grad_scores(u, i) = g * inv_nu;
        }
    }
    return res;
}

LossResult pu_regression_loss(const BatchLossInput& b, const RiskConfig& cfg) {
    (void)cfg;
    check_batch(b);
    const Eigen::Index nu = b.scores.rows();
    const Eigen::Index ni = b.scores.cols();

    LossResult res;
    res.grad_scores = Matrix::Zero(nu, ni);
    res.per_user.resize(static_cast<std::size_t>(nu));
    const double inv_nu = 1.0 / static_cast<double>(nu);
    const double inv_ni = 1.0 / static_cast<double>(ni);

    for (Eigen::Index u = 0; u < nu; ++u) {
        Eigen::Index npos = 0;
        for (Eigen::Index i = 0; i < ni; ++i)
            if (b.pos_mask(u, i)) ++npos;
        if (npos == 0) throw std::runtime_error("batch user without positives");
        const double prior = b.priors[u];
        const double cpos = prior / static_cast<double>(npos);

        double lu = 0.0;
        for (Eigen::Index i = 0; i < ni; ++i) {
            const double r = b.scores(u, i);
            const double wn = b.weights_neg(u, i);
            double g = 2.0 * inv_ni * wn * r;
            lu += inv_ni * wn * r * r;
            if (b.pos_mask(u, i)) {
                const double wp = b.weights_pos(u, i);
                lu += cpos * ((wp - wn) * r * r - 2.0 * wp * r);
                g += cpos * (2.0 * (wp - wn) * r - 2.0 * wp);
            }
            res.grad_scores(u, i) = g * inv_nu;
        }
        res.per_user[static_cast<std::size_t>(u)].loss = lu;
        res.loss += lu * inv_nu;
    }
    return res;
}

BprResult bpr_loss(const Vector& pos_scores, const Vector& neg_scores) {
    if (pos_scores.size() != neg_scores.size())
        throw std::invalid_argument("bpr_loss: mismatched pair lists");
    const Eigen::Index n = pos_scores.size();
    BprResult res;
    res.grad_pos_diff = Vector::Zero(n);
    if (n == 0) return res;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double d = pos_scores[k] - neg_scores[k];
        res.loss += softplus(-d) * inv_n;  // -ln sigmoid(d)
        const double sig = 1.0 / (1.0 + std::exp(-d));
        res.grad_pos_diff[k] = (sig - 1.0) * inv_n;
    }
    return res;
}

double l2_penalty(const ScorerModel& model, const std::vector<int>& users,
                  const std::vector<int>& items, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    double acc = 0.0;
    for (int u : users) acc += model.user_embed.row(u).squaredNorm();
    for (int i : items) acc += model.item_embed.row(i).squaredNorm();
    return 0.5 * lambda * acc;
}

}  // namespace dregn
