#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "dregn/risk.hpp"

using namespace dregn;

namespace {

// Brute-force, loop-level transcription of the self-normalised risk terms,
// kept independent of the vectorised implementation.
struct OracleTerms {
    double r1, r2, r3, r_pm, r_cor, loss;
};

OracleTerms oracle_user_loss(const BatchLossInput& b, Eigen::Index u, bool is_corr, bool nn_corr,
                             double d_bar) {
    const Eigen::Index ni = b.scores.cols();
    double swp = 0, swn = 0, swp_r2 = 0, swn_r2 = 0, swp_r = 0;
    for (Eigen::Index i = 0; i < ni; ++i) {
        if (!b.pos_mask(u, i)) continue;
        swp += b.weights_pos(u, i);
        swn += b.weights_neg(u, i);
        swp_r2 += b.weights_pos(u, i) * b.scores(u, i) * b.scores(u, i);
        swn_r2 += b.weights_neg(u, i) * b.scores(u, i) * b.scores(u, i);
        swp_r += b.weights_pos(u, i) * b.scores(u, i);
    }
    double sv = 0, sv_r2 = 0;
    for (Eigen::Index i = 0; i < ni; ++i) {
        double v = b.weights_neg(u, i);
        if (is_corr) v /= b.item_sampling_prob[i];
        sv += v;
        sv_r2 += v * b.scores(u, i) * b.scores(u, i);
    }
    OracleTerms t{};
    t.r1 = b.priors[u] / (2 * swp) * swp_r2;
    t.r2 = b.priors[u] / (2 * swn) * swn_r2;
    t.r3 = swp_r / swp;
    t.r_pm = sv_r2 / (2 * sv);
    if (nn_corr) {
        t.r_cor = swp_r2 / (2 * d_bar * swp);
        t.loss = t.r1 - t.r2 - t.r3 + t.r_cor + std::max(t.r_pm - t.r_cor, 0.0);
    } else {
        t.loss = t.r1 - t.r2 - t.r3 + t.r_pm;
    }
    return t;
}

double oracle_batch_loss(const BatchLossInput& b, bool is_corr, bool nn_corr, double d_bar) {
    double acc = 0;
    for (Eigen::Index u = 0; u < b.scores.rows(); ++u)
        acc += oracle_user_loss(b, u, is_corr, nn_corr, d_bar).loss;
    return acc / static_cast<double>(b.scores.rows());
}

BatchLossInput random_batch(Eigen::Index nu, Eigen::Index ni, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> score(0.1, 4.0), weight(0.2, 3.0), prob(0.3, 1.0);
    BatchLossInput b;
    b.scores.resize(nu, ni);
    b.weights_pos.resize(nu, ni);
    b.weights_neg.resize(nu, ni);
    b.pos_mask.setConstant(nu, ni, false);
    b.priors.resize(nu);
    b.item_sampling_prob.resize(ni);
    for (Eigen::Index u = 0; u < nu; ++u) {
        b.priors[u] = prob(rng) * 0.5;
        for (Eigen::Index i = 0; i < ni; ++i) {
            b.scores(u, i) = score(rng);
            b.weights_pos(u, i) = weight(rng);
            b.weights_neg(u, i) = weight(rng);
        }
        // at least one positive per user
        std::uniform_int_distribution<Eigen::Index> col(0, ni - 1);
        b.pos_mask(u, col(rng)) = true;
        for (Eigen::Index i = 0; i < ni; ++i)
            if (rng() % 3 == 0) b.pos_mask(u, i) = true;
    }
    for (Eigen::Index i = 0; i < ni; ++i) b.item_sampling_prob[i] = prob(rng);
    return b;
}

}  // namespace

TEST_CASE("bregman divergence basics") {
    auto gen = BregmanGenerator::ulsif();
    CHECK(bregman_div(gen, 2.0, 2.0) == doctest::Approx(0.0));
    CHECK(bregman_div(gen, 3.0, 1.0) == doctest::Approx(2.0));
    CHECK(bregman_div(gen, 0.0, 4.0) == doctest::Approx(8.0));
}

TEST_CASE("uLSIF closed form over random pairs") {
    auto gen = BregmanGenerator::ulsif();
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> dist(0.01, 10.0);
    for (int k = 0; k < 10000; ++k) {
        const double t = dist(rng), th = dist(rng);
        const double expected = 0.5 * (t - th) * (t - th);
        const double got = bregman_div(gen, t, th);
        CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
        CHECK(got >= -1e-15);
    }
}

TEST_CASE("generator convexity and derivative sampled numerically") {
    auto gen = BregmanGenerator::ulsif();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(0.05, 8.0);
    for (int k = 0; k < 200; ++k) {
        double t1 = dist(rng), t2 = dist(rng);
        if (t1 > t2) std::swap(t1, t2);
        CHECK(gen.f(0.5 * (t1 + t2)) <= 0.5 * (gen.f(t1) + gen.f(t2)) + 1e-12);
        const double h = 1e-6;
        const double fd = (gen.f(t1 + h) - gen.f(t1 - h)) / (2 * h);
        CHECK(gen.df(t1) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("pointwise losses, uLSIF closed forms") {
    auto gen = BregmanGenerator::ulsif();
    auto at1 = pointwise_losses(gen, 1.0);
    CHECK(at1.ell_pos == doctest::Approx(0.0));
    CHECK(at1.ell_all == doctest::Approx(0.0));
    auto at2 = pointwise_losses(gen, 2.0);
    CHECK(at2.ell_pos == doctest::Approx(-1.0));
    CHECK(at2.ell_all == doctest::Approx(1.5));
    auto half = pointwise_losses(gen, 0.5);
    CHECK(half.ell_pos == doctest::Approx(0.5));
    CHECK(half.ell_all == doctest::Approx(-0.375));
    CHECK_THROWS_AS(pointwise_losses(gen, -1.0), std::domain_error);
}

TEST_CASE("ranking_ulsif hand-computed single-user example") {
    // one positive with r=1, one unlabelled with r=1, uniform weights, pi=0.5
    BatchLossInput b;
    b.scores = Matrix::Ones(1, 2);
    b.pos_mask.setConstant(1, 2, false);
    b.pos_mask(0, 0) = true;
    b.priors = Vector::Constant(1, 0.5);
    b.weights_pos = Matrix::Ones(1, 2);
    b.weights_neg = Matrix::Ones(1, 2);
    RiskConfig cfg;
    auto res = ranking_ulsif_loss(b, cfg);
    const auto& t = res.per_user[0];
    CHECK(t.r_pos_sq == doctest::Approx(0.25));
    CHECK(t.r_pos_cross == doctest::Approx(0.25));
    CHECK(t.r_pos_lin == doctest::Approx(1.0));
    // unlabelled term carries no class prior: sum v r^2 / (2 sum v) = 0.5
    CHECK(t.r_unlabelled == doctest::Approx(0.5));
    CHECK(res.loss == doctest::Approx(-0.5));
}

TEST_CASE("self-normalisation cancels weight scale") {
    auto b = random_batch(4, 7, 99);
    RiskConfig cfg;
    const double base = ranking_ulsif_loss(b, cfg).loss;
    BatchLossInput scaled = b;
    scaled.weights_pos *= 10.0;
    scaled.weights_neg *= 10.0;
    CHECK(ranking_ulsif_loss(scaled, cfg).loss == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("per-user positive rescaling leaves the loss unchanged") {
    auto b = random_batch(5, 9, 1234);
    RiskConfig cfg;
    SUBCASE("no corrections") {}
    SUBCASE("with IS") { cfg.use_is_correction = true; }
    SUBCASE("with NN") { cfg.use_nn_correction = true; cfg.d_bar = 3.0; }
    const double base = ranking_ulsif_loss(b, cfg).loss;
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> c(0.1, 20.0);
    BatchLossInput scaled = b;
    for (Eigen::Index u = 0; u < b.scores.rows(); ++u) {
        scaled.weights_pos.row(u) *= c(rng);
        scaled.weights_neg.row(u) *= c(rng);
    }
    CHECK(ranking_ulsif_loss(scaled, cfg).loss == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("NN correction with inactive clamp equals uncorrected loss") {
    auto b = random_batch(3, 6, 31);
    RiskConfig plain;
    RiskConfig nn;
    nn.use_nn_correction = true;
    nn.d_bar = 1e9;  // r_cor ~ 0, clamp inactive
    CHECK(ranking_ulsif_loss(b, nn).loss ==
          doctest::Approx(ranking_ulsif_loss(b, plain).loss).epsilon(1e-9));
}

TEST_CASE("NN clamped term is never negative") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
        auto b = random_batch(4, 6, seed);
        RiskConfig nn;
        nn.use_nn_correction = true;
        nn.d_bar = 0.5;  // aggressive bound, clamp frequently active
        auto res = ranking_ulsif_loss(b, nn);
        for (const auto& t : res.per_user) {
            const double clamped = t.loss - (t.r_pos_sq - t.r_pos_cross - t.r_pos_lin + t.r_cor);
            CHECK(clamped >= -1e-15);
        }
    }
}

TEST_CASE("oracle equivalence on random batches, all four configurations") {
    for (std::uint64_t seed : {11ULL, 22ULL, 33ULL}) {
        auto b = random_batch(3, 4, seed);
        for (bool is_corr : {false, true}) {
            for (bool nn_corr : {false, true}) {
                RiskConfig cfg;
                cfg.use_is_correction = is_corr;
                cfg.use_nn_correction = nn_corr;
                cfg.d_bar = 2.0;
                auto res = ranking_ulsif_loss(b, cfg);
                CHECK(res.loss ==
                      doctest::Approx(oracle_batch_loss(b, is_corr, nn_corr, 2.0)).epsilon(1e-10));
                for (Eigen::Index u = 0; u < b.scores.rows(); ++u) {
                    auto t = oracle_user_loss(b, u, is_corr, nn_corr, 2.0);
                    const auto& got = res.per_user[static_cast<std::size_t>(u)];
                    CHECK(got.r_pos_sq == doctest::Approx(t.r1).epsilon(1e-12));
                    CHECK(got.r_pos_cross == doctest::Approx(t.r2).epsilon(1e-12));
                    CHECK(got.r_pos_lin == doctest::Approx(t.r3).epsilon(1e-12));
                    CHECK(got.r_unlabelled == doctest::Approx(t.r_pm).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("ranking_ulsif error paths") {
    auto b = random_batch(2, 3, 8);
    RiskConfig cfg;
    SUBCASE("user without positives") {
        b.pos_mask.row(1).setConstant(false);
        CHECK_THROWS_AS(ranking_ulsif_loss(b, cfg), std::runtime_error);
    }
    SUBCASE("zero weight normaliser") {
        b.weights_pos.setZero();
        CHECK_THROWS_AS(ranking_ulsif_loss(b, cfg), std::runtime_error);
    }
}

TEST_CASE("grad of ranking_ulsif matches finite differences on scores") {
    auto b = random_batch(3, 5, 55);
    for (bool is_corr : {false, true}) {
        for (bool nn_corr : {false, true}) {
            RiskConfig cfg;
            cfg.use_is_correction = is_corr;
            cfg.use_nn_correction = nn_corr;
            cfg.d_bar = 2.0;
            auto res = ranking_ulsif_loss(b, cfg);
            const double h = 1e-6;
            for (Eigen::Index u = 0; u < b.scores.rows(); ++u) {
                for (Eigen::Index i = 0; i < b.scores.cols(); ++i) {
                    BatchLossInput bp = b, bm = b;
                    bp.scores(u, i) += h;
                    bm.scores(u, i) -= h;
                    const double fd =
                        (ranking_ulsif_loss(bp, cfg).loss - ranking_ulsif_loss(bm, cfg).loss) /
                        (2 * h);
                    CHECK(res.grad_scores(u, i) == doctest::Approx(fd).epsilon(1e-5));
                }
            }
        }
    }
}

TEST_CASE("pu_regression hand example and limits") {
    BatchLossInput b;
    b.scores = Matrix::Ones(1, 2);
    b.pos_mask.setConstant(1, 2, false);
    b.pos_mask(0, 0) = true;
    b.priors = Vector::Constant(1, 0.5);
    b.weights_pos = Matrix::Ones(1, 2);
    b.weights_neg = Matrix::Ones(1, 2);
    RiskConfig cfg;
    cfg.family = RiskFamily::pu_regression;
    // (0.5/1)*((1-1)*1 - 2*1) + (1/2)*(1+1) = -1 + 1 = 0
    CHECK(pu_regression_loss(b, cfg).loss == doctest::Approx(0.0));

    SUBCASE("all scores to zero drives the loss to zero") {
        b.scores.setConstant(1e-9);
        CHECK(pu_regression_loss(b, cfg).loss == doctest::Approx(0.0).epsilon(1e-8));
    }
    SUBCASE("zero negative weights leave only the unbounded linear term") {
        b.weights_neg.setZero();
        b.scores.setConstant(3.0);
        // (pi/|P|) * (w+ r^2 - 2 w+ r) = 0.5 * (9 - 6) = 1.5
        CHECK(pu_regression_loss(b, cfg).loss == doctest::Approx(1.5));
        b.scores.setConstant(30.0);
        CHECK(pu_regression_loss(b, cfg).loss == doctest::Approx(0.5 * (900.0 - 60.0)));
    }
}

TEST_CASE("pu_regression gradient matches finite differences") {
    auto b = random_batch(3, 5, 66);
    RiskConfig cfg;
    cfg.family = RiskFamily::pu_regression;
    auto res = pu_regression_loss(b, cfg);
    const double h = 1e-6;
    for (Eigen::Index u = 0; u < b.scores.rows(); ++u)
        for (Eigen::Index i = 0; i < b.scores.cols(); ++i) {
            BatchLossInput bp = b, bm = b;
            bp.scores(u, i) += h;
            bm.scores(u, i) -= h;
            const double fd =
                (pu_regression_loss(bp, cfg).loss - pu_regression_loss(bm, cfg).loss) / (2 * h);
            CHECK(res.grad_scores(u, i) == doctest::Approx(fd).epsilon(1e-5));
        }
}

TEST_CASE("bpr loss values") {
    Vector pos(2), neg(2);
    pos << 1.0, 2.0;
    neg << 1.0, 2.0;
    CHECK(bpr_loss(pos, neg).loss == doctest::Approx(std::log(2.0)));
    pos.setConstant(60.0);
    neg.setConstant(0.0);
    CHECK(bpr_loss(pos, neg).loss == doctest::Approx(0.0).epsilon(1e-12));
    pos.setConstant(-60.0);
    CHECK(bpr_loss(pos, neg).loss == doctest::Approx(60.0).epsilon(1e-6));
}

TEST_CASE("risk config round trip") {
    RiskConfig cfg;
    cfg.family = RiskFamily::pu_regression;
    cfg.weighting = WeightingKind::popularity;
    cfg.use_is_correction = true;
    cfg.use_nn_correction = true;
    cfg.d_bar = 42.0;
    cfg.l2_lambda = 0.03;
    cfg.pop_c0 = 8.0;
    cfg.pop_alpha = 0.75;
    auto path = (std::filesystem::temp_directory_path() / "risk.cfg").string();
    cfg.save(path);
    auto loaded = RiskConfig::load(path);
    CHECK(loaded.family == cfg.family);
    CHECK(loaded.weighting == cfg.weighting);
    CHECK(loaded.use_is_correction == cfg.use_is_correction);
    CHECK(loaded.use_nn_correction == cfg.use_nn_correction);
    CHECK(loaded.d_bar == doctest::Approx(cfg.d_bar));
    CHECK(loaded.l2_lambda == doctest::Approx(cfg.l2_lambda));
    CHECK(loaded.pop_alpha == doctest::Approx(cfg.pop_alpha));
}
