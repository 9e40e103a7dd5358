#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dregn/curves.hpp"
#include "dregn/synth.hpp"
#include "dregn/trainer.hpp"

using namespace dregn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("synthetic corpus is internally consistent") {
    SynthConfig cfg;
    cfg.num_users = 30;
    cfg.num_items = 20;
    cfg.positives_per_user = 6;
    cfg.test_per_user = 2;
    cfg.seed = 5;
    auto corpus = generate_synthetic(cfg);

    CHECK(corpus.dataset.num_users == 30);
    CHECK(corpus.dataset.num_items == 20);
    for (std::size_t u = 0; u < 30; ++u) {
        CHECK(corpus.dataset.positives[u].size() == 4);
        CHECK(corpus.dataset.test_positives[u].size() == 2);
    }
    // probability rows normalised; ratio = prob * |I|
    for (Eigen::Index u = 0; u < corpus.positive_prob.rows(); ++u) {
        CHECK(corpus.positive_prob.row(u).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((corpus.positive_prob.row(u).array() > 0.0).all());
    }
    CHECK(corpus.true_ratio.isApprox(corpus.positive_prob * 20.0, 1e-14));
}

TEST_CASE("synthetic generation is deterministic by seed") {
    SynthConfig cfg;
    cfg.num_users = 15;
    cfg.num_items = 12;
    cfg.positives_per_user = 5;
    cfg.seed = 11;
    auto a = generate_synthetic(cfg);
    auto b = generate_synthetic(cfg);
    CHECK(a.dataset.positives == b.dataset.positives);
    CHECK(a.positive_prob == b.positive_prob);
    cfg.seed = 12;
    auto c = generate_synthetic(cfg);
    CHECK(a.dataset.positives != c.dataset.positives);
}

TEST_CASE("higher temperature concentrates the preference distribution") {
    SynthConfig hot, cold;
    hot.num_users = cold.num_users = 40;
    hot.num_items = cold.num_items = 30;
    hot.positives_per_user = cold.positives_per_user = 10;
    hot.temperature = 4.0;
    cold.temperature = 0.25;
    auto sharp = generate_synthetic(hot);
    auto flat = generate_synthetic(cold);
    CHECK(sharp.positive_prob.rowwise().maxCoeff().mean() >
          flat.positive_prob.rowwise().maxCoeff().mean());
}

TEST_CASE("synthetic corpus round-trips through the on-disk layout") {
    SynthConfig cfg;
    cfg.num_users = 12;
    cfg.num_items = 10;
    cfg.positives_per_user = 4;
    cfg.test_per_user = 1;
    auto corpus = generate_synthetic(cfg);
    auto dir = scratch_dir("dregn_synth_rt");
    write_synthetic(corpus, dir.string());

    auto loaded = load_dataset_dir(dir.string());
    CHECK(loaded.positives == corpus.dataset.positives);
    CHECK(loaded.test_positives == corpus.dataset.test_positives);

    auto ratios = load_ratio_table((dir / "ratios.csv").string());
    CHECK(ratios.rows() == corpus.true_ratio.rows());
    CHECK(ratios.isApprox(corpus.true_ratio, 1e-9));
}

TEST_CASE("train log CSV round-trips through the curve reader") {
    TrainLog log;
    log.records.push_back({5, 100, 1.5, -0.25, 0.11, 0.07});
    log.records.push_back({10, 200, 3.25, -0.5, 0.22, 0.14});
    auto dir = scratch_dir("dregn_log_rt");
    const auto path = (dir / "trainlog.csv").string();
    log.write_csv(path, "ulsif-hard");

    auto points = read_curve_csv(path);
    REQUIRE(points.size() == 2);
    CHECK(points[0].method == "ulsif-hard");
    CHECK(points[0].epoch == 5);
    CHECK(points[0].iteration == 100);
    CHECK(points[0].seconds == doctest::Approx(1.5));
    CHECK(points[0].train_loss == doctest::Approx(-0.25));
    CHECK(points[1].val_recall == doctest::Approx(0.22));
    CHECK(points[1].val_ndcg == doctest::Approx(0.14));
}

TEST_CASE("curve reader reports malformed input with line numbers") {
    auto dir = scratch_dir("dregn_log_bad");
    const auto path = (dir / "bad.csv").string();
    {
        std::ofstream out(path);
        out << "method,epoch,iteration,seconds,train_loss,val_recall,val_ndcg\n";
        out << "m,1,10,0.5,0.1,0.2,0.3\n";
        out << "m,not_a_number,20,0.5,0.1,0.2,0.3\n";
    }
    CHECK_THROWS_WITH_AS(read_curve_csv(path), doctest::Contains("line 3"), std::runtime_error);
    {
        std::ofstream out(path);
        out << "wrong,header\n";
    }
    CHECK_THROWS_AS(read_curve_csv(path), std::runtime_error);
}

TEST_CASE("merged curves round-trip and keep both methods") {
    std::vector<CurvePoint> pts = {
        {"a", 1, 10, 0.1, -0.1, 0.05, 0.03},
        {"b", 1, 10, 0.1, -0.2, 0.06, 0.04},
        {"a", 2, 20, 0.2, -0.3, 0.10, 0.07},
    };
    auto dir = scratch_dir("dregn_curves_rt");
    const auto path = (dir / "merged.csv").string();
    write_merged_csv(pts, path);
    auto back = read_curve_csv(path);
    REQUIRE(back.size() == 3);
    CHECK(back[1].method == "b");
    CHECK(back[2].iteration == 20);
}

TEST_CASE("efficiency summary finds the 95% crossing per method") {
    std::vector<CurvePoint> pts = {
        {"fast", 1, 10, 0, 0, 0.02, 0},  {"fast", 2, 20, 0, 0, 0.098, 0},
        {"fast", 3, 30, 0, 0, 0.10, 0},  {"slow", 1, 10, 0, 0, 0.01, 0},
        {"slow", 2, 20, 0, 0, 0.05, 0},  {"slow", 3, 30, 0, 0, 0.10, 0},
    };
    auto rows = efficiency_summary(pts);
    REQUIRE(rows.size() == 2);
    const auto& fast = rows[0].method == "fast" ? rows[0] : rows[1];
    const auto& slow = rows[0].method == "slow" ? rows[0] : rows[1];
    CHECK(fast.final_recall == doctest::Approx(0.10));
    CHECK(fast.iterations_to_95pct == 20);  // 0.098 >= 0.095
    CHECK(slow.iterations_to_95pct == 30);
    CHECK(fast.iterations_to_95pct < slow.iterations_to_95pct);
}

TEST_CASE("end-to-end: synthesise, train briefly, log, summarise") {
    SynthConfig scfg;
    scfg.num_users = 40;
    scfg.num_items = 25;
    scfg.positives_per_user = 8;
    scfg.test_per_user = 2;
    scfg.seed = 3;
    auto corpus = generate_synthetic(scfg);
    auto ds = corpus.dataset;
    ds.val_positives = ds.test_positives;  // reuse the holdout as validation
    ds.test_positives.assign(ds.num_users, {});
    recompute_derived(ds);

    RiskConfig risk;
    risk.weighting = WeightingKind::uniform;
    TrainConfig tcfg;
    tcfg.learning_rate = 0.05;
    tcfg.epochs = 6;
    tcfg.eval_every = 2;
    tcfg.batch_users = 20;
    auto model = ScorerModel::init(ds.num_users, ds.num_items, 8, Backbone::mf, 0, 21);
    auto result = train(ds, model, risk, tcfg);
    REQUIRE(!result.log.records.empty());

    auto dir = scratch_dir("dregn_e2e");
    const auto path = (dir / "log.csv").string();
    result.log.write_csv(path, "ulsif-uniform");
    auto points = read_curve_csv(path);
    CHECK(points.size() == result.log.records.size());
    auto rows = efficiency_summary(points);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].final_recall == doctest::Approx(points.back().val_recall));
    CHECK(rows[0].iterations_to_95pct >= 0);
}
