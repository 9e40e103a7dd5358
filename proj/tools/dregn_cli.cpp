// Command-line surface for the density-ratio ranking trainer.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dregn/curves.hpp"
#include "dregn/dataset.hpp"
#include "dregn/eval.hpp"
#include "dregn/model.hpp"
#include "dregn/risk.hpp"
#include "dregn/sampler.hpp"
#include "dregn/synth.hpp"
#include "dregn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunOptions {
    std::string data_dir;
    std::string out_dir;
    std::string risk_config_path;
    std::string frozen_checkpoint;
    double val_fraction = 0.1;
    std::uint64_t split_seed = 0;
    std::string backbone = "lightgc";
    int dim = 64;
    int layers = 3;
    dregn::RiskConfig risk;
    dregn::TrainConfig train;
};

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 1469598103934665603ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

json manifest_json(const RunOptions& opt, const dregn::InteractionDataset& ds) {
    json m;
    m["dataset"] = {{"path", opt.data_dir},
                    {"num_users", ds.num_users},
                    {"num_items", ds.num_items},
                    {"train_interactions", ds.train_interactions()},
                    {"content_hash", fnv1a_file(opt.data_dir + "/train.txt")}};
    m["risk"] = {{"family", dregn::to_string(opt.risk.family)},
                 {"weighting", dregn::to_string(opt.risk.weighting)},
                 {"is_correction", opt.risk.use_is_correction},
                 {"nn_correction", opt.risk.use_nn_correction},
                 {"d_bar", opt.risk.d_bar},
                 {"lambda", opt.risk.l2_lambda},
                 {"c0", opt.risk.pop_c0},
                 {"alpha", opt.risk.pop_alpha}};
    m["train"] = {{"optimizer", opt.train.optimizer == dregn::Optimizer::adam ? "adam" : "sgd"},
                  {"learning_rate", opt.train.learning_rate},
                  {"epochs", opt.train.epochs},
                  {"eval_every", opt.train.eval_every},
                  {"patience", opt.train.early_stop_patience},
                  {"seed", opt.train.seed},
                  {"batch_users", opt.train.batch_users},
                  {"k", opt.train.eval_k}};
    m["model"] = {{"backbone", opt.backbone}, {"dim", opt.dim}, {"layers", opt.layers}};
    m["split"] = {{"val_fraction", opt.val_fraction}, {"seed", opt.split_seed}};
    if (!opt.frozen_checkpoint.empty()) m["frozen_checkpoint"] = opt.frozen_checkpoint;
    return m;
}

std::string default_run_dir(const RunOptions& opt) {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream name;
    name << "run-" << std::put_time(&tm, "%Y%m%d-%H%M%S");
    std::hash<std::string> hasher;
    std::ostringstream cfg;
    cfg << dregn::to_string(opt.risk.family) << dregn::to_string(opt.risk.weighting)
        << opt.risk.l2_lambda << opt.risk.d_bar << opt.train.learning_rate << opt.train.seed;
    name << '-' << std::hex << (hasher(cfg.str()) & 0xffffffu);
    return name.str();
}

void add_run_flags(CLI::App* cmd, RunOptions& opt) {
    cmd->add_option("--data", opt.data_dir, "dataset directory (train.txt [+ test.txt])")
        ->required();
    cmd->add_option("--out", opt.out_dir, "run directory (default: timestamp + config hash)");
    cmd->add_option("--risk", opt.risk.family, "ranking_ulsif | pu_regression | bpr")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, dregn::RiskFamily>{
                {"ranking_ulsif", dregn::RiskFamily::ranking_ulsif},
                {"pu_regression", dregn::RiskFamily::pu_regression},
                {"bpr", dregn::RiskFamily::bpr}}));
    cmd->add_option("--weighting", opt.risk.weighting,
                    "uniform | popularity | hard_adaptive | hard_static")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, dregn::WeightingKind>{
                {"uniform", dregn::WeightingKind::uniform},
                {"popularity", dregn::WeightingKind::popularity},
                {"hard_adaptive", dregn::WeightingKind::hard_adaptive},
                {"hard_static", dregn::WeightingKind::hard_static}}));
    cmd->add_flag("--is-correction", opt.risk.use_is_correction, "sampling-bias correction");
    cmd->add_flag("--nn", opt.risk.use_nn_correction, "non-negative risk correction");
    cmd->add_option("--dbar", opt.risk.d_bar, "density-ratio upper bound for --nn");
    cmd->add_option("--lambda", opt.risk.l2_lambda, "L2 regularisation weight");
    cmd->add_option("--c0", opt.risk.pop_c0, "popularity weighting scale");
    cmd->add_option("--alpha", opt.risk.pop_alpha, "popularity weighting skew");
    cmd->add_option("--optimizer", opt.train.optimizer, "adam | sgd")
        ->transform(CLI::CheckedTransformer(std::map<std::string, dregn::Optimizer>{
            {"adam", dregn::Optimizer::adam}, {"sgd", dregn::Optimizer::sgd}}));
    cmd->add_option("--lr", opt.train.learning_rate, "learning rate");
    cmd->add_option("--epochs", opt.train.epochs, "epoch budget");
    cmd->add_option("--eval-every", opt.train.eval_every, "epochs between validation runs");
    cmd->add_option("--patience", opt.train.early_stop_patience, "early-stop patience (evals)");
    cmd->add_option("--seed", opt.train.seed, "training seed");
    cmd->add_option("--batch-users", opt.train.batch_users, "users per mini-batch");
    cmd->add_option("--k", opt.train.eval_k, "metric cutoff K");
    cmd->add_option("--backbone", opt.backbone, "mf | lightgc")
        ->check(CLI::IsMember({"mf", "lightgc"}));
    cmd->add_option("--dim", opt.dim, "embedding dimension");
    cmd->add_option("--layers", opt.layers, "graph convolution layers (lightgc)");
    cmd->add_option("--val-fraction", opt.val_fraction,
                    "fraction of train positives held out per user for validation");
    cmd->add_option("--split-seed", opt.split_seed, "validation split seed");
    cmd->add_option("--frozen", opt.frozen_checkpoint,
                    "checkpoint supplying static hard-sample weights");
    cmd->add_option("--risk-config", opt.risk_config_path,
                    "flat key=value risk configuration file (flags override it)");
}

int run_train(RunOptions opt) {
    dregn::InteractionDataset ds = dregn::load_dataset_dir(opt.data_dir);
    if (opt.val_fraction > 0.0)
        dregn::split_holdout(ds, opt.val_fraction, opt.split_seed, dregn::Split::validation);

    if (opt.out_dir.empty()) opt.out_dir = default_run_dir(opt);
    fs::create_directories(opt.out_dir);
    {
        std::ofstream mf(opt.out_dir + "/manifest.json");
        mf << manifest_json(opt, ds).dump(2) << '\n';
    }
    opt.risk.save(opt.out_dir + "/risk.cfg");

    const auto backbone = opt.backbone == "mf" ? dregn::Backbone::mf : dregn::Backbone::lightgc;
    dregn::ScorerModel model = dregn::ScorerModel::init(ds.num_users, ds.num_items, opt.dim,
                                                        backbone, opt.layers, opt.train.seed);
    dregn::ScorerModel frozen;
    const dregn::ScorerModel* frozen_ptr = nullptr;
    if (opt.risk.weighting == dregn::WeightingKind::hard_static) {
        if (opt.frozen_checkpoint.empty()) {
            std::cerr << "error: --weighting hard_static requires --frozen\n";
            return 2;
        }
        frozen = dregn::load_checkpoint(opt.frozen_checkpoint);
        frozen_ptr = &frozen;
    }

    dregn::TrainResult result = dregn::train(ds, std::move(model), opt.risk, opt.train, frozen_ptr);
    dregn::save_checkpoint(result.model, opt.out_dir + "/best.ckpt");
    result.log.write_csv(opt.out_dir + "/trainlog.csv",
                         dregn::to_string(opt.risk.family) + "+" +
                             dregn::to_string(opt.risk.weighting));

    if (!result.log.records.empty()) {
        const auto& last = result.log.records.back();
        std::cout << "iterations " << result.total_iterations << "\n"
                  << "val_recall@" << opt.train.eval_k << ' ' << last.val_recall << "\n"
                  << "val_ndcg@" << opt.train.eval_k << ' ' << last.val_ndcg << "\n";
    }
    std::cout << "artifacts in " << opt.out_dir << "\n";
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data_dir, const std::string& split,
             int k, double val_fraction, std::uint64_t split_seed, const std::string& out) {
    dregn::ScorerModel model = dregn::load_checkpoint(checkpoint);
    dregn::InteractionDataset ds = dregn::load_dataset_dir(data_dir);
    if (val_fraction > 0.0)
        dregn::split_holdout(ds, val_fraction, split_seed, dregn::Split::validation);
    const dregn::PropagationGraph graph = dregn::PropagationGraph::build(ds);
    auto [user_out, item_out] = dregn::propagate(model, graph);
    dregn::MetricReport report = dregn::evaluate(
        user_out, item_out, ds, split == "test" ? dregn::Split::test : dregn::Split::validation, k);
    std::ostringstream rows;
    rows << "split=" << split << "\nK=" << k << "\nusers_evaluated=" << report.users_evaluated
         << "\nrecall@" << k << '=' << report.recall_at_k << "\nndcg@" << k << '='
         << report.ndcg_at_k << '\n';
    std::cout << rows.str();
    if (!out.empty()) {
        std::ofstream f(out);
        f << rows.str();
    }
    return 0;
}

int run_sweep(RunOptions opt, std::vector<double> lambda_grid, std::vector<double> dbar_grid) {
    if (lambda_grid.empty()) lambda_grid = {opt.risk.l2_lambda};
    if (dbar_grid.empty()) dbar_grid = {opt.risk.d_bar};
    if (opt.out_dir.empty()) opt.out_dir = default_run_dir(opt) + "-sweep";
    fs::create_directories(opt.out_dir);

    struct Row {
        double lambda, dbar, ndcg, recall;
        bool failed;
        std::string dir;
    };
    std::vector<Row> rows;
    int idx = 0;
    for (double lam : lambda_grid) {
        for (double db : dbar_grid) {
            RunOptions point = opt;
            point.risk.l2_lambda = lam;
            point.risk.d_bar = db;
            point.out_dir = opt.out_dir + "/point-" + std::to_string(idx++);
            Row row{lam, db, 0.0, 0.0, false, point.out_dir};
            try {
                if (run_train(point) != 0) throw std::runtime_error("train failed");
                auto pts = dregn::read_curve_csv(point.out_dir + "/trainlog.csv");
                if (!pts.empty()) {
                    row.ndcg = pts.back().val_ndcg;
                    row.recall = pts.back().val_recall;
                }
            } catch (const std::exception& e) {
                row.failed = true;
                std::cerr << "grid point lambda=" << lam << " dbar=" << db
                          << " failed: " << e.what() << "\n";
            }
            rows.push_back(std::move(row));
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.failed != b.failed) return !a.failed;
        return a.ndcg > b.ndcg;
    });
    std::ofstream out(opt.out_dir + "/sweep.csv");
    out.precision(12);
    out << "lambda,d_bar,val_ndcg,val_recall,status,run_dir\n";
    for (const auto& r : rows)
        out << r.lambda << ',' << r.dbar << ',' << r.ndcg << ',' << r.recall << ','
            << (r.failed ? "failed" : "ok") << ',' << r.dir << '\n';
    std::cout << "sweep summary in " << opt.out_dir << "/sweep.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"density-ratio personalised ranking from implicit feedback"};
    app.require_subcommand(1);

    RunOptions train_opt;
    auto* cmd_train = app.add_subcommand("train", "train a model");
    add_run_flags(cmd_train, train_opt);

    std::string eval_ckpt, eval_data, eval_split = "test", eval_out;
    int eval_k = 20;
    double eval_val_fraction = 0.1;
    std::uint64_t eval_split_seed = 0;
    auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint");
    cmd_eval->add_option("--checkpoint", eval_ckpt)->required();
    cmd_eval->add_option("--data", eval_data)->required();
    cmd_eval->add_option("--split", eval_split)->check(CLI::IsMember({"validation", "test"}));
    cmd_eval->add_option("--k", eval_k);
    cmd_eval->add_option("--val-fraction", eval_val_fraction);
    cmd_eval->add_option("--split-seed", eval_split_seed);
    cmd_eval->add_option("--out", eval_out, "also write the report here");

    RunOptions sweep_opt;
    std::vector<double> lambda_grid, dbar_grid;
    auto* cmd_sweep = app.add_subcommand("sweep", "grid search over lambda and d_bar");
    add_run_flags(cmd_sweep, sweep_opt);
    cmd_sweep->add_option("--lambda-grid", lambda_grid, "lambda grid values");
    cmd_sweep->add_option("--dbar-grid", dbar_grid, "d_bar grid values");

    dregn::SynthConfig synth_cfg;
    std::string synth_out;
    auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic corpus");
    cmd_synth->add_option("--users", synth_cfg.num_users);
    cmd_synth->add_option("--items", synth_cfg.num_items);
    cmd_synth->add_option("--latent", synth_cfg.latent_dim);
    cmd_synth->add_option("--pos-per-user", synth_cfg.positives_per_user);
    cmd_synth->add_option("--test-per-user", synth_cfg.test_per_user);
    cmd_synth->add_option("--temperature", synth_cfg.temperature);
    cmd_synth->add_option("--seed", synth_cfg.seed);
    cmd_synth->add_option("--out", synth_out)->required();

    std::vector<std::string> curve_logs;
    std::string curves_out = "curves.csv", curves_summary = "curves_summary.csv";
    auto* cmd_curves = app.add_subcommand("curves", "merge train logs and summarise efficiency");
    cmd_curves->add_option("--log", curve_logs, "train log CSVs")->required();
    cmd_curves->add_option("--out", curves_out);
    cmd_curves->add_option("--summary", curves_summary);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_train->parsed()) {
            if (!train_opt.risk_config_path.empty()) {
                dregn::RiskConfig base = dregn::RiskConfig::load(train_opt.risk_config_path);
                // flags that were not given fall back to the config file
                RunOptions defaults;
                auto keep = [&](auto flag_value, auto default_value, auto file_value) {
                    return flag_value != default_value ? flag_value : file_value;
                };
                train_opt.risk.family =
                    keep(train_opt.risk.family, defaults.risk.family, base.family);
                train_opt.risk.weighting =
                    keep(train_opt.risk.weighting, defaults.risk.weighting, base.weighting);
                train_opt.risk.use_is_correction = train_opt.risk.use_is_correction ||
                                                   base.use_is_correction;
                train_opt.risk.use_nn_correction = train_opt.risk.use_nn_correction ||
                                                   base.use_nn_correction;
                train_opt.risk.d_bar = keep(train_opt.risk.d_bar, defaults.risk.d_bar, base.d_bar);
                train_opt.risk.l2_lambda =
                    keep(train_opt.risk.l2_lambda, defaults.risk.l2_lambda, base.l2_lambda);
                train_opt.risk.pop_c0 = keep(train_opt.risk.pop_c0, defaults.risk.pop_c0, base.pop_c0);
                train_opt.risk.pop_alpha =
                    keep(train_opt.risk.pop_alpha, defaults.risk.pop_alpha, base.pop_alpha);
            }
            return run_train(train_opt);
        }
        if (cmd_eval->parsed())
            return run_eval(eval_ckpt, eval_data, eval_split, eval_k, eval_val_fraction,
                            eval_split_seed, eval_out);
        if (cmd_sweep->parsed()) return run_sweep(sweep_opt, lambda_grid, dbar_grid);
        if (cmd_synth->parsed()) {
            fs::create_directories(synth_out);
            dregn::SynthCorpus corpus = dregn::generate_synthetic(synth_cfg);
            dregn::write_synthetic(corpus, synth_out);
            std::cout << "corpus in " << synth_out << "\n";
            return 0;
        }
        if (cmd_curves->parsed()) {
            std::vector<dregn::CurvePoint> points;
            for (const auto& log : curve_logs) {
                auto pts = dregn::read_curve_csv(log);
                points.insert(points.end(), pts.begin(), pts.end());
            }
            dregn::write_merged_csv(points, curves_out);
            dregn::write_summary_csv(dregn::efficiency_summary(points), curves_summary);
            std::cout << "curves in " << curves_out << ", summary in " << curves_summary << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
