#include "dregn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace dregn {

SynthCorpus generate_synthetic(const SynthConfig& cfg) {
    if (cfg.positives_per_user > static_cast<int>(cfg.num_items))
        throw std::invalid_argument("positives_per_user exceeds num_items");
    if (cfg.test_per_user >= cfg.positives_per_user && cfg.positives_per_user > 0)
        throw std::invalid_argument("test_per_user must leave at least one train positive");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto nu = static_cast<Eigen::Index>(cfg.num_users);
    const auto ni = static_cast<Eigen::Index>(cfg.num_items);
    Matrix user_latent(nu, cfg.latent_dim), item_latent(ni, cfg.latent_dim);
    for (Eigen::Index r = 0; r < nu; ++r)
        for (int c = 0; c < cfg.latent_dim; ++c) user_latent(r, c) = normal(rng);
    for (Eigen::Index r = 0; r < ni; ++r)
        for (int c = 0; c < cfg.latent_dim; ++c) item_latent(r, c) = normal(rng);

    SynthCorpus corpus;
    corpus.positive_prob.resize(nu, ni);
    for (Eigen::Index u = 0; u < nu; ++u) {
        Vector logits = cfg.temperature * (item_latent * user_latent.row(u).transpose());
        const double mx = logits.maxCoeff();
        Vector p = (logits.array() - mx).exp();
        corpus.positive_prob.row(u) = (p / p.sum()).transpose();
    }
    corpus.true_ratio = corpus.positive_prob * static_cast<double>(cfg.num_items);

    InteractionDataset& ds = corpus.dataset;
    ds.num_users = cfg.num_users;
    ds.num_items = cfg.num_items;
    ds.positives.assign(cfg.num_users, {});
    ds.val_positives.assign(cfg.num_users, {});
    ds.test_positives.assign(cfg.num_users, {});

    for (Eigen::Index u = 0; u < nu; ++u) {
        // draw positives without replacement proportional to p(i|u,y=+1)
        std::vector<double> weight(cfg.num_items);
        for (Eigen::Index i = 0; i < ni; ++i)
            weight[static_cast<std::size_t>(i)] = corpus.positive_prob(u, i);
        std::vector<int> drawn;
        for (int k = 0; k < cfg.positives_per_user; ++k) {
            std::discrete_distribution<int> dist(weight.begin(), weight.end());
            const int i = dist(rng);
            drawn.push_back(i);
            weight[static_cast<std::size_t>(i)] = 0.0;
        }
        std::vector<int> test_items;
        if (cfg.test_per_user > 0) {
            std::vector<int> order = drawn;
            std::shuffle(order.begin(), order.end(), rng);
            test_items.assign(order.begin(), order.begin() + cfg.test_per_user);
            std::sort(test_items.begin(), test_items.end());
        }
        std::sort(drawn.begin(), drawn.end());
        auto& tr = ds.positives[static_cast<std::size_t>(u)];
        std::set_difference(drawn.begin(), drawn.end(), test_items.begin(), test_items.end(),
                            std::back_inserter(tr));
        ds.test_positives[static_cast<std::size_t>(u)] = std::move(test_items);
    }
    recompute_derived(ds);
    return corpus;
}

void write_synthetic(const SynthCorpus& corpus, const std::string& dir) {
    write_adjacency(corpus.dataset, Split::train, dir + "/train.txt");
    write_adjacency(corpus.dataset, Split::test, dir + "/test.txt");
    std::ofstream out(dir + "/ratios.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/ratios.csv");
    out.precision(12);
    out << "user,item,ratio\n";
    for (Eigen::Index u = 0; u < corpus.true_ratio.rows(); ++u)
        for (Eigen::Index i = 0; i < corpus.true_ratio.cols(); ++i)
            out << u << ',' << i << ',' << corpus.true_ratio(u, i) << '\n';
}

Matrix load_ratio_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    struct Row {
        int u, i;
        double v;
    };
    std::vector<Row> rows;
    int max_u = -1, max_i = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Row r{};
        if (std::sscanf(line.c_str(), "%d,%d,%lf", &r.u, &r.i, &r.v) != 3)
            throw std::runtime_error("malformed ratio row: " + line);
        rows.push_back(r);
        max_u = std::max(max_u, r.u);
        max_i = std::max(max_i, r.i);
    }
    Matrix table = Matrix::Zero(max_u + 1, max_i + 1);
    for (const Row& r : rows) table(r.u, r.i) = r.v;
    return table;
}

}  // namespace dregn
