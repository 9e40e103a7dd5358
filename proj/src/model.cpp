#include "dregn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace dregn {

PropagationGraph PropagationGraph::build(const InteractionDataset& ds) {
    PropagationGraph g;
    g.num_users = ds.num_users;
    g.num_items = ds.num_items;
    std::vector<std::int64_t> user_deg(ds.num_users, 0), item_deg(ds.num_items, 0);
    for (std::size_t u = 0; u < ds.num_users; ++u) {
        user_deg[u] = static_cast<std::int64_t>(ds.positives[u].size());
        for (int i : ds.positives[u]) item_deg[static_cast<std::size_t>(i)]++;
    }
    for (std::size_t u = 0; u < ds.num_users; ++u) {
        for (int i : ds.positives[u]) {
            double w = 1.0 / std::sqrt(static_cast<double>(user_deg[u]) *
                                       static_cast<double>(item_deg[static_cast<std::size_t>(i)]));
            g.edges.push_back({static_cast<int>(u), i, w});
        }
    }
    return g;
}

std::pair<Matrix, Matrix> PropagationGraph::step(const Matrix& user_in,
                                                 const Matrix& item_in) const {
    Matrix user_out = Matrix::Zero(user_in.rows(), user_in.cols());
    Matrix item_out = Matrix::Zero(item_in.rows(), item_in.cols());
    for (const Edge& e : edges) {
        user_out.row(e.user) += e.weight * item_in.row(e.item);
        item_out.row(e.item) += e.weight * user_in.row(e.user);
    }
    return {std::move(user_out), std::move(item_out)};
}

ScorerModel ScorerModel::init(std::size_t num_users, std::size_t num_items, int dim,
                              Backbone backbone, int num_layers, std::uint64_t seed) {
    ScorerModel m;
    m.backbone = backbone;
    m.num_layers = (backbone == Backbone::lightgc) ? num_layers : 0;
    m.dim = dim;
    m.user_embed.resize(static_cast<Eigen::Index>(num_users), dim);
    m.item_embed.resize(static_cast<Eigen::Index>(num_items), dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 0.1);
    for (Eigen::Index r = 0; r < m.user_embed.rows(); ++r)
        for (Eigen::Index c = 0; c < m.user_embed.cols(); ++c) m.user_embed(r, c) = dist(rng);
    for (Eigen::Index r = 0; r < m.item_embed.rows(); ++r)
        for (Eigen::Index c = 0; c < m.item_embed.cols(); ++c) m.item_embed(r, c) = dist(rng);
    return m;
}

namespace {

std::pair<Matrix, Matrix> layer_mean(int num_layers, const PropagationGraph& graph,
                                     const Matrix& user0, const Matrix& item0) {
    Matrix user_acc = user0;
    Matrix item_acc = item0;
    Matrix user_cur = user0;
    Matrix item_cur = item0;
    for (int l = 0; l < num_layers; ++l) {
        auto [u_next, i_next] = graph.step(user_cur, item_cur);
        user_cur = std::move(u_next);
        item_cur = std::move(i_next);
        user_acc += user_cur;
        item_acc += item_cur;
    }
    double inv = 1.0 / static_cast<double>(num_layers + 1);
    return {user_acc * inv, item_acc * inv};
}

}  // namespace

std::pair<Matrix, Matrix> propagate(const ScorerModel& model, const PropagationGraph& graph) {
    if (model.backbone == Backbone::mf || model.num_layers == 0)
        return {model.user_embed, model.item_embed};
    return layer_mean(model.num_layers, graph, model.user_embed, model.item_embed);
}

std::pair<Matrix, Matrix> propagate_adjoint(Backbone backbone, int num_layers,
                                            const PropagationGraph& graph,
                                            const Matrix& grad_user_out,
                                            const Matrix& grad_item_out) {
    if (backbone == Backbone::mf || num_layers == 0) return {grad_user_out, grad_item_out};
    return layer_mean(num_layers, graph, grad_user_out, grad_item_out);
}

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

Matrix inner_block(const Matrix& user_out, const Matrix& item_out,
                   const std::vector<int>& users, const std::vector<int>& items) {
    Matrix out(static_cast<Eigen::Index>(users.size()), static_cast<Eigen::Index>(items.size()));
    for (std::size_t a = 0; a < users.size(); ++a)
        for (std::size_t b = 0; b < items.size(); ++b)
            out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                user_out.row(users[a]).dot(item_out.row(items[b]));
    return out;
}

Matrix score_block(const Matrix& user_out, const Matrix& item_out,
                   const std::vector<int>& users, const std::vector<int>& items) {
    Matrix out = inner_block(user_out, item_out, users, items);
    return out.unaryExpr([](double x) { return softplus(x); });
}

std::vector<int> rank_items(const Matrix& user_out, const Matrix& item_out, int user,
                            const std::vector<int>& exclude, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    const Eigen::Index n = item_out.rows();
    Vector scores = item_out * user_out.row(user).transpose();
    std::vector<int> items;
    items.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < static_cast<int>(n); ++i)
        if (!std::binary_search(exclude.begin(), exclude.end(), i)) items.push_back(i);
    auto better = [&scores](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    auto cut = items.begin() + std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(items.size()));
    std::partial_sort(items.begin(), cut, items.end(), better);
    items.erase(cut, items.end());
    return items;
}

void save_checkpoint(const ScorerModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "dregn-checkpoint 1\n";
    out << (model.backbone == Backbone::mf ? "mf" : "lightgc") << ' ' << model.num_layers << ' '
        << model.dim << ' ' << model.user_embed.rows() << ' ' << model.item_embed.rows() << '\n';
    for (Eigen::Index r = 0; r < model.user_embed.rows(); ++r) {
        for (Eigen::Index c = 0; c < model.dim; ++c)
            out << model.user_embed(r, c) << (c + 1 == model.dim ? '\n' : ' ');
    }
    for (Eigen::Index r = 0; r < model.item_embed.rows(); ++r) {
        for (Eigen::Index c = 0; c < model.dim; ++c)
            out << model.item_embed(r, c) << (c + 1 == model.dim ? '\n' : ' ');
    }
}

ScorerModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "dregn-checkpoint" || version != 1)
        throw std::runtime_error("not a dregn checkpoint: " + path);
    std::string backbone;
    int layers = 0, dim = 0;
    Eigen::Index nu = 0, ni = 0;
    in >> backbone >> layers >> dim >> nu >> ni;
    if (!in || dim <= 0 || nu < 0 || ni < 0 || (backbone != "mf" && backbone != "lightgc"))
        throw std::runtime_error("corrupted checkpoint header: " + path);
    ScorerModel m;
    m.backbone = backbone == "mf" ? Backbone::mf : Backbone::lightgc;
    m.num_layers = layers;
    m.dim = dim;
    m.user_embed.resize(nu, dim);
    m.item_embed.resize(ni, dim);
    for (Eigen::Index r = 0; r < nu; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) in >> m.user_embed(r, c);
    for (Eigen::Index r = 0; r < ni; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) in >> m.item_embed(r, c);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return m;
}

}  // namespace dregn
