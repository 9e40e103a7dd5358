#include "dregn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dregn/eval.hpp"

namespace dregn {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be non-negative");
    if (early_stop_patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
    if (batch_users < 1) throw std::invalid_argument("batch_users must be >= 1");
    if (eval_k < 1) throw std::invalid_argument("eval_k must be >= 1");
}

void TrainLog::write_csv(const std::string& path, const std::string& method) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(12);
    out << "method,epoch,iteration,seconds,train_loss,val_recall,val_ndcg\n";
    for (const auto& r : records)
        out << method << ',' << r.epoch << ',' << r.iteration << ',' << r.seconds << ','
            << r.train_loss << ',' << r.val_recall << ',' << r.val_ndcg << '\n';
}

Vector estimate_priors(const InteractionDataset& ds) {
    return ds.user_prior;
}

WeightMatrices build_weights(const RiskConfig& cfg, const InteractionDataset& ds,
                             const MiniBatch& batch, const Matrix& scores,
                             const Matrix* frozen_scores) {
    const auto nu = static_cast<Eigen::Index>(batch.users.size());
    const auto ni = static_cast<Eigen::Index>(batch.items.size());
    switch (cfg.weighting) {
        case WeightingKind::uniform:
            return uniform_weights(nu, ni);
        case WeightingKind::popularity:
            return popularity_weights(ds, batch.items, nu, cfg.pop_c0, cfg.pop_alpha);
        case WeightingKind::hard_adaptive:
            return hard_sample_weights(scores);
        case WeightingKind::hard_static:
            if (frozen_scores == nullptr)
                throw std::runtime_error("hard_static weighting requires a frozen checkpoint");
            return static_hard_weights(*frozen_scores);
    }
    throw std::logic_error("unreachable");
}

namespace {

// d softplus / d x = sigmoid(x)
double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Scatter batch-block score gradients back to full propagated tables, then
// through the propagation adjoint and batch-local L2 into layer-0 gradients.
BatchGradients backprop(const ScorerModel& model, const PropagationGraph& graph,
                        const Matrix& user_out, const Matrix& item_out,
                        const std::vector<int>& users, const std::vector<int>& items,
                        const Matrix& grad_inner, double loss_value, double lambda) {
    Matrix grad_user_out = Matrix::Zero(user_out.rows(), user_out.cols());
    Matrix grad_item_out = Matrix::Zero(item_out.rows(), item_out.cols());
    for (std::size_t a = 0; a < users.size(); ++a) {
        for (std::size_t b = 0; b < items.size(); ++b) {
            const double g = grad_inner(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            if (g == 0.0) continue;
            grad_user_out.row(users[a]) += g * item_out.row(items[b]);
            grad_item_out.row(items[b]) += g * user_out.row(users[a]);
        }
    }
    auto [gu, gi] = propagate_adjoint(model.backbone, model.num_layers, graph, grad_user_out,
                                      grad_item_out);
    BatchGradients out;
    out.loss = loss_value;
    out.grad_user = std::move(gu);
    out.grad_item = std::move(gi);
    if (lambda > 0.0) {
        out.loss += l2_penalty(model, users, items, lambda);
        for (int u : users) out.grad_user.row(u) += lambda * model.user_embed.row(u);
        for (int i : items) out.grad_item.row(i) += lambda * model.item_embed.row(i);
    }
    return out;
}

}  // namespace

BatchGradients dre_family_gradients(const ScorerModel& model, const PropagationGraph& graph,
                                    const MiniBatch& batch, const WeightMatrices& weights,
                                    const RiskConfig& cfg) {
    auto [user_out, item_out] = propagate(model, graph);
    Matrix inner = inner_block(user_out, item_out, batch.users, batch.items);

    BatchLossInput input;
    input.scores = inner.unaryExpr([](double x) { return softplus(x); });
    input.pos_mask = batch.pos_mask;
    input.priors = batch.priors;
    input.weights_pos = weights.pos;
    input.weights_neg = weights.neg;
    input.item_sampling_prob = batch.item_sampling_prob;

    LossResult lr = (cfg.family == RiskFamily::ranking_ulsif) ? ranking_ulsif_loss(input, cfg)
                                                              : pu_regression_loss(input, cfg);
    // chain rule through softplus
    Matrix grad_inner = lr.grad_scores.binaryExpr(
        inner, [](double g, double x) { return g * sigmoid(x); });
    return backprop(model, graph, user_out, item_out, batch.users, batch.items, grad_inner,
                    lr.loss, cfg.l2_lambda);
}

BatchGradients bpr_gradients(const ScorerModel& model, const PropagationGraph& graph,
                             const std::vector<BprTriple>& triples, double lambda) {
    auto [user_out, item_out] = propagate(model, graph);
    const auto n = static_cast<Eigen::Index>(triples.size());
    Vector pos(n), neg(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& [u, ip, in] = triples[static_cast<std::size_t>(k)];
        pos[k] = user_out.row(u).dot(item_out.row(ip));
        neg[k] = user_out.row(u).dot(item_out.row(in));
    }
    BprResult br = bpr_loss(pos, neg);

    Matrix grad_user_out = Matrix::Zero(user_out.rows(), user_out.cols());
    Matrix grad_item_out = Matrix::Zero(item_out.rows(), item_out.cols());
    std::vector<int> users, items;
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& [u, ip, in] = triples[static_cast<std::size_t>(k)];
        const double g = br.grad_pos_diff[k];
        grad_user_out.row(u) += g * (item_out.row(ip) - item_out.row(in));
        grad_item_out.row(ip) += g * user_out.row(u);
        grad_item_out.row(in) -= g * user_out.row(u);
        users.push_back(u);
        items.push_back(ip);
        items.push_back(in);
    }
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());

    auto [gu, gi] = propagate_adjoint(model.backbone, model.num_layers, graph, grad_user_out,
                                      grad_item_out);
    BatchGradients out;
    out.loss = br.loss;
    out.grad_user = std::move(gu);
    out.grad_item = std::move(gi);
    if (lambda > 0.0) {
        out.loss += l2_penalty(model, users, items, lambda);
        for (int u : users) out.grad_user.row(u) += lambda * model.user_embed.row(u);
        for (int i : items) out.grad_item.row(i) += lambda * model.item_embed.row(i);
    }
    return out;
}

namespace {

struct AdamState {
    Matrix m_user, v_user, m_item, v_item;
    long t = 0;
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

    AdamState(Eigen::Index nu, Eigen::Index ni, Eigen::Index d)
        : m_user(Matrix::Zero(nu, d)),
          v_user(Matrix::Zero(nu, d)),
          m_item(Matrix::Zero(ni, d)),
          v_item(Matrix::Zero(ni, d)) {}

    void update(Matrix& table, Matrix& m, Matrix& v, const Matrix& grad, double lr) {
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        table -= (lr / bc1) * m.cwiseQuotient(((v / bc2).cwiseSqrt().array() + eps).matrix());
    }

    void step(ScorerModel& model, const BatchGradients& g, double lr) {
        ++t;
        update(model.user_embed, m_user, v_user, g.grad_user, lr);
        update(model.item_embed, m_item, v_item, g.grad_item, lr);
    }
};

std::vector<BprTriple> sample_bpr_triples(const InteractionDataset& ds, const MiniBatch& batch,
                                          std::mt19937_64& rng) {
    std::vector<BprTriple> triples;
    std::uniform_int_distribution<int> item_dist(0, static_cast<int>(ds.num_items) - 1);
    for (int u : batch.users) {
        const auto& pos = ds.positives[static_cast<std::size_t>(u)];
        if (pos.size() >= ds.num_items) continue;  // no negative exists
        for (int ip : pos) {
            int in;
            do {
                in = item_dist(rng);
            } while (ds.has_positive(u, in));
            triples.push_back({u, ip, in});
        }
    }
    return triples;
}

bool has_split_positives(const std::vector<std::vector<int>>& sets) {
    return std::any_of(sets.begin(), sets.end(), [](const auto& s) { return !s.empty(); });
}

}  // namespace

TrainResult train(const InteractionDataset& ds, ScorerModel model, const RiskConfig& risk_cfg,
                  const TrainConfig& train_cfg, const ScorerModel* frozen) {
    risk_cfg.validate();
    train_cfg.validate();
    if (ds.eligible_users().empty()) throw std::invalid_argument("dataset has no train positives");

    const PropagationGraph graph = PropagationGraph::build(ds);
    BatchSampler sampler(ds, std::min<int>(train_cfg.batch_users,
                                           static_cast<int>(ds.eligible_users().size())),
                         train_cfg.seed);
    std::mt19937_64 neg_rng(train_cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    // Frozen scorer outputs for the static weighting strategy.
    Matrix frozen_user_out, frozen_item_out;
    if (risk_cfg.weighting == WeightingKind::hard_static) {
        if (frozen == nullptr)
            throw std::runtime_error("hard_static weighting requires a frozen checkpoint");
        auto [fu, fi] = propagate(*frozen, graph);
        frozen_user_out = std::move(fu);
        frozen_item_out = std::move(fi);
    }

    AdamState adam(model.user_embed.rows(), model.item_embed.rows(), model.dim);
    const bool use_adam = train_cfg.optimizer == Optimizer::adam;

    TrainResult result;
    result.model = model;
    const bool can_eval = train_cfg.eval_every > 0 && has_split_positives(ds.val_positives);
    double best_ndcg = -1.0;
    int evals_since_best = 0;
    long iteration = 0;
    const auto t_start = std::chrono::steady_clock::now();

    for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        const int steps = sampler.batches_per_epoch();
        for (int s = 0; s < steps; ++s) {
            MiniBatch batch = sampler.next();
            BatchGradients grads;
            if (risk_cfg.family == RiskFamily::bpr) {
                auto triples = sample_bpr_triples(ds, batch, neg_rng);
                grads = bpr_gradients(model, graph, triples, risk_cfg.l2_lambda);
            } else {
                if (risk_cfg.use_is_correction)
                    fill_sampling_probs(ds, batch, sampler.batch_users());
                auto [user_out, item_out] = propagate(model, graph);
                Matrix scores = score_block(user_out, item_out, batch.users, batch.items);
                const Matrix* frozen_ptr = nullptr;
                Matrix frozen_scores;
                if (risk_cfg.weighting == WeightingKind::hard_static) {
                    frozen_scores = score_block(frozen_user_out, frozen_item_out, batch.users,
                                                batch.items);
                    frozen_ptr = &frozen_scores;
                }
                WeightMatrices weights =
                    build_weights(risk_cfg, ds, batch, scores, frozen_ptr);
                grads = dre_family_gradients(model, graph, batch, weights, risk_cfg);
            }
            ++iteration;
            if (!std::isfinite(grads.loss) || !grads.grad_user.allFinite() ||
                !grads.grad_item.allFinite()) {
                std::ostringstream msg;
                msg << "non-finite loss or gradient at iteration " << iteration << " (epoch "
                    << epoch << "), loss=" << grads.loss;
                throw std::runtime_error(msg.str());
            }
            if (use_adam) {
                adam.step(model, grads, train_cfg.learning_rate);
            } else {
                model.user_embed -= train_cfg.learning_rate * grads.grad_user;
                model.item_embed -= train_cfg.learning_rate * grads.grad_item;
            }
            epoch_loss += grads.loss;
        }
        epoch_loss /= static_cast<double>(steps);

        const bool eval_now = train_cfg.eval_every > 0 && (epoch % train_cfg.eval_every == 0);
        if (eval_now || epoch == train_cfg.epochs) {
            TrainRecord rec;
            rec.epoch = epoch;
            rec.iteration = iteration;
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                              .count();
            rec.train_loss = epoch_loss;
            if (can_eval) {
                auto [user_out, item_out] = propagate(model, graph);
                MetricReport report =
                    evaluate(user_out, item_out, ds, Split::validation, train_cfg.eval_k);
                rec.val_recall = report.recall_at_k;
                rec.val_ndcg = report.ndcg_at_k;
                if (report.ndcg_at_k > best_ndcg) {
                    best_ndcg = report.ndcg_at_k;
                    evals_since_best = 0;
                    result.model = model;
                } else {
                    ++evals_since_best;
                }
            }
            result.log.records.push_back(rec);
            if (can_eval && eval_now && evals_since_best >= train_cfg.early_stop_patience) break;
        }
    }

    if (!can_eval) result.model = model;  // no validation: return the final model
    result.total_iterations = iteration;
    return result;
}

}  // namespace dregn
