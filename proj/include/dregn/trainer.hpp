#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dregn/dataset.hpp"
#include "dregn/model.hpp"
#include "dregn/risk.hpp"
#include "dregn/sampler.hpp"
#include "dregn/weighting.hpp"

namespace dregn {

enum class Optimizer { sgd, adam };

struct TrainConfig {
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 0.05;
    int epochs = 100;
    int eval_every = 5;          // epochs between validation evaluations; 0 disables
    int early_stop_patience = 10;
    std::uint64_t seed = 0;
    int batch_users = 256;
    int eval_k = 20;

    void validate() const;
};

struct TrainRecord {
    int epoch = 0;
    long iteration = 0;
    double seconds = 0.0;
    double train_loss = 0.0;
    double val_recall = 0.0;
    double val_ndcg = 0.0;
};

struct TrainLog {
    std::vector<TrainRecord> records;

    void write_csv(const std::string& path, const std::string& method) const;
};

struct TrainResult {
    ScorerModel model;  // best-validation checkpoint (final model if never evaluated)
    TrainLog log;
    long total_iterations = 0;
};

// pi_u^+ = |I_u^+| / |I| per user; zero for users without train positives.
Vector estimate_priors(const InteractionDataset& ds);

struct BatchGradients {
    double loss = 0.0;       // risk + L2
    Matrix grad_user;        // full layer-0 user table gradient
    Matrix grad_item;
};

// Loss and full-table gradients for the ranking-uLSIF / PU families with the
// given frozen weight matrices. Gradients flow through propagation into the
// layer-0 tables; weights and s(i) are constants.
BatchGradients dre_family_gradients(const ScorerModel& model, const PropagationGraph& graph,
                                    const MiniBatch& batch, const WeightMatrices& weights,
                                    const RiskConfig& cfg);

// (user, pos item, neg item) triples.
using BprTriple = std::array<int, 3>;

BatchGradients bpr_gradients(const ScorerModel& model, const PropagationGraph& graph,
                             const std::vector<BprTriple>& triples, double lambda);

// Weight matrices for a batch under the configured strategy. frozen_scores is
// required for hard_static and ignored otherwise.
WeightMatrices build_weights(const RiskConfig& cfg, const InteractionDataset& ds,
                             const MiniBatch& batch, const Matrix& scores,
                             const Matrix* frozen_scores);

// Executes the training loop: sample -> propagate -> score -> weight ->
// loss+L2 -> update, with periodic validation and early stopping on nDCG@K.
// frozen (hard_static only) supplies the checkpoint that fixes the weights.
TrainResult train(const InteractionDataset& ds, ScorerModel model, const RiskConfig& risk_cfg,
                  const TrainConfig& train_cfg, const ScorerModel* frozen = nullptr);

}  // namespace dregn
