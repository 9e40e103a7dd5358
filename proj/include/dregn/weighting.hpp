#pragma once

#include <vector>

#include <Eigen/Core>

#include "dregn/dataset.hpp"
#include "dregn/model.hpp"

namespace dregn {

struct WeightMatrices {
    Matrix pos;  // w+
    Matrix neg;  // w-
};

WeightMatrices uniform_weights(Eigen::Index num_users, Eigen::Index num_items);

// w+ = 1, w- column for item i = c0 * pop(i)^alpha / sum_{j in I} pop(j)^alpha.
// The denominator runs over the full corpus, not the batch.
WeightMatrices popularity_weights(const InteractionDataset& ds, const std::vector<int>& items,
                                  Eigen::Index num_users, double c0, double alpha);

// w+ = 1/r, w- = r, entrywise; the per-user constants cancel under
// self-normalisation and are fixed to 1.
WeightMatrices hard_sample_weights(const Matrix& scores);

// Same formulas evaluated on scores from a frozen checkpoint.
WeightMatrices static_hard_weights(const Matrix& frozen_scores);

}  // namespace dregn
