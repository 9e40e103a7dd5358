#include "dregn/weighting.hpp"

#include <cmath>
#include <stdexcept>

namespace dregn {

WeightMatrices uniform_weights(Eigen::Index num_users, Eigen::Index num_items) {
    return {Matrix::Ones(num_users, num_items), Matrix::Ones(num_users, num_items)};
}

WeightMatrices popularity_weights(const InteractionDataset& ds, const std::vector<int>& items,
                                  Eigen::Index num_users, double c0, double alpha) {
    if (!(c0 > 0.0)) throw std::invalid_argument("c0 must be positive");
    double denom = 0.0;
    for (std::size_t j = 0; j < ds.num_items; ++j)
        denom += std::pow(static_cast<double>(ds.item_popularity[j]), alpha);
    if (!(denom > 0.0))
        throw std::runtime_error("popularity_weights: all-zero popularity");

    WeightMatrices w;
    w.pos = Matrix::Ones(num_users, static_cast<Eigen::Index>(items.size()));
    w.neg.resize(num_users, static_cast<Eigen::Index>(items.size()));
    for (std::size_t b = 0; b < items.size(); ++b) {
        const double pop = static_cast<double>(ds.item_popularity[static_cast<std::size_t>(items[b])]);
        const double v = c0 * std::pow(pop, alpha) / denom;
        w.neg.col(static_cast<Eigen::Index>(b)).setConstant(v);
    }
    return w;
}

WeightMatrices hard_sample_weights(const Matrix& scores) {
    if ((scores.array() <= 0.0).any())
        throw std::domain_error("hard_sample_weights: scores must be strictly positive");
    WeightMatrices w;
    w.pos = scores.cwiseInverse();
    w.neg = scores;
    return w;
}

WeightMatrices static_hard_weights(const Matrix& frozen_scores) {
    return hard_sample_weights(frozen_scores);
}

}  // namespace dregn
