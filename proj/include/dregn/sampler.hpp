#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "dregn/dataset.hpp"
#include "dregn/model.hpp"

namespace dregn {

/// Mini-batch per the user-based sampling scheme: uniformly drawn users,
/// item block = sorted union of their train positives.
struct MiniBatch {
    std::vector<int> users;
    std::vector<int> items;  // sorted
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> pos_mask;  // |users| x |items|
    Vector priors;
    Vector item_sampling_prob;  // aligned with items; filled on demand
};

// One-off batch: batch_users drawn uniformly without replacement from users
// with >= 1 train positive. Throws if batch_users exceeds the eligible pool.
MiniBatch sample_batch(const InteractionDataset& ds, int batch_users, std::mt19937_64& rng);

// Probability that item i appears in a batch of batch_users users. With
// m = eligible users without i and n = eligible users:
// s(i) = 1 - C(m,b)/C(n,b) when m >= b, else 1 (inclusion is certain).
// Evaluated in log-space via lgamma.
double item_inclusion_prob(const InteractionDataset& ds, int item, int batch_users);

void fill_sampling_probs(const InteractionDataset& ds, MiniBatch& batch, int batch_users);

/// Epoch scheduler: shuffled permutation of eligible users, consecutive
/// blocks, so every eligible user appears once per epoch.
class BatchSampler {
public:
    BatchSampler(const InteractionDataset& ds, int batch_users, std::uint64_t seed);

    int batches_per_epoch() const { return batches_per_epoch_; }
    int batch_users() const { return batch_users_; }
    MiniBatch next();

private:
    const InteractionDataset& ds_;
    int batch_users_;
    int batches_per_epoch_;
    std::vector<int> pool_;
    std::size_t cursor_ = 0;
    std::mt19937_64 rng_;

    void reshuffle();
};

// Builds a MiniBatch from an explicit user list (shared by one-off and
// scheduled sampling).
MiniBatch make_batch(const InteractionDataset& ds, std::vector<int> users);

}  // namespace dregn
