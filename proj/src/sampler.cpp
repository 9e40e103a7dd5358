#include "dregn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace dregn {

MiniBatch make_batch(const InteractionDataset& ds, std::vector<int> users) {
    MiniBatch b;
    b.users = std::move(users);
    std::vector<int> items;
    for (int u : b.users) {
        const auto& p = ds.positives[static_cast<std::size_t>(u)];
        if (p.empty()) throw std::runtime_error("batch user without train positives");
        items.insert(items.end(), p.begin(), p.end());
    }
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    b.items = std::move(items);

    std::unordered_map<int, Eigen::Index> col;
    col.reserve(b.items.size());
    for (std::size_t k = 0; k < b.items.size(); ++k)
        col[b.items[k]] = static_cast<Eigen::Index>(k);

    b.pos_mask.setConstant(static_cast<Eigen::Index>(b.users.size()),
                           static_cast<Eigen::Index>(b.items.size()), false);
    b.priors.resize(static_cast<Eigen::Index>(b.users.size()));
    for (std::size_t a = 0; a < b.users.size(); ++a) {
        const int u = b.users[a];
        b.priors[static_cast<Eigen::Index>(a)] = ds.user_prior[u];
        for (int i : ds.positives[static_cast<std::size_t>(u)])
            b.pos_mask(static_cast<Eigen::Index>(a), col[i]) = true;
    }
    return b;
}

MiniBatch sample_batch(const InteractionDataset& ds, int batch_users, std::mt19937_64& rng) {
    std::vector<int> pool = ds.eligible_users();
    if (batch_users < 1 || static_cast<std::size_t>(batch_users) > pool.size())
        throw std::invalid_argument("batch_users exceeds eligible users");
    // partial Fisher-Yates for the first batch_users positions
    for (int k = 0; k < batch_users; ++k) {
        std::uniform_int_distribution<std::size_t> dist(static_cast<std::size_t>(k),
                                                        pool.size() - 1);
        std::swap(pool[static_cast<std::size_t>(k)], pool[dist(rng)]);
    }
    pool.resize(static_cast<std::size_t>(batch_users));
    return make_batch(ds, std::move(pool));
}

double item_inclusion_prob(const InteractionDataset& ds, int item, int batch_users) {
    if (batch_users < 1) throw std::invalid_argument("batch_users must be >= 1");
    const auto eligible = ds.eligible_users();
    const auto n = static_cast<std::int64_t>(eligible.size());
    std::int64_t holders = 0;
    for (int u : eligible)
        if (ds.has_positive(u, item)) ++holders;
    const std::int64_t m = n - holders;  // eligible users without the item
    const std::int64_t b = batch_users;
    if (m < b) return 1.0;  // some positive holder is always drawn
    auto log_choose = [](std::int64_t nn, std::int64_t kk) {
        return std::lgamma(static_cast<double>(nn + 1)) -
               std::lgamma(static_cast<double>(kk + 1)) -
               std::lgamma(static_cast<double>(nn - kk + 1));
    };
    return 1.0 - std::exp(log_choose(m, b) - log_choose(n, b));
}

void fill_sampling_probs(const InteractionDataset& ds, MiniBatch& batch, int batch_users) {
    batch.item_sampling_prob.resize(static_cast<Eigen::Index>(batch.items.size()));
    for (std::size_t k = 0; k < batch.items.size(); ++k)
        batch.item_sampling_prob[static_cast<Eigen::Index>(k)] =
            item_inclusion_prob(ds, batch.items[k], batch_users);
}

BatchSampler::BatchSampler(const InteractionDataset& ds, int batch_users, std::uint64_t seed)
    : ds_(ds), batch_users_(batch_users), rng_(seed) {
    pool_ = ds.eligible_users();
    if (batch_users_ < 1 || static_cast<std::size_t>(batch_users_) > pool_.size())
        throw std::invalid_argument("batch_users exceeds eligible users");
    batches_per_epoch_ = static_cast<int>(
        (pool_.size() + static_cast<std::size_t>(batch_users_) - 1) /
        static_cast<std::size_t>(batch_users_));
    reshuffle();
}

void BatchSampler::reshuffle() {
    std::shuffle(pool_.begin(), pool_.end(), rng_);
    cursor_ = 0;
}

MiniBatch BatchSampler::next() {
    if (cursor_ >= pool_.size()) reshuffle();
    const std::size_t take = std::min(static_cast<std::size_t>(batch_users_),
                                      pool_.size() - cursor_);
    std::vector<int> users(pool_.begin() + static_cast<long>(cursor_),
                           pool_.begin() + static_cast<long>(cursor_ + take));
    cursor_ += take;
    return make_batch(ds_, std::move(users));
}

}  // namespace dregn
