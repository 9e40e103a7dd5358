#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dregn {

enum class LogFormat { adjacency_text, triple_csv };
enum class Split { train, validation, test };

/// Positive-only interaction data with contiguous integer ids.
/// Immutable after construction; safe for concurrent reads.
struct InteractionDataset {
    std::size_t num_users = 0;
    std::size_t num_items = 0;

    // Sorted, de-duplicated item ids per user.
    std::vector<std::vector<int>> positives;       // train
    std::vector<std::vector<int>> val_positives;
    std::vector<std::vector<int>> test_positives;

    // |U_i^+| over the train split.
    std::vector<std::int64_t> item_popularity;
    // pi_u^+ = |I_u^+| / |I|, train positives only.
    Eigen::VectorXd user_prior;

    std::int64_t train_interactions() const;
    double density() const;
    // Users with at least one train positive.
    std::vector<int> eligible_users() const;
    bool has_positive(int user, int item) const;  // train split
};

// Recomputes item_popularity and user_prior from the train split.
void recompute_derived(InteractionDataset& ds);

// Throws std::runtime_error with the offending line number on malformed input.
InteractionDataset load_interactions(const std::string& path, LogFormat format);

// Directory layout of the reference splits: train.txt plus optional
// val.txt / test.txt, all adjacency-text.
InteractionDataset load_dataset_dir(const std::string& dir);

void write_adjacency(const InteractionDataset& ds, Split split, const std::string& path);

// Moves ceil(val_fraction * |I_u^+|) train positives per user into the target
// split, chosen by the seeded generator. Users with a single positive keep it.
void split_holdout(InteractionDataset& ds, double val_fraction, std::uint64_t seed,
                   Split target = Split::validation);

// Remaps user/item ids to a dense range (drops unused ids).
void compact_ids(InteractionDataset& ds);

struct DatasetStats {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::int64_t interactions = 0;
    double density = 0.0;
};

DatasetStats stats(const InteractionDataset& ds);

}  // namespace dregn
