#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "dregn/dataset.hpp"
#include "dregn/model.hpp"

namespace dregn {

struct SynthConfig {
    std::size_t num_users = 200;
    std::size_t num_items = 100;
    int latent_dim = 4;
    int positives_per_user = 40;
    int test_per_user = 0;       // held out from the generated positives
    double temperature = 1.0;    // scales the low-rank logits
    std::uint64_t seed = 7;
};

/// Synthetic corpus from a known low-rank preference model. positive_prob
/// row u is p(i|u,y=+1) (rows sum to 1); true_ratio is p(i|u,y=+1)/p(i|u)
/// with p(i|u) uniform over items, i.e. positive_prob * num_items.
struct SynthCorpus {
    InteractionDataset dataset;
    Matrix positive_prob;  // num_users x num_items
    Matrix true_ratio;
};

SynthCorpus generate_synthetic(const SynthConfig& cfg);

// Writes train.txt / test.txt (adjacency-text) and ratios.csv
// ("user,item,ratio" rows) under dir.
void write_synthetic(const SynthCorpus& corpus, const std::string& dir);

Matrix load_ratio_table(const std::string& path);

}  // namespace dregn
