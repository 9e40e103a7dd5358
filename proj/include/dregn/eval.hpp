#pragma once

#include <vector>

#include <Eigen/Core>

#include "dregn/dataset.hpp"
#include "dregn/model.hpp"

namespace dregn {

struct MetricReport {
    double recall_at_k = 0.0;
    double ndcg_at_k = 0.0;
    int k = 0;
    std::size_t users_evaluated = 0;
};

// |topK(ranked) intersect relevant| / |relevant|; relevant must be non-empty.
double recall_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant, int k);

// Binary gains; DCG = sum over relevant ranked positions p<=K of 1/log2(p+1),
// IDCG truncated at min(K, |relevant|).
double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant, int k);

// User-averaged metrics over the requested split. Candidates exclude each
// user's train positives, and validation positives as well when split=test.
// Users with empty split positives are skipped.
MetricReport evaluate(const Matrix& user_out, const Matrix& item_out,
                      const InteractionDataset& ds, Split split, int k);

}  // namespace dregn
