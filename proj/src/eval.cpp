#include "dregn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dregn {

double recall_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant, int k) {
    if (relevant.empty()) throw std::invalid_argument("recall_at_k: empty relevant set");
    const auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
    std::size_t hits = 0;
    for (std::size_t p = 0; p < depth; ++p)
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[p])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& relevant, int k) {
    if (relevant.empty()) throw std::invalid_argument("ndcg_at_k: empty relevant set");
    const auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
    double dcg = 0.0;
    for (std::size_t p = 0; p < depth; ++p)
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[p]))
            dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    const auto ideal = std::min<std::size_t>(static_cast<std::size_t>(k), relevant.size());
    double idcg = 0.0;
    for (std::size_t p = 0; p < ideal; ++p)
        idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    return dcg / idcg;
}

MetricReport evaluate(const Matrix& user_out, const Matrix& item_out,
                      const InteractionDataset& ds, Split split, int k) {
    if (split == Split::train) throw std::invalid_argument("evaluate: split must be validation or test");
    const auto& target = (split == Split::validation) ? ds.val_positives : ds.test_positives;

    MetricReport report;
    report.k = k;
    double recall_sum = 0.0, ndcg_sum = 0.0;
    for (std::size_t u = 0; u < ds.num_users; ++u) {
        const auto& relevant = target[u];
        if (relevant.empty()) continue;
        std::vector<int> exclude = ds.positives[u];
        if (split == Split::test) {
            std::vector<int> merged;
            std::set_union(exclude.begin(), exclude.end(), ds.val_positives[u].begin(),
                           ds.val_positives[u].end(), std::back_inserter(merged));
            exclude = std::move(merged);
        }
        std::vector<int> ranked = rank_items(user_out, item_out, static_cast<int>(u), exclude, k);
        recall_sum += recall_at_k(ranked, relevant, k);
        ndcg_sum += ndcg_at_k(ranked, relevant, k);
        ++report.users_evaluated;
    }
    if (report.users_evaluated == 0) throw std::runtime_error("evaluate: split has no positives");
    recall_sum /= static_cast<double>(report.users_evaluated);
    ndcg_sum /= static_cast<double>(report.users_evaluated);
    report.recall_at_k = recall_sum;
    report.ndcg_at_k = ndcg_sum;
    return report;
}

}  // namespace dregn
