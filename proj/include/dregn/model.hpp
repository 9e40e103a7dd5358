#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dregn/dataset.hpp"

namespace dregn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Backbone { mf, lightgc };

/// Symmetric-normalised bipartite train graph: edge (u,i) carries
/// 1/sqrt(deg(u)*deg(i)). Isolated nodes carry no edges.
struct PropagationGraph {
    struct Edge {
        int user;
        int item;
        double weight;
    };
    std::vector<Edge> edges;
    std::size_t num_users = 0;
    std::size_t num_items = 0;

    static PropagationGraph build(const InteractionDataset& ds);

    // One symmetric-normalised neighbour-sum step on the joint (user,item) space.
    std::pair<Matrix, Matrix> step(const Matrix& user_in, const Matrix& item_in) const;
};

struct ScorerModel {
    Backbone backbone = Backbone::mf;
    int num_layers = 0;  // lightgc only
    int dim = 0;
    Matrix user_embed;  // num_users x dim
    Matrix item_embed;  // num_items x dim

    static ScorerModel init(std::size_t num_users, std::size_t num_items, int dim,
                            Backbone backbone, int num_layers, std::uint64_t seed);
};

// Mean of propagation layers 0..num_layers. For the mf backbone this returns
// the raw tables. Linear in the embeddings, so the operator is its own adjoint
// for gradient backpropagation.
std::pair<Matrix, Matrix> propagate(const ScorerModel& model, const PropagationGraph& graph);

// Same linear map applied to output-side gradients; valid because the
// normalised adjacency is symmetric on the joint node space.
std::pair<Matrix, Matrix> propagate_adjoint(Backbone backbone, int num_layers,
                                            const PropagationGraph& graph,
                                            const Matrix& grad_user_out,
                                            const Matrix& grad_item_out);

double softplus(double x);

// Raw inner products <user_out[u], item_out[i]> for the given id blocks.
Matrix inner_block(const Matrix& user_out, const Matrix& item_out,
                   const std::vector<int>& users, const std::vector<int>& items);

// softplus of inner_block; numerically stable, entries in (0, inf).
Matrix score_block(const Matrix& user_out, const Matrix& item_out,
                   const std::vector<int>& users, const std::vector<int>& items);

// Top-K by raw inner product (order-equivalent to softplus scores), excluding
// `exclude` (sorted unique), ties broken by ascending item id.
std::vector<int> rank_items(const Matrix& user_out, const Matrix& item_out, int user,
                            const std::vector<int>& exclude, int k);

void save_checkpoint(const ScorerModel& model, const std::string& path);
ScorerModel load_checkpoint(const std::string& path);

}  // namespace dregn
