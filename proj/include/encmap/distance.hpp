#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "encmap/qre.hpp"

namespace encmap {

/// Symmetric M x M matrix of pairwise distances, labelled by encoder id.
class DistanceMatrix {
 public:
  /// Validates squareness, symmetry, zero diagonal and nonnegativity.
  DistanceMatrix(std::vector<std::string> ids, Eigen::MatrixXd values);

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index size() const noexcept { return values_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

  /// Throws lookup if the id is absent.
  Eigen::Index index_of(const std::string& id) const;

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd values_;
};

/// Throws comparability unless both vectors have the same dimension and provenance.
void check_comparable(const FeatureVector& a, const FeatureVector& b);

double l1_distance(const FeatureVector& a, const FeatureVector& b);

/// With `allow_mixed_provenance`, only dimensions must agree.
DistanceMatrix pairwise_distances(std::span<const FeatureVector> vectors, bool allow_mixed_provenance = false);

struct Neighbor {
  std::string encoder_id;
  double distance;
};

/// k closest encoders to `target`, ascending, ties broken by id.
std::vector<Neighbor> nearest_neighbors(const DistanceMatrix& d, const std::string& target, Eigen::Index k);

enum class Linkage { single, complete, average };

Linkage parse_linkage(const std::string& name);
std::string to_string(Linkage linkage);

struct DendrogramNode {
  std::string leaf_id;  // empty for internal nodes
  int left = -1;
  int right = -1;
  double merge_height = 0.0;
  std::size_t member_count = 1;

  bool is_leaf() const noexcept { return left < 0; }
};

/// Binary merge tree. Nodes [0, M) are leaves in input order; node M + t is
/// the t-th merge, so the root is the last node.
class Dendrogram {
 public:
  Dendrogram(std::vector<DendrogramNode> nodes, std::size_t leaf_count);

  std::size_t leaf_count() const noexcept { return leaf_count_; }
  const std::vector<DendrogramNode>& nodes() const noexcept { return nodes_; }
  const DendrogramNode& node(int index) const { return nodes_.at(static_cast<std::size_t>(index)); }
  int root() const noexcept { return static_cast<int>(nodes_.size()) - 1; }

  /// Leaf ids in left-to-right (depth-first, left child first) order.
  std::vector<std::string> leaf_order() const;

  /// Flat cluster labels per input leaf after undoing the last k - 1 merges.
  /// Labels are numbered by first appearance in input order.
  std::vector<int> cut(std::size_t clusters) const;

  std::string to_newick() const;

 private:
  std::vector<DendrogramNode> nodes_;
  std::size_t leaf_count_;
};

/// Agglomerative clustering with Lance-Williams updates; among equal
/// distances the smallest (i, j) pair merges first.
Dendrogram hierarchical_cluster(const DistanceMatrix& d, Linkage linkage = Linkage::average);

void write_distance_csv(const DistanceMatrix& d, const std::filesystem::path& path);
DistanceMatrix read_distance_csv(const std::filesystem::path& path);

}  // namespace encmap
