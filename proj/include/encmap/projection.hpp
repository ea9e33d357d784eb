#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "encmap/distance.hpp"

namespace encmap {

struct TsneParams {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iteration = 250;
  double init_stddev = 1e-4;
  std::string distance_metric = "l1";
};

struct MapLayout {
  std::vector<std::string> ids;
  Eigen::MatrixXd coords;  // M x 2
  TsneParams params;
  double kl_divergence = 0.0;
  std::vector<double> kl_history;      // KL(P || Q) before each update, exaggeration excluded
  Eigen::VectorXd achieved_perplexity;  // per point, after the bandwidth search
};

/// Row-conditional affinities p_{j|i} proportional to exp(-beta_i * D_ij), with
/// beta_i bisected (at most 50 steps) until the row perplexity is within 1e-5
/// of the target. Achieved perplexities are written to `achieved`.
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& distances, double perplexity,
                                       Eigen::VectorXd& achieved);

/// Exact O(M^2) t-SNE on a precomputed distance matrix. The distances enter
/// the Gaussian kernel unsquared, as for any precomputed metric.
MapLayout tsne(const DistanceMatrix& d, const TsneParams& params = {});

void write_layout_csv(const MapLayout& layout, const std::filesystem::path& path);
nlohmann::json layout_params_json(const MapLayout& layout);

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // k x N, orthonormal rows
  Eigen::VectorXd explained_variance;

  Eigen::Index input_dim() const noexcept { return mean.size(); }
  Eigen::Index output_dim() const noexcept { return components.rows(); }
};

/// Mean-centred PCA via thin SVD; `data` holds one sample per row.
PcaModel fit_pca(const Eigen::MatrixXd& data, Eigen::Index k);
PcaModel fit_pca(std::span<const FeatureVector> vectors, Eigen::Index k);

Eigen::VectorXd apply_pca(const PcaModel& model, const Eigen::VectorXd& vector);
Eigen::VectorXd apply_pca(const PcaModel& model, const FeatureVector& vector);
/// Row-wise projection of a sample matrix.
Eigen::MatrixXd apply_pca(const PcaModel& model, const Eigen::MatrixXd& data);

/// Stacks feature vectors as rows; throws shape if dimensions differ.
Eigen::MatrixXd stack_features(std::span<const FeatureVector> vectors);

}  // namespace encmap
