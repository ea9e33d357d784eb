#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "encmap/projection.hpp"

namespace encmap {

/// Column-wise z-scoring with population standard deviation. Constant
/// columns keep a scale of 1 so they map to zeros.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
};

std::pair<Standardizer, Eigen::MatrixXd> standardize_fit(const Eigen::MatrixXd& x);

struct ElasticNetModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double alpha = 0.0;
  double l1_ratio = 0.5;
  Standardizer standardizer;  // applied to raw inputs upstream; may be empty
  bool converged = false;
  int sweeps = 0;
  std::vector<double> objective_history;  // objective after each sweep

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Smallest alpha at which every coefficient is zero:
/// max_j |x_j^T (y - mean y)| / (M * l1_ratio), with x column-centred.
double alpha_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l1_ratio);

/// (1/2M)|y - X b - b0|^2 + alpha*l1_ratio*|b|_1 + (alpha/2)(1 - l1_ratio)|b|^2
double elastic_net_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                             double intercept, double alpha, double l1_ratio);

/// Cyclic coordinate descent with an unpenalized intercept. Stops once the
/// largest coefficient change in a sweep is below `tol`; hitting `max_iter`
/// sweeps leaves `converged` false rather than throwing.
ElasticNetModel elastic_net_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double l1_ratio,
                                double tol = 1e-6, int max_iter = 10000,
                                const Eigen::VectorXd* warm_start = nullptr);

struct CvOptions {
  int folds = 5;
  double l1_ratio = 0.5;
  int n_alphas = 100;
  double alpha_min_ratio = 1e-3;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  int max_iter = 10000;
};

struct ElasticNetCvResult {
  ElasticNetModel model;                // refit on all rows at the selected alpha
  std::vector<double> alphas;           // descending, alphas[0] == alpha_max
  std::vector<double> mean_mse;         // per alpha, averaged over folds
  std::size_t selected = 0;             // index into alphas
  std::vector<int> fold_of;             // fold id per row
  Eigen::VectorXd oof_predictions;      // from the fold model that excluded each row
};

/// Folds are contiguous blocks of a seeded shuffle; alpha is chosen by mean
/// held-out squared error.
ElasticNetCvResult elastic_net_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const CvOptions& options = {});

struct Correlation {
  double coefficient = 0.0;
  double p_value = 1.0;
};

/// Product-moment correlation; two-sided p from t = r sqrt((M-2)/(1-r^2)).
Correlation pearson(std::span<const double> x, std::span<const double> y);
/// Pearson correlation of average ranks (ties share their mean rank).
Correlation spearman(std::span<const double> x, std::span<const double> y);
/// 1-based ranks, ties averaged.
std::vector<double> average_ranks(std::span<const double> values);

struct TaskScore {
  std::string encoder_id;
  std::string task_name;
  double score = 0.0;
};

/// CSV with header `encoder_id,task_name,score`.
std::vector<TaskScore> read_scores_csv(const std::filesystem::path& path);

/// Per-encoder mean of min-max normalized task scores (for map coloring).
std::map<std::string, double> mean_minmax_scores(std::span<const TaskScore> scores);

struct DesignMatrix {
  Standardizer standardizer;
  PcaModel pca;
  Eigen::MatrixXd design;  // M x k
};

/// Standardize, then project onto min(pca_dim, M, N) principal components.
DesignMatrix build_design(const Eigen::MatrixXd& features, Eigen::Index pca_dim);

struct PredictionOptions {
  Eigen::Index pca_dim = 50;
  CvOptions cv;
  std::size_t min_encoders = 10;
};

struct PredictionReport {
  std::string task_name;
  double spearman = 0.0;
  double spearman_p = 1.0;
  double pearson = 0.0;
  double pearson_p = 1.0;
  std::vector<std::string> ids;
  Eigen::VectorXd targets;
  Eigen::VectorXd fold_predictions;
  std::vector<int> fold_of;
  double alpha = 0.0;
};

struct PredictionSuite {
  std::vector<PredictionReport> reports;  // sorted by task name
  std::vector<std::string> warnings;
};

PredictionSuite run_prediction_suite(std::span<const FeatureVector> vectors, std::span<const TaskScore> scores,
                                     const PredictionOptions& options = {});

void write_report_csv(const PredictionSuite& suite, const std::filesystem::path& path);
void write_predictions_csv(const PredictionSuite& suite, const std::filesystem::path& path);

}  // namespace encmap
