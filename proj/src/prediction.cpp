#include "encmap/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "encmap/binary_io.hpp"
#include "encmap/error.hpp"
#include "encmap/rng.hpp"

namespace encmap {

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw Error(ErrorKind::shape, "standardizer column count mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

std::pair<Standardizer, Eigen::MatrixXd> standardize_fit(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw Error(ErrorKind::parameter, "standardization needs at least two rows");
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean[j]).square().mean();
    const double sd = std::sqrt(var);
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  Eigen::MatrixXd z = s.transform(x);
  return {std::move(s), std::move(z)};
}

Eigen::VectorXd ElasticNetModel::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != coefficients.size()) throw Error(ErrorKind::shape, "elastic net input column count mismatch");
  return (x * coefficients).array() + intercept;
}

namespace {

void check_regression_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l1_ratio) {
  if (x.rows() < 1 || x.cols() < 1) throw Error(ErrorKind::parameter, "regression needs M, p >= 1");
  if (y.size() != x.rows()) throw Error(ErrorKind::shape, "target length does not match row count");
  if (!(l1_ratio > 0.0 && l1_ratio <= 1.0)) throw Error(ErrorKind::parameter, "l1_ratio must lie in (0, 1]");
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorKind::validation, "regression inputs must be finite");
}

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

}  // namespace

double alpha_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l1_ratio) {
  check_regression_inputs(x, y, l1_ratio);
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  return (xc.transpose() * yc).cwiseAbs().maxCoeff() / (static_cast<double>(x.rows()) * l1_ratio);
}

double elastic_net_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                             double intercept, double alpha, double l1_ratio) {
  const double m = static_cast<double>(x.rows());
  const Eigen::VectorXd residual = (y - x * beta).array() - intercept;
  return residual.squaredNorm() / (2.0 * m) + alpha * l1_ratio * beta.lpNorm<1>() +
         0.5 * alpha * (1.0 - l1_ratio) * beta.squaredNorm();
}

ElasticNetModel elastic_net_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double l1_ratio,
                                double tol, int max_iter, const Eigen::VectorXd* warm_start) {
  check_regression_inputs(x, y, l1_ratio);
  if (!(alpha >= 0.0)) throw Error(ErrorKind::parameter, "alpha must be nonnegative");

  const auto m = x.rows();
  const auto p = x.cols();
  const double md = static_cast<double>(m);
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();

  ElasticNetModel model;
  model.alpha = alpha;
  model.l1_ratio = l1_ratio;
  model.coefficients = Eigen::VectorXd::Zero(p);
  model.intercept = y_mean;

  // At or above alpha_max the zero vector satisfies the optimality conditions.
  if (alpha >= alpha_max(x, y, l1_ratio)) {
    model.converged = true;
    model.objective_history.push_back(elastic_net_objective(x, y, model.coefficients, y_mean, alpha, l1_ratio));
    return model;
  }

  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  const Eigen::VectorXd col_sq = xc.colwise().squaredNorm().transpose() / md;
  const double l1_penalty = alpha * l1_ratio;
  const double l2_penalty = alpha * (1.0 - l1_ratio);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (warm_start != nullptr && warm_start->size() == p) beta = *warm_start;
  Eigen::VectorXd residual = yc - xc * beta;

  const auto objective = [&] {
    return residual.squaredNorm() / (2.0 * md) + l1_penalty * beta.lpNorm<1>() + 0.5 * l2_penalty * beta.squaredNorm();
  };

  for (int sweep = 0; sweep < max_iter; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq[j] == 0.0) {
        beta[j] = 0.0;
        continue;
      }
      const double old = beta[j];
      const double rho = xc.col(j).dot(residual) / md + col_sq[j] * old;
      const double updated = soft_threshold(rho, l1_penalty) / (col_sq[j] + l2_penalty);
      if (updated != old) {
        residual.noalias() -= (updated - old) * xc.col(j);
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    model.sweeps = sweep + 1;
    model.objective_history.push_back(objective());
    if (max_change < tol) {
      model.converged = true;
      break;
    }
  }

  model.coefficients = beta;
  model.intercept = y_mean - x_mean.dot(beta);
  return model;
}

ElasticNetCvResult elastic_net_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const CvOptions& options) {
  const auto m = x.rows();
  if (options.folds < 2) throw Error(ErrorKind::parameter, "cross-validation needs at least 2 folds");
  if (m < options.folds) {
    throw Error(ErrorKind::parameter, "cross-validation needs at least as many rows (" + std::to_string(m) +
                                          ") as folds (" + std::to_string(options.folds) + ")");
  }
  if (options.n_alphas < 1) throw Error(ErrorKind::parameter, "n_alphas must be positive");

  ElasticNetCvResult out;
  const double top = alpha_max(x, y, options.l1_ratio);
  out.alphas.resize(static_cast<std::size_t>(options.n_alphas));
  for (int a = 0; a < options.n_alphas; ++a) {
    const double t = options.n_alphas == 1 ? 0.0 : static_cast<double>(a) / (options.n_alphas - 1);
    out.alphas[static_cast<std::size_t>(a)] = top * std::pow(options.alpha_min_ratio, t);
  }
  out.alphas.front() = top;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);
  shuffle(order.begin(), order.end(), rng);
  out.fold_of.assign(static_cast<std::size_t>(m), 0);
  {
    std::size_t pos = 0;
    for (int f = 0; f < options.folds; ++f) {
      const auto size = static_cast<std::size_t>(m / options.folds + (f < m % options.folds ? 1 : 0));
      for (std::size_t k = 0; k < size; ++k) out.fold_of[static_cast<std::size_t>(order[pos++])] = f;
    }
  }

  const auto n_alphas = out.alphas.size();
  Eigen::MatrixXd held_out_pred(static_cast<Eigen::Index>(n_alphas), m);
  std::vector<double> mse_sum(n_alphas, 0.0);

  for (int f = 0; f < options.folds; ++f) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
    for (Eigen::Index i = 0; i < m; ++i) (out.fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    const Eigen::MatrixXd x_train = x(train, Eigen::all);
    const Eigen::VectorXd y_train = y(train);
    const Eigen::MatrixXd x_test = x(test, Eigen::all);
    const Eigen::VectorXd y_test = y(test);

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(x.cols());
    for (std::size_t a = 0; a < n_alphas; ++a) {
      const auto model = elastic_net_fit(x_train, y_train, out.alphas[a], options.l1_ratio, options.tol,
                                         options.max_iter, &warm);
      warm = model.coefficients;
      const Eigen::VectorXd pred = model.predict(x_test);
      mse_sum[a] += (pred - y_test).squaredNorm() / static_cast<double>(test.size());
      for (std::size_t t = 0; t < test.size(); ++t) {
        held_out_pred(static_cast<Eigen::Index>(a), test[t]) = pred[static_cast<Eigen::Index>(t)];
      }
    }
  }

  out.mean_mse.resize(n_alphas);
  for (std::size_t a = 0; a < n_alphas; ++a) out.mean_mse[a] = mse_sum[a] / options.folds;
  out.selected = static_cast<std::size_t>(std::min_element(out.mean_mse.begin(), out.mean_mse.end()) -
                                          out.mean_mse.begin());
  out.oof_predictions = held_out_pred.row(static_cast<Eigen::Index>(out.selected)).transpose();
  out.model = elastic_net_fit(x, y, out.alphas[out.selected], options.l1_ratio, options.tol, options.max_iter);
  return out;
}

namespace {

double t_test_p_value(double r, std::size_t m) {
  if (m < 3) return 1.0;
  if (std::abs(r) >= 1.0) return 0.0;
  const double dof = static_cast<double>(m - 2);
  const double t = r * std::sqrt(dof / (1.0 - r * r));
  const boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::shape, "correlation inputs differ in length");
  if (x.size() < 3) throw Error(ErrorKind::parameter, "correlation needs at least 3 points");
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::VectorXd xc = xv.array() - xv.mean();
  const Eigen::VectorXd yc = yv.array() - yv.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::undefined_correlation, "correlation is undefined for a constant input");
  }
  double r = xc.dot(yc) / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  return {r, t_test_p_value(r, x.size())};
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::shape, "correlation inputs differ in length");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

std::vector<TaskScore> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::format, path.string() + ": empty scores file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "encoder_id,task_name,score") {
    throw Error(ErrorKind::format, path.string() + ": header must be 'encoder_id,task_name,score'");
  }
  std::vector<TaskScore> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw Error(ErrorKind::format, path.string() + ": line " + std::to_string(line_no) + " needs 3 fields");
    }
    TaskScore s;
    s.encoder_id = line.substr(0, c1);
    s.task_name = line.substr(c1 + 1, c2 - c1 - 1);
    try {
      std::size_t used = 0;
      const auto text = line.substr(c2 + 1);
      s.score = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorKind::format, path.string() + ": line " + std::to_string(line_no) + " has a non-numeric score");
    }
    if (!std::isfinite(s.score)) {
      throw Error(ErrorKind::validation, path.string() + ": line " + std::to_string(line_no) + " score is not finite");
    }
    if (!seen.emplace(s.encoder_id, s.task_name).second) {
      throw Error(ErrorKind::validation, path.string() + ": duplicate score for " + s.encoder_id + " on " + s.task_name);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, double> mean_minmax_scores(std::span<const TaskScore> scores) {
  std::map<std::string, std::pair<double, double>> range;
  for (const auto& s : scores) {
    auto [it, fresh] = range.try_emplace(s.task_name, s.score, s.score);
    if (!fresh) {
      it->second.first = std::min(it->second.first, s.score);
      it->second.second = std::max(it->second.second, s.score);
    }
  }
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& s : scores) {
    const auto [lo, hi] = range[s.task_name];
    const double v = hi > lo ? (s.score - lo) / (hi - lo) : 0.0;
    auto& a = acc[s.encoder_id];
    a.first += v;
    a.second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [id, a] : acc) out[id] = a.first / a.second;
  return out;
}

DesignMatrix build_design(const Eigen::MatrixXd& features, Eigen::Index pca_dim) {
  if (pca_dim < 1) throw Error(ErrorKind::parameter, "PCA dimension must be positive");
  DesignMatrix out;
  auto [standardizer, z] = standardize_fit(features);
  out.standardizer = std::move(standardizer);
  const auto k = std::min({pca_dim, z.rows(), z.cols()});
  out.pca = fit_pca(z, k);
  out.design = apply_pca(out.pca, z);
  return out;
}

PredictionSuite run_prediction_suite(std::span<const FeatureVector> vectors, std::span<const TaskScore> scores,
                                     const PredictionOptions& options) {
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (!position.emplace(vectors[i].encoder_id, i).second) {
      throw Error(ErrorKind::validation, "duplicate feature vector for " + vectors[i].encoder_id);
    }
  }
  std::map<std::string, std::map<std::size_t, double>> by_task;
  for (const auto& s : scores) {
    const auto it = position.find(s.encoder_id);
    if (it == position.end()) {
      throw Error(ErrorKind::lookup, "scored encoder " + s.encoder_id + " has no feature vector");
    }
    by_task[s.task_name][it->second] = s.score;
  }

  PredictionSuite suite;
  for (const auto& [task, rows] : by_task) {
    if (rows.size() < options.min_encoders) {
      suite.warnings.push_back("task " + task + " skipped: only " + std::to_string(rows.size()) +
                               " scored encoders (need " + std::to_string(options.min_encoders) + ")");
      continue;
    }
    std::vector<FeatureVector> subset;
    PredictionReport report;
    report.task_name = task;
    report.targets.resize(static_cast<Eigen::Index>(rows.size()));
    Eigen::Index r = 0;
    for (const auto& [idx, score] : rows) {
      subset.push_back(vectors[idx]);
      report.ids.push_back(vectors[idx].encoder_id);
      report.targets[r++] = score;
    }
    const auto design = build_design(stack_features(subset), options.pca_dim);
    const auto cv = elastic_net_cv(design.design, report.targets, options.cv);
    report.fold_predictions = cv.oof_predictions;
    report.fold_of = cv.fold_of;
    report.alpha = cv.alphas[cv.selected];

    const std::span<const double> truth(report.targets.data(), static_cast<std::size_t>(report.targets.size()));
    const std::span<const double> pred(report.fold_predictions.data(),
                                       static_cast<std::size_t>(report.fold_predictions.size()));
    try {
      const auto s = spearman(truth, pred);
      const auto p = pearson(truth, pred);
      report.spearman = s.coefficient;
      report.spearman_p = s.p_value;
      report.pearson = p.coefficient;
      report.pearson_p = p.p_value;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::undefined_correlation) throw;
      suite.warnings.push_back("task " + task + ": " + e.what());
      report.spearman = report.pearson = std::nan("");
      report.spearman_p = report.pearson_p = std::nan("");
    }
    suite.reports.push_back(std::move(report));
  }
  return suite;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_report_csv(const PredictionSuite& suite, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "task,spearman,spearman_p,pearson,pearson_p,n_encoders\n";
  for (const auto& r : suite.reports) {
    out << r.task_name << ',' << fmt_double(r.spearman) << ',' << fmt_double(r.spearman_p) << ','
        << fmt_double(r.pearson) << ',' << fmt_double(r.pearson_p) << ',' << r.ids.size() << '\n';
  }
  detail::write_text_atomic(path, out.str());
}

void write_predictions_csv(const PredictionSuite& suite, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "task,encoder_id,true_score,predicted_score,fold\n";
  for (const auto& r : suite.reports) {
    for (std::size_t i = 0; i < r.ids.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      out << r.task_name << ',' << r.ids[i] << ',' << fmt_double(r.targets[k]) << ','
          << fmt_double(r.fold_predictions[k]) << ',' << r.fold_of[i] << '\n';
    }
  }
  detail::write_text_atomic(path, out.str());
}

}  // namespace encmap
