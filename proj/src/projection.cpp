#include "encmap/projection.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "encmap/binary_io.hpp"
#include "encmap/error.hpp"
#include "encmap/rng.hpp"

namespace encmap {

namespace {

constexpr int kMaxBisectionSteps = 50;
constexpr double kPerplexityTolerance = 1e-5;

}  // namespace

Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& distances, double perplexity,
                                       Eigen::VectorXd& achieved) {
  const auto m = distances.rows();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m, m);
  achieved.resize(m);
  std::vector<double> shifted(static_cast<std::size_t>(m));

  for (Eigen::Index i = 0; i < m; ++i) {
    // Shift by the row minimum so exp() cannot underflow for large distances.
    double d_min = std::numeric_limits<double>::infinity();
    double d_sum = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      d_min = std::min(d_min, distances(i, j));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      shifted[static_cast<std::size_t>(j)] = j == i ? 0.0 : distances(i, j) - d_min;
      if (j != i) d_sum += shifted[static_cast<std::size_t>(j)];
    }
    const double mean_gap = d_sum / static_cast<double>(m - 1);

    double beta = mean_gap > 0.0 ? 1.0 / mean_gap : 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double best_gap = std::numeric_limits<double>::infinity();
    double best_beta = beta;
    double best_perp = 0.0;

    for (int step = 0; step < kMaxBisectionSteps; ++step) {
      double sum = 0.0;
      double weighted = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j == i) continue;
        const double s = shifted[static_cast<std::size_t>(j)];
        const double w = std::exp(-beta * s);
        sum += w;
        weighted += w * s;
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      const double perp = std::exp(entropy);
      const double gap = std::abs(perp - perplexity);
      if (gap < best_gap) {
        best_gap = gap;
        best_beta = beta;
        best_perp = perp;
      }
      if (gap < kPerplexityTolerance) break;
      if (perp > perplexity) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }

    double sum = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      p(i, j) = std::exp(-best_beta * shifted[static_cast<std::size_t>(j)]);
      sum += p(i, j);
    }
    p.row(i) /= sum;
    achieved[i] = best_perp;
  }
  return p;
}

MapLayout tsne(const DistanceMatrix& d, const TsneParams& params) {
  const auto m = d.size();
  if (m < 4) throw Error(ErrorKind::parameter, "t-SNE needs at least 4 points, got " + std::to_string(m));
  // Exact t-SNE can realise any perplexity below M - 1 (the uniform row).
  const double max_perplexity = static_cast<double>(m - 1);
  if (!(params.perplexity > 1.0 && params.perplexity < max_perplexity)) {
    throw Error(ErrorKind::parameter, "perplexity must lie in (1, " + std::to_string(max_perplexity) +
                                          ") for " + std::to_string(m) + " points");
  }
  if (params.iterations < 1 || !(params.learning_rate > 0.0)) {
    throw Error(ErrorKind::parameter, "iterations and learning rate must be positive");
  }

  MapLayout layout;
  layout.ids = d.ids();
  layout.params = params;

  const Eigen::MatrixXd cond = conditional_affinities(d.values(), params.perplexity, layout.achieved_perplexity);
  Eigen::MatrixXd p = cond + cond.transpose();
  p /= p.sum();
  p = p.cwiseMax(std::numeric_limits<double>::min());
  p.diagonal().setZero();

  Rng rng(params.seed);
  Eigen::MatrixXd y(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index c = 0; c < 2; ++c) y(i, c) = params.init_stddev * rng.normal();
  }
  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(m, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(m, 2);
  Eigen::MatrixXd grad(m, 2);
  Eigen::MatrixXd num(m, m);

  const auto kl_of = [&](const Eigen::MatrixXd& kernel, double z) {
    double kl = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (i == j) continue;
        const double q = std::max(kernel(i, j) / z, std::numeric_limits<double>::min());
        kl += p(i, j) * std::log(p(i, j) / q);
      }
    }
    return kl;
  };
  const auto student_kernel = [&]() {
    double z = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double dist2 = (y.row(i) - y.row(j)).squaredNorm();
        const double v = 1.0 / (1.0 + dist2);
        num(i, j) = v;
        num(j, i) = v;
        z += 2.0 * v;
      }
    }
    return z;
  };

  layout.kl_history.reserve(static_cast<std::size_t>(params.iterations));
  for (int iter = 0; iter < params.iterations; ++iter) {
    const double exaggeration = iter < params.exaggeration_iterations ? params.early_exaggeration : 1.0;
    const double momentum = iter < params.momentum_switch_iteration ? params.initial_momentum : params.final_momentum;

    const double z = student_kernel();
    layout.kl_history.push_back(kl_of(num, z));

    for (Eigen::Index i = 0; i < m; ++i) {
      double gx = 0.0;
      double gy = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (i == j) continue;
        const double coeff = (exaggeration * p(i, j) - num(i, j) / z) * num(i, j);
        gx += coeff * (y(i, 0) - y(j, 0));
        gy += coeff * (y(i, 1) - y(j, 1));
      }
      grad(i, 0) = 4.0 * gx;
      grad(i, 1) = 4.0 * gy;
    }
    if (!grad.allFinite()) {
      throw Error(ErrorKind::numerical, "non-finite t-SNE gradient at iteration " + std::to_string(iter));
    }

    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
        gains(i, c) = same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2;
        gains(i, c) = std::max(gains(i, c), 0.01);
        update(i, c) = momentum * update(i, c) - params.learning_rate * gains(i, c) * grad(i, c);
      }
    }
    y += update;
    y.rowwise() -= y.colwise().mean();
  }

  layout.kl_divergence = kl_of(num, student_kernel());
  layout.coords = std::move(y);
  return layout;
}

void write_layout_csv(const MapLayout& layout, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "id,x,y\n";
  char buf[64];
  for (std::size_t i = 0; i < layout.ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", layout.coords(r, 0), layout.coords(r, 1));
    out << layout.ids[i] << ',' << buf << '\n';
  }
  detail::write_text_atomic(path, out.str());
}

nlohmann::json layout_params_json(const MapLayout& layout) {
  const auto& p = layout.params;
  return {{"perplexity", p.perplexity},
          {"iterations", p.iterations},
          {"learning_rate", p.learning_rate},
          {"seed", p.seed},
          {"early_exaggeration", p.early_exaggeration},
          {"exaggeration_iterations", p.exaggeration_iterations},
          {"initial_momentum", p.initial_momentum},
          {"final_momentum", p.final_momentum},
          {"momentum_switch_iteration", p.momentum_switch_iteration},
          {"init_stddev", p.init_stddev},
          {"distance_metric", p.distance_metric},
          {"rng", std::string(Rng::algorithm)},
          {"kl_divergence", layout.kl_divergence}};
}

PcaModel fit_pca(const Eigen::MatrixXd& data, Eigen::Index k) {
  const auto m = data.rows();
  const auto n = data.cols();
  if (k < 1 || k > std::min(m, n)) {
    throw Error(ErrorKind::parameter, "PCA dimension " + std::to_string(k) + " must be in [1, " +
                                          std::to_string(std::min(m, n)) + "]");
  }
  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(ErrorKind::numerical, "PCA SVD did not converge");
  Eigen::MatrixXd directions = svd.matrixV().leftCols(k);
  canonicalize_signs(directions);
  model.components = directions.transpose();
  const double dof = static_cast<double>(std::max<Eigen::Index>(m - 1, 1));
  model.explained_variance = svd.singularValues().head(k).array().square() / dof;
  return model;
}

Eigen::MatrixXd stack_features(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) throw Error(ErrorKind::parameter, "no feature vectors given");
  const auto n = vectors.front().ambient_dim();
  Eigen::MatrixXd data(static_cast<Eigen::Index>(vectors.size()), n);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].ambient_dim() != n) {
      throw Error(ErrorKind::shape, vectors[i].encoder_id + " has dimension " +
                                        std::to_string(vectors[i].ambient_dim()) + ", expected " + std::to_string(n));
    }
    data.row(static_cast<Eigen::Index>(i)) = vectors[i].values.transpose();
  }
  return data;
}

PcaModel fit_pca(std::span<const FeatureVector> vectors, Eigen::Index k) {
  return fit_pca(stack_features(vectors), k);
}

Eigen::VectorXd apply_pca(const PcaModel& model, const Eigen::VectorXd& vector) {
  if (vector.size() != model.input_dim()) {
    throw Error(ErrorKind::shape, "PCA input has dimension " + std::to_string(vector.size()) + ", model expects " +
                                      std::to_string(model.input_dim()));
  }
  return model.components * (vector - model.mean);
}

Eigen::VectorXd apply_pca(const PcaModel& model, const FeatureVector& vector) {
  return apply_pca(model, vector.values);
}

Eigen::MatrixXd apply_pca(const PcaModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.input_dim()) {
    throw Error(ErrorKind::shape, "PCA input has dimension " + std::to_string(data.cols()) + ", model expects " +
                                      std::to_string(model.input_dim()));
  }
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace encmap
