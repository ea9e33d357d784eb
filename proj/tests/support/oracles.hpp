// Reference computations used only by the tests. Each one takes a different
// route from the library so agreement is meaningful.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "encmap/embedding_io.hpp"
#include "encmap/qre.hpp"
#include "encmap/rng.hpp"
#include "encmap/spectral.hpp"

namespace encmap::testing {

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

inline EmbeddingMatrix gaussian_embedding(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                          const std::string& id = "enc") {
  return EmbeddingMatrix(id, gaussian_matrix(rows, cols, seed));
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
inline Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::uint64_t seed) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(n, n, seed));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

/// Largest principal angle (radians) between the column spaces of two
/// orthonormal bases of equal width, from the sine form ||(I - A A^T) B||_2,
/// which stays accurate for tiny angles where the cosine form bottoms out.
inline double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0 && b.cols() == 0) return 0.0;
  const Eigen::MatrixXd residual = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  return std::asin(std::min(1.0, svd.singularValues()(0)));
}

/// Trace-normalized Gram matrix A A^T / tr(A A^T).
inline Eigen::MatrixXd density_from_embedding(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd g = a * a.transpose();
  return g / g.trace();
}

/// Tr(rho ln rho) - Tr(rho ln sigma) with both logarithms taken by Eigen's
/// Schur-Parlett matrix logarithm. Requires sigma to be positive definite.
inline double dense_qre_schur(const Eigen::MatrixXd& rho, const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho);
  double self = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double l = eig.eigenvalues()(i);
    if (l > 0.0) self += l * std::log(l);
  }
  const Eigen::MatrixXd log_sigma = sigma.log();
  return self - (rho * log_sigma).trace();
}

/// sigma_eps = U diag(mu) U^T + eps (I - U U^T), built densely.
inline Eigen::MatrixXd padded_density(const DensitySpectrum& s, double epsilon) {
  const Eigen::Index n = s.ambient_dim();
  const Eigen::MatrixXd& u = s.eigenvectors;
  return u * s.eigenvalues.asDiagonal() * u.transpose() +
         epsilon * (Eigen::MatrixXd::Identity(n, n) - u * u.transpose());
}

/// Spearman correlation from scratch: ranks by counting, ties averaged.
inline double spearman_bruteforce(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0, equal = 0.0;
      for (double w : v) {
        if (w < v[i]) less += 1.0;
        if (w == v[i]) equal += 1.0;
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("encmap_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace encmap::testing
