#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "encmap/spectral.hpp"

namespace encmap {

/// Null-space padding used when the reference spectrum does not span R^N.
inline const double kDefaultEpsilon = std::exp(-12.0);

inline constexpr Eigen::Index kDenseQreMaxDim = 512;

/// Per-eigenvector terms of S(rho || sigma_eps), indexed by the eigenvectors of rho.
struct QreBreakdown {
  Eigen::VectorXd captured_mass;          // c_i, clamped to [0, 1]
  Eigen::VectorXd residual_mass;          // r_i = 1 - c_i
  Eigen::VectorXd aligned_cross_entropy;  // C_i = sum_j (v_i . u_j)^2 ln mu_j
  double total = 0.0;
  double epsilon = 0.0;
};

/// Settings a feature vector was computed under; vectors are only comparable
/// when these agree.
struct FeatureProvenance {
  double epsilon = kDefaultEpsilon;
  double rank_tolerance = kDefaultRankTolerance;
  bool normalized = false;

  bool operator==(const FeatureProvenance&) const = default;
};

/// Divergence of an encoder from the isotropic unit base, split per axis.
/// values.sum() equals qre_total.
struct FeatureVector {
  std::string encoder_id;
  Eigen::VectorXd values;
  double qre_total = 0.0;
  FeatureProvenance provenance;

  Eigen::Index ambient_dim() const noexcept { return values.size(); }
  double epsilon() const noexcept { return provenance.epsilon; }
};

/// S(rho || sigma_eps) through the K_rho x K_sigma projection V^T U.
/// Requires equal ambient dimension and 0 < epsilon < min retained mu.
QreBreakdown qre(const DensitySpectrum& rho, const DensitySpectrum& sigma, double epsilon = kDefaultEpsilon);

/// The spectrum of rho_0 = I / N: eigenvalues 1/N on the standard basis.
DensitySpectrum unit_base_spectrum(Eigen::Index n);

/// qre(unit_base, sigma) without materializing the N x N identity: row w of
/// sigma's eigenvector matrix is the projection of e_w onto its eigenbasis.
QreBreakdown unit_base_breakdown(const DensitySpectrum& sigma, double epsilon = kDefaultEpsilon);

FeatureVector feature_vector(const DensitySpectrum& sigma, double epsilon = kDefaultEpsilon);

/// -ln N - (1/N) sum_j ln mu_j - ((N - K)/N) ln eps, the summed feature vector
/// written in terms of sigma's eigenvalues only.
double closed_form_qre_total(const DensitySpectrum& sigma, double epsilon = kDefaultEpsilon);

/// Reference evaluation of Tr(rho ln rho) - Tr(rho ln sigma_eps) with dense
/// matrix logarithms. `rho` must be symmetric PSD with unit trace.
double qre_dense_oracle(const Eigen::MatrixXd& rho, const DensitySpectrum& sigma,
                        double epsilon = kDefaultEpsilon, Eigen::Index max_dim = kDenseQreMaxDim);

void write_feature_vector(const FeatureVector& features, const std::filesystem::path& path);
/// Reads the payload and, when present, the sidecar carrying encoder_id and provenance.
FeatureVector read_feature_vector(const std::filesystem::path& path);
nlohmann::json feature_sidecar(const FeatureVector& features);

}  // namespace encmap
