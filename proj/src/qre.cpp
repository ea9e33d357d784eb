#include "encmap/qre.hpp"

#include <algorithm>
#include <limits>

#include "encmap/binary_io.hpp"
#include "encmap/error.hpp"

namespace encmap {

namespace {

constexpr std::uint32_t kFeatureVersion = 1;

void check_epsilon(const DensitySpectrum& sigma, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::parameter, "epsilon must be a positive finite number");
  }
  const double smallest = sigma.eigenvalues.minCoeff();
  if (!(epsilon < smallest)) {
    throw Error(ErrorKind::parameter, sigma.encoder_id + ": epsilon " + std::to_string(epsilon) +
                                          " is not below the smallest retained eigenvalue " +
                                          std::to_string(smallest));
  }
}

// Fills c_i, r_i, C_i and the total from squared projections. `projection(i, j)`
// is v_i . u_j; rows are visited in order so the reduction is deterministic.
template <typename Projection>
QreBreakdown assemble(const Eigen::VectorXd& lambda, const Eigen::VectorXd& log_mu, double epsilon,
                      const Projection& projection) {
  const auto k_rho = lambda.size();
  const auto k_sigma = log_mu.size();
  const double log_eps = std::log(epsilon);

  QreBreakdown out;
  out.epsilon = epsilon;
  out.captured_mass.resize(k_rho);
  out.residual_mass.resize(k_rho);
  out.aligned_cross_entropy.resize(k_rho);

  double self_term = 0.0;
  double cross_term = 0.0;
  for (Eigen::Index i = 0; i < k_rho; ++i) {
    double captured = 0.0;
    double cross = 0.0;
    for (Eigen::Index j = 0; j < k_sigma; ++j) {
      const double p = projection(i, j);
      const double p2 = p * p;
      captured += p2;
      cross += p2 * log_mu[j];
    }
    captured = std::clamp(captured, 0.0, 1.0);
    const double residual = 1.0 - captured;
    out.captured_mass[i] = captured;
    out.residual_mass[i] = residual;
    out.aligned_cross_entropy[i] = cross;
    const double l = lambda[i];
    if (l > 0.0) self_term += l * std::log(l);
    cross_term += l * (cross + residual * log_eps);
  }
  out.total = self_term - cross_term;
  return out;
}

}  // namespace

QreBreakdown qre(const DensitySpectrum& rho, const DensitySpectrum& sigma, double epsilon) {
  if (rho.ambient_dim() != sigma.ambient_dim()) {
    throw Error(ErrorKind::shape, "ambient dimension mismatch: " + rho.encoder_id + " has N=" +
                                      std::to_string(rho.ambient_dim()) + ", " + sigma.encoder_id +
                                      " has N=" + std::to_string(sigma.ambient_dim()));
  }
  check_epsilon(sigma, epsilon);
  const Eigen::MatrixXd projection = rho.eigenvectors.transpose() * sigma.eigenvectors;
  const Eigen::VectorXd log_mu = sigma.eigenvalues.array().log();
  return assemble(rho.eigenvalues, log_mu, epsilon,
                  [&](Eigen::Index i, Eigen::Index j) { return projection(i, j); });
}

DensitySpectrum unit_base_spectrum(Eigen::Index n) {
  if (n < 1) throw Error(ErrorKind::parameter, "unit base dimension must be at least 1");
  DensitySpectrum s;
  s.encoder_id = "unit_base";
  s.eigenvalues = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  s.eigenvectors = Eigen::MatrixXd::Identity(n, n);
  s.source_dim = n;
  return s;
}

QreBreakdown unit_base_breakdown(const DensitySpectrum& sigma, double epsilon) {
  check_epsilon(sigma, epsilon);
  const auto n = sigma.ambient_dim();
  const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const Eigen::VectorXd log_mu = sigma.eigenvalues.array().log();
  const auto& u = sigma.eigenvectors;
  return assemble(lambda, log_mu, epsilon, [&](Eigen::Index w, Eigen::Index j) { return u(w, j); });
}

FeatureVector feature_vector(const DensitySpectrum& sigma, double epsilon) {
  const auto breakdown = unit_base_breakdown(sigma, epsilon);
  const auto n = sigma.ambient_dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double self_term = inv_n * std::log(inv_n);
  const double log_eps = std::log(epsilon);

  FeatureVector out;
  out.encoder_id = sigma.encoder_id;
  out.values.resize(n);
  double total = 0.0;
  for (Eigen::Index w = 0; w < n; ++w) {
    const double phi =
        self_term - inv_n * (breakdown.aligned_cross_entropy[w] + breakdown.residual_mass[w] * log_eps);
    out.values[w] = phi;
    total += phi;
  }
  out.qre_total = total;
  out.provenance = {epsilon, sigma.rank_tolerance, sigma.normalized};
  return out;
}

double closed_form_qre_total(const DensitySpectrum& sigma, double epsilon) {
  check_epsilon(sigma, epsilon);
  const auto n = static_cast<double>(sigma.ambient_dim());
  const auto k = static_cast<double>(sigma.rank());
  const double sum_log_mu = sigma.eigenvalues.array().log().sum();
  return -std::log(n) - sum_log_mu / n - ((n - k) / n) * std::log(epsilon);
}

double qre_dense_oracle(const Eigen::MatrixXd& rho, const DensitySpectrum& sigma, double epsilon,
                        Eigen::Index max_dim) {
  const auto n = rho.rows();
  if (n > max_dim) {
    throw Error(ErrorKind::resource_limit, "dense QRE oracle limited to N <= " + std::to_string(max_dim));
  }
  if (rho.cols() != n || sigma.ambient_dim() != n) {
    throw Error(ErrorKind::shape, "rho must be N x N with N matching sigma");
  }
  check_epsilon(sigma, epsilon);
  if ((rho - rho.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw Error(ErrorKind::validation, "rho is not symmetric");
  }
  if (std::abs(rho.trace() - 1.0) > 1e-8) throw Error(ErrorKind::validation, "rho does not have unit trace");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rho_eig(rho);
  if (rho_eig.info() != Eigen::Success) throw Error(ErrorKind::numerical, "eigensolver failed on rho");
  if (rho_eig.eigenvalues().minCoeff() < -1e-8) throw Error(ErrorKind::validation, "rho is not PSD");

  // Tr(rho ln rho) with 0 ln 0 = 0; tiny negative round-off is treated as zero.
  double self_term = 0.0;
  for (const double l : rho_eig.eigenvalues()) {
    if (l > 1e-15) self_term += l * std::log(l);
  }

  // sigma_eps = sigma + eps * (I - U U^T), then ln via its own eigendecomposition.
  const auto& u = sigma.eigenvectors;
  Eigen::MatrixXd sigma_eps = u * sigma.eigenvalues.asDiagonal() * u.transpose();
  sigma_eps += epsilon * (Eigen::MatrixXd::Identity(n, n) - u * u.transpose());
  sigma_eps = 0.5 * (sigma_eps + sigma_eps.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sig_eig(sigma_eps);
  if (sig_eig.info() != Eigen::Success) throw Error(ErrorKind::numerical, "eigensolver failed on sigma_eps");
  const Eigen::VectorXd log_w = sig_eig.eigenvalues().array().log();
  const Eigen::MatrixXd log_sigma = sig_eig.eigenvectors() * log_w.asDiagonal() * sig_eig.eigenvectors().transpose();

  const double cross_term = (rho * log_sigma).trace();
  return self_term - cross_term;
}

nlohmann::json feature_sidecar(const FeatureVector& features) {
  nlohmann::json doc;
  doc["encoder_id"] = features.encoder_id;
  doc["provenance"] = {{"epsilon", features.provenance.epsilon},
                       {"rank_tolerance", features.provenance.rank_tolerance},
                       {"normalized", features.provenance.normalized}};
  doc["qre_total"] = features.qre_total;
  doc["min_value"] = features.values.size() > 0 ? features.values.minCoeff() : 0.0;
  return doc;
}

void write_feature_vector(const FeatureVector& features, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.put_bytes("EFVC");
  out.put_u32(kFeatureVersion);
  out.put_u64(static_cast<std::uint64_t>(features.values.size()));
  out.put_f64(features.provenance.epsilon);
  out.put_f64(features.qre_total);
  for (const double v : features.values) out.put_f64(v);
  detail::write_file_atomic(path, out.bytes());
}

FeatureVector read_feature_vector(const std::filesystem::path& path) {
  const auto data = detail::read_file(path);
  detail::ByteReader in(data);
  if (!in.take_magic("EFVC")) throw Error(ErrorKind::format, path.string() + ": missing EFVC magic");
  if (in.remaining() < 28) throw Error(ErrorKind::format, path.string() + ": truncated header");
  const auto version = in.u32();
  if (version != kFeatureVersion) {
    throw Error(ErrorKind::format, path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto n = in.u64();
  FeatureVector fv;
  fv.provenance.epsilon = in.f64();
  fv.qre_total = in.f64();
  if (n == 0 || n > std::numeric_limits<std::uint64_t>::max() / 8 || in.remaining() != 8 * n) {
    throw Error(ErrorKind::corruption, path.string() + ": payload size does not match header");
  }
  fv.values.resize(static_cast<Eigen::Index>(n));
  for (auto& v : fv.values) {
    v = in.f64();
    if (!std::isfinite(v)) throw Error(ErrorKind::validation, path.string() + ": non-finite feature value");
  }
  fv.encoder_id = path.stem().string();
  const auto meta = read_sidecar(path);
  if (meta.is_object()) {
    if (meta.contains("encoder_id")) fv.encoder_id = meta["encoder_id"].get<std::string>();
    if (meta.contains("provenance")) {
      const auto& prov = meta["provenance"];
      fv.provenance.rank_tolerance = prov.value("rank_tolerance", kDefaultRankTolerance);
      fv.provenance.normalized = prov.value("normalized", false);
    }
  }
  return fv;
}

}  // namespace encmap
