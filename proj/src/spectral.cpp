#include "encmap/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "encmap/binary_io.hpp"
#include "encmap/error.hpp"

namespace encmap {

namespace {

constexpr std::uint32_t kSpectrumVersion = 1;
constexpr double kOracleCutoff = 1e-12;

}  // namespace

void DensitySpectrum::validate() const {
  const auto k = rank();
  if (k < 1) throw Error(ErrorKind::validation, encoder_id + ": spectrum is empty");
  if (eigenvectors.cols() != k) {
    throw Error(ErrorKind::validation, encoder_id + ": eigenvector count does not match eigenvalue count");
  }
  if (k > ambient_dim()) throw Error(ErrorKind::validation, encoder_id + ": rank exceeds ambient dimension");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::isfinite(eigenvalues[i]) || eigenvalues[i] < 0.0) {
      throw Error(ErrorKind::validation, encoder_id + ": eigenvalue " + std::to_string(i) + " is negative or non-finite");
    }
    if (i > 0 && eigenvalues[i] > eigenvalues[i - 1]) {
      throw Error(ErrorKind::validation, encoder_id + ": eigenvalues are not descending");
    }
  }
  // Truncation may drop at most rank_tolerance per discarded eigenvalue.
  const double slack = std::max(1e-10, rank_tolerance * static_cast<double>(std::max(source_dim, k)));
  const double mass = eigenvalues.sum();
  if (mass > 1.0 + 1e-10 || mass < 1.0 - slack) {
    throw Error(ErrorKind::validation, encoder_id + ": eigenvalues do not sum to one");
  }
  const Eigen::MatrixXd gram = eigenvectors.transpose() * eigenvectors;
  const double off = (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  if (!(off <= 1e-8)) {
    throw Error(ErrorKind::validation, encoder_id + ": eigenvectors are not orthonormal (max deviation " +
                                           std::to_string(off) + ")");
  }
}

void canonicalize_signs(Eigen::MatrixXd& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index arg = 0;
    columns.col(j).cwiseAbs().maxCoeff(&arg);
    if (columns(arg, j) < 0.0) columns.col(j) = -columns.col(j);
  }
}

DensitySpectrum compute_spectrum(const EmbeddingMatrix& matrix, double rank_tolerance) {
  if (!(rank_tolerance >= 0.0)) {
    throw Error(ErrorKind::parameter, "rank tolerance must be nonnegative");
  }
  const auto& a = matrix.values();
  if (a.isZero(0.0)) {
    throw Error(ErrorKind::degenerate_input, matrix.encoder_id() + ": embedding matrix is all zeros");
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical, matrix.encoder_id() + ": SVD did not converge (" +
                                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                          ", max |a| = " + std::to_string(a.cwiseAbs().maxCoeff()) + ")");
  }
  const Eigen::VectorXd squared = svd.singularValues().array().square();
  const double total = squared.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorKind::numerical, matrix.encoder_id() + ": singular values sum to " + std::to_string(total));
  }

  Eigen::Index kept = 0;
  while (kept < squared.size() && squared[kept] / total > rank_tolerance) ++kept;

  DensitySpectrum out;
  out.encoder_id = matrix.encoder_id();
  out.eigenvalues = squared.head(kept) / total;
  out.eigenvectors = svd.matrixU().leftCols(kept);
  canonicalize_signs(out.eigenvectors);
  out.source_dim = a.cols();
  out.rank_tolerance = rank_tolerance;
  out.normalized = matrix.normalized();
  return out;
}

DensitySpectrum explicit_spectrum_oracle(const EmbeddingMatrix& matrix, Eigen::Index max_dim) {
  const auto& a = matrix.values();
  if (a.rows() > max_dim) {
    throw Error(ErrorKind::resource_limit, matrix.encoder_id() + ": N = " + std::to_string(a.rows()) +
                                               " exceeds the dense oracle cap of " + std::to_string(max_dim));
  }
  Eigen::MatrixXd gram = a * a.transpose();
  const double trace = gram.trace();
  if (!(trace > 0.0)) {
    throw Error(ErrorKind::degenerate_input, matrix.encoder_id() + ": embedding matrix is all zeros");
  }
  gram /= trace;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical, matrix.encoder_id() + ": symmetric eigensolver did not converge");
  }
  // Ascending order from the solver; walk it backwards.
  const auto& values = eig.eigenvalues();
  const auto n = values.size();
  Eigen::Index kept = 0;
  while (kept < n && values[n - 1 - kept] > kOracleCutoff) ++kept;

  DensitySpectrum out;
  out.encoder_id = matrix.encoder_id();
  out.eigenvalues.resize(kept);
  out.eigenvectors.resize(a.rows(), kept);
  for (Eigen::Index i = 0; i < kept; ++i) {
    out.eigenvalues[i] = values[n - 1 - i];
    out.eigenvectors.col(i) = eig.eigenvectors().col(n - 1 - i);
  }
  canonicalize_signs(out.eigenvectors);
  out.source_dim = a.cols();
  out.rank_tolerance = kOracleCutoff;
  out.normalized = matrix.normalized();
  return out;
}

double von_neumann_entropy(const DensitySpectrum& spectrum) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < spectrum.rank(); ++i) {
    const double l = spectrum.eigenvalues[i];
    if (l > 0.0) h -= l * std::log(l);
  }
  return h;
}

Eigen::MatrixXd dense_density(const DensitySpectrum& spectrum) {
  const auto& v = spectrum.eigenvectors;
  return v * spectrum.eigenvalues.asDiagonal() * v.transpose();
}

void write_spectrum(const DensitySpectrum& spectrum, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.put_bytes("ESPC");
  out.put_u32(kSpectrumVersion);
  out.put_u64(static_cast<std::uint64_t>(spectrum.ambient_dim()));
  out.put_u64(static_cast<std::uint64_t>(spectrum.rank()));
  for (Eigen::Index i = 0; i < spectrum.rank(); ++i) out.put_f64(spectrum.eigenvalues[i]);
  // Eigen's default storage is column-major, matching the on-disk layout.
  const auto& v = spectrum.eigenvectors;
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) out.put_f64(v(i, j));
  }
  detail::write_file_atomic(path, out.bytes());
}

nlohmann::json spectrum_sidecar(const DensitySpectrum& spectrum) {
  nlohmann::json doc;
  doc["encoder_id"] = spectrum.encoder_id;
  doc["provenance"] = {{"rank_tolerance", spectrum.rank_tolerance},
                       {"normalized", spectrum.normalized},
                       {"source_dim", spectrum.source_dim}};
  return doc;
}

DensitySpectrum read_spectrum(const std::filesystem::path& path) {
  const auto data = detail::read_file(path);
  detail::ByteReader in(data);
  if (!in.take_magic("ESPC")) throw Error(ErrorKind::format, path.string() + ": missing ESPC magic");
  if (in.remaining() < 20) throw Error(ErrorKind::format, path.string() + ": truncated header");
  const auto version = in.u32();
  if (version != kSpectrumVersion) {
    throw Error(ErrorKind::format, path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto n = in.u64();
  const auto k = in.u64();
  if (n == 0 || k == 0 || k > n) {
    throw Error(ErrorKind::corruption, path.string() + ": invalid shape N=" + std::to_string(n) +
                                           " K=" + std::to_string(k));
  }
  constexpr auto max_count = std::numeric_limits<std::uint64_t>::max() / 8;
  if (k > max_count / (n + 1)) throw Error(ErrorKind::corruption, path.string() + ": header shape overflows");
  if (in.remaining() != 8 * (k + n * k)) {
    throw Error(ErrorKind::corruption, path.string() + ": payload size does not match header");
  }
  DensitySpectrum s;
  s.encoder_id = path.stem().string();
  s.eigenvalues.resize(static_cast<Eigen::Index>(k));
  for (auto& l : s.eigenvalues) l = in.f64();
  s.eigenvectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (Eigen::Index j = 0; j < s.eigenvectors.cols(); ++j) {
    for (Eigen::Index i = 0; i < s.eigenvectors.rows(); ++i) s.eigenvectors(i, j) = in.f64();
  }
  s.source_dim = static_cast<Eigen::Index>(k);
  const auto meta = read_sidecar(path);
  if (meta.is_object()) {
    if (meta.contains("encoder_id")) s.encoder_id = meta["encoder_id"].get<std::string>();
    if (meta.contains("provenance")) {
      const auto& prov = meta["provenance"];
      s.rank_tolerance = prov.value("rank_tolerance", kDefaultRankTolerance);
      s.normalized = prov.value("normalized", false);
      s.source_dim = prov.value("source_dim", s.source_dim);
    }
  }
  s.validate();
  return s;
}

}  // namespace encmap
