#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "encmap/embedding_io.hpp"

namespace encmap {

inline constexpr double kDefaultRankTolerance = 1e-12;
inline constexpr Eigen::Index kDefaultOracleMaxDim = 2048;

/// Eigenpairs of the trace-normalized Gram (PIP) matrix of an embedding matrix.
///
/// Only the K retained eigenpairs are stored: `eigenvalues` is descending and
/// `eigenvectors` is N x K with orthonormal columns. The N x N density matrix
/// itself is never formed on the fast path.
struct DensitySpectrum {
  std::string encoder_id;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  // Columns of the source embedding matrix; equals rank() when unknown.
  Eigen::Index source_dim = 0;
  double rank_tolerance = kDefaultRankTolerance;
  bool normalized = false;

  Eigen::Index ambient_dim() const noexcept { return eigenvectors.rows(); }
  Eigen::Index rank() const noexcept { return eigenvalues.size(); }

  /// Throws validation if any structural invariant is violated.
  void validate() const;
};

/// Thin SVD of the embedding matrix; eigenvalues are squared singular values
/// over their sum, kept where that ratio exceeds `rank_tolerance`. The retained
/// spectrum is not renormalized.
DensitySpectrum compute_spectrum(const EmbeddingMatrix& matrix,
                                 double rank_tolerance = kDefaultRankTolerance);

/// Dense reference path: forms G = A A^T, divides by its trace and runs a
/// symmetric eigensolver. Intended for tests and small N only.
DensitySpectrum explicit_spectrum_oracle(const EmbeddingMatrix& matrix,
                                         Eigen::Index max_dim = kDefaultOracleMaxDim);

/// H = -sum lambda ln lambda with 0 ln 0 = 0.
double von_neumann_entropy(const DensitySpectrum& spectrum);

/// V diag(lambda) V^T as a dense N x N matrix.
Eigen::MatrixXd dense_density(const DensitySpectrum& spectrum);

/// Flips each column so that its largest-magnitude entry is positive.
void canonicalize_signs(Eigen::MatrixXd& columns);

/// Writes only the binary payload; see spectrum_sidecar() for the metadata.
void write_spectrum(const DensitySpectrum& spectrum, const std::filesystem::path& path);
nlohmann::json spectrum_sidecar(const DensitySpectrum& spectrum);
/// Reads the binary payload plus its sidecar when present (encoder_id and
/// provenance); without a sidecar the encoder_id is the file stem.
DensitySpectrum read_spectrum(const std::filesystem::path& path);

}  // namespace encmap
