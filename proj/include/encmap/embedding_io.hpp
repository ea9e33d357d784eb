#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace encmap {

/// N x d matrix of sentence embeddings for one encoder (rows are sentences).
/// Immutable once constructed; the constructor enforces the invariants.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::string encoder_id, Eigen::MatrixXd values, bool normalized = false);

  const std::string& encoder_id() const noexcept { return encoder_id_; }
  Eigen::Index n_rows() const noexcept { return values_.rows(); }
  Eigen::Index n_cols() const noexcept { return values_.cols(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  bool normalized() const noexcept { return normalized_; }

  EmbeddingMatrix with_id(std::string encoder_id) const;

 private:
  std::string encoder_id_;
  Eigen::MatrixXd values_;
  bool normalized_;
};

struct EncoderRecord {
  std::string encoder_id;
  std::string encoder_type;
  std::optional<std::int64_t> param_count;
  std::int64_t dimensionality = 0;
  std::vector<std::string> languages;
  std::vector<std::string> tasks;
  std::vector<std::string> datasets;
  // Free-form labels (e.g. synthetic group) usable for coloring.
  std::map<std::string, std::string> attributes;

  bool operator==(const EncoderRecord&) const = default;
};

/// Header: "EMAP", u32 version, u64 rows, u64 cols, u8 dtype, 7 reserved bytes.
inline constexpr std::size_t kEmbeddingHeaderBytes = 32;

EmbeddingMatrix read_embedding_matrix(const std::filesystem::path& path);
void write_embedding_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

/// Throws degenerate_input naming the first zero row.
EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& matrix);

// Sidecar documents live next to the data file as `<file>.meta.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& data_path);

nlohmann::json to_json(const EncoderRecord& record);
EncoderRecord encoder_record_from_json(const nlohmann::json& doc);

/// Parses a sidecar document; returns a null json if the file does not exist.
nlohmann::json read_sidecar(const std::filesystem::path& data_path);
void write_sidecar(const std::filesystem::path& data_path, const nlohmann::json& doc);
/// Key-sorted, two-space indented text with a trailing newline.
std::string canonical_json(const nlohmann::json& doc);

/// Throws validation if the record's dimensionality disagrees with the matrix.
void check_record_matches(const EncoderRecord& record, const EmbeddingMatrix& matrix);

}  // namespace encmap
