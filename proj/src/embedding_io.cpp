#include "encmap/embedding_io.hpp"

#include <cmath>
#include <limits>

#include "encmap/binary_io.hpp"
#include "encmap/error.hpp"

namespace encmap {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint8_t kDtypeFloat32 = 1;

void check_finite(const Eigen::MatrixXd& values) {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (!std::isfinite(values(i, j))) {
        throw Error(ErrorKind::validation, "non-finite value at row " + std::to_string(i) +
                                               ", column " + std::to_string(j));
      }
    }
  }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::string encoder_id, Eigen::MatrixXd values, bool normalized)
    : encoder_id_(std::move(encoder_id)), values_(std::move(values)), normalized_(normalized) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw Error(ErrorKind::validation, "embedding matrix must have at least one row and column");
  }
  check_finite(values_);
  if (normalized_) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if (std::abs(values_.row(i).norm() - 1.0) > 1e-6) {
        throw Error(ErrorKind::validation,
                    "row " + std::to_string(i) + " is not unit norm but matrix is flagged normalized");
      }
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::with_id(std::string encoder_id) const {
  return EmbeddingMatrix(std::move(encoder_id), values_, normalized_);
}

EmbeddingMatrix read_embedding_matrix(const std::filesystem::path& path) {
  const auto data = detail::read_file(path);
  detail::ByteReader in(data);
  if (!in.take_magic("EMAP")) {
    throw Error(ErrorKind::format, path.string() + ": missing EMAP magic");
  }
  if (in.remaining() < kEmbeddingHeaderBytes - 4) {
    throw Error(ErrorKind::format, path.string() + ": truncated header");
  }
  const auto version = in.u32();
  if (version != kFormatVersion) {
    throw Error(ErrorKind::format, path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto rows = in.u64();
  const auto cols = in.u64();
  const auto dtype = in.u8();
  if (dtype != kDtypeFloat32) {
    throw Error(ErrorKind::format, path.string() + ": unsupported dtype " + std::to_string(dtype));
  }
  in.skip(7);

  if (rows == 0 || cols == 0) {
    throw Error(ErrorKind::corruption, path.string() + ": zero-sized shape in header");
  }
  constexpr auto max_count = std::numeric_limits<std::uint64_t>::max() / 4;
  if (cols > max_count / rows) {
    throw Error(ErrorKind::corruption, path.string() + ": header shape overflows");
  }
  const std::uint64_t expected = rows * cols * 4;
  if (in.remaining() != expected) {
    throw Error(ErrorKind::corruption, path.string() + ": header declares " + std::to_string(rows) + "x" +
                                           std::to_string(cols) + " (" + std::to_string(expected) +
                                           " payload bytes) but file has " +
                                           std::to_string(in.remaining()));
  }

  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) values(i, j) = static_cast<double>(in.f32());
  }
  check_finite(values);
  return EmbeddingMatrix(path.stem().string(), std::move(values));
}

void write_embedding_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.put_bytes("EMAP");
  out.put_u32(kFormatVersion);
  out.put_u64(static_cast<std::uint64_t>(matrix.n_rows()));
  out.put_u64(static_cast<std::uint64_t>(matrix.n_cols()));
  out.put_u8(kDtypeFloat32);
  out.put_zeros(7);
  const auto& v = matrix.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) out.put_f32(static_cast<float>(v(i, j)));
  }
  detail::write_file_atomic(path, out.bytes());
}

EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& matrix) {
  Eigen::MatrixXd values = matrix.values();
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double norm = values.row(i).norm();
    if (norm == 0.0) {
      throw Error(ErrorKind::degenerate_input,
                  matrix.encoder_id() + ": row " + std::to_string(i) + " is all zeros");
    }
    values.row(i) /= norm;
  }
  return EmbeddingMatrix(matrix.encoder_id(), std::move(values), true);
}

std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
  auto p = data_path;
  p += ".meta.json";
  return p;
}

nlohmann::json to_json(const EncoderRecord& record) {
  nlohmann::json doc;
  doc["encoder_id"] = record.encoder_id;
  doc["encoder_type"] = record.encoder_type;
  doc["param_count"] = record.param_count ? nlohmann::json(*record.param_count) : nlohmann::json(nullptr);
  doc["dimensionality"] = record.dimensionality;
  doc["languages"] = record.languages;
  doc["tasks"] = record.tasks;
  doc["datasets"] = record.datasets;
  doc["attributes"] = record.attributes;
  return doc;
}

namespace {

std::vector<std::string> string_list(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return {};
  return doc[key].get<std::vector<std::string>>();
}

}  // namespace

EncoderRecord encoder_record_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::format, "encoder record must be a JSON object");
  try {
    EncoderRecord r;
    r.encoder_id = doc.at("encoder_id").get<std::string>();
    if (doc.contains("encoder_type") && !doc["encoder_type"].is_null()) {
      r.encoder_type = doc["encoder_type"].get<std::string>();
    }
    if (doc.contains("param_count") && !doc["param_count"].is_null()) {
      r.param_count = doc["param_count"].get<std::int64_t>();
    }
    if (doc.contains("dimensionality") && !doc["dimensionality"].is_null()) {
      r.dimensionality = doc["dimensionality"].get<std::int64_t>();
    }
    r.languages = string_list(doc, "languages");
    r.tasks = string_list(doc, "tasks");
    r.datasets = string_list(doc, "datasets");
    if (doc.contains("attributes") && doc["attributes"].is_object()) {
      for (const auto& [key, value] : doc["attributes"].items()) {
        r.attributes[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("malformed encoder record: ") + e.what());
  }
}

nlohmann::json read_sidecar(const std::filesystem::path& data_path) {
  const auto path = sidecar_path(data_path);
  if (!std::filesystem::exists(path)) return nullptr;
  const auto bytes = detail::read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }
}

std::string canonical_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

void write_sidecar(const std::filesystem::path& data_path, const nlohmann::json& doc) {
  detail::write_text_atomic(sidecar_path(data_path), canonical_json(doc));
}

void check_record_matches(const EncoderRecord& record, const EmbeddingMatrix& matrix) {
  if (record.dimensionality != 0 && record.dimensionality != matrix.n_cols()) {
    throw Error(ErrorKind::validation, record.encoder_id + ": sidecar dimensionality " +
                                           std::to_string(record.dimensionality) + " but matrix has " +
                                           std::to_string(matrix.n_cols()) + " columns");
  }
}

}  // namespace encmap
