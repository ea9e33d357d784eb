#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace encmap::cli {

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

/// ISO-8601 UTC time; honours SOURCE_DATE_EPOCH for reproducible manifests.
std::string timestamp_now();

/// Provenance record written next to every run's outputs.
class RunManifest {
 public:
  RunManifest(std::string subcommand, std::filesystem::path output_dir);

  const std::string& file_name() const noexcept { return file_name_; }
  nlohmann::json& parameters() { return parameters_; }

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void add_error(const std::string& message);
  void add_warning(const std::string& message);

  /// Sidecar fragment tying an artifact to this manifest.
  nlohmann::json reference() const;

  void write(int exit_code) const;

 private:
  std::string subcommand_;
  std::filesystem::path output_dir_;
  std::string file_name_;
  std::string started_at_;
  nlohmann::json parameters_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  nlohmann::json errors_ = nlohmann::json::array();
  nlohmann::json warnings_ = nlohmann::json::array();
};

}  // namespace encmap::cli
