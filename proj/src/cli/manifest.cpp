#include "manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>

#include "encmap/binary_io.hpp"
#include "encmap/embedding_io.hpp"
#include "encmap/error.hpp"

#ifndef ENCMAP_VERSION
#define ENCMAP_VERSION "0.0.0"
#endif

namespace encmap::cli {

std::string file_digest(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw Error(ErrorKind::io, "cannot hash " + path.string());
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string timestamp_now() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm utc{};
  gmtime_r(&t, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

RunManifest::RunManifest(std::string subcommand, std::filesystem::path output_dir)
    : subcommand_(std::move(subcommand)),
      output_dir_(std::move(output_dir)),
      file_name_(subcommand_ + ".manifest.json"),
      started_at_(timestamp_now()) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  nlohmann::json entry{{"path", path.string()}};
  try {
    entry["sha256"] = file_digest(path);
  } catch (const Error&) {
    entry["sha256"] = nullptr;
  }
  inputs_.push_back(std::move(entry));
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path.filename().string()); }

void RunManifest::add_error(const std::string& message) { errors_.push_back(message); }

void RunManifest::add_warning(const std::string& message) { warnings_.push_back(message); }

nlohmann::json RunManifest::reference() const { return file_name_; }

void RunManifest::write(int exit_code) const {
  nlohmann::json doc;
  doc["tool"] = "encmap";
  doc["version"] = ENCMAP_VERSION;
  doc["subcommand"] = subcommand_;
  doc["parameters"] = parameters_;
  doc["inputs"] = inputs_;
  doc["outputs"] = outputs_;
  doc["errors"] = errors_;
  doc["warnings"] = warnings_;
  doc["exit_code"] = exit_code;
  doc["started_at"] = started_at_;
  doc["finished_at"] = timestamp_now();
  detail::write_text_atomic(output_dir_ / file_name_, canonical_json(doc));
}

}  // namespace encmap::cli
