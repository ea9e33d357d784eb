#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "encmap/distance.hpp"
#include "encmap/embedding_io.hpp"
#include "encmap/projection.hpp"

namespace encmap {

struct BoundingBox {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
};

struct PlotSpec {
  MapLayout layout;
  std::vector<EncoderRecord> records;
  std::string color_by = "encoder_type";
  std::vector<std::string> highlight;
  std::string title;
  std::optional<BoundingBox> crop;  // draw only points inside, scaled to the box
};

inline constexpr std::size_t kLegendCap = 20;
inline constexpr const char* kUnknownColor = "#bdbdbd";
inline constexpr const char* kOtherColor = "#525252";

/// Value of a record field (or free-form attribute) as a string; list fields
/// yield their first entry. Missing values come back as "unknown".
std::string attribute_value(const EncoderRecord& record, const std::string& field);

struct LegendEntry {
  std::string value;
  std::string color;
  std::size_t count = 0;
};

/// Distinct values by descending frequency (ties by value). More than
/// kLegendCap values collapse the tail into "other".
std::vector<LegendEntry> build_legend(const std::vector<std::string>& values);

std::string scatter_svg(const PlotSpec& spec);
void render_scatter(const PlotSpec& spec, const std::filesystem::path& path);

/// Heights are drawn as ln(1 + h) when `log_heights` is set.
std::string dendrogram_svg(const Dendrogram& tree, bool log_heights);
void render_dendrogram(const Dendrogram& tree, bool log_heights, const std::filesystem::path& path);

}  // namespace encmap
