#include "encmap/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "encmap/binary_io.hpp"
#include "encmap/error.hpp"

namespace encmap {

namespace {

// tab20
constexpr std::array<const char*, 20> kPalette = {
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5"};

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr double kMargin = 40.0;
constexpr double kLegendWidth = 200.0;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

const std::set<std::string>& record_fields() {
  static const std::set<std::string> fields = {"encoder_id", "encoder_type", "param_count", "dimensionality",
                                               "languages",  "tasks",        "datasets"};
  return fields;
}

std::string first_or_unknown(const std::vector<std::string>& values) {
  return values.empty() || values.front().empty() ? "unknown" : values.front();
}

}  // namespace

std::string attribute_value(const EncoderRecord& record, const std::string& field) {
  if (field == "encoder_id") return record.encoder_id;
  if (field == "encoder_type") return record.encoder_type.empty() ? "unknown" : record.encoder_type;
  if (field == "param_count") return record.param_count ? std::to_string(*record.param_count) : "unknown";
  if (field == "dimensionality") return record.dimensionality > 0 ? std::to_string(record.dimensionality) : "unknown";
  if (field == "languages") return first_or_unknown(record.languages);
  if (field == "tasks") return first_or_unknown(record.tasks);
  if (field == "datasets") return first_or_unknown(record.datasets);
  const auto it = record.attributes.find(field);
  return it == record.attributes.end() || it->second.empty() ? "unknown" : it->second;
}

std::vector<LegendEntry> build_legend(const std::vector<std::string>& values) {
  std::map<std::string, std::size_t> counts;
  for (const auto& v : values) ++counts[v];
  std::vector<LegendEntry> entries;
  for (const auto& [value, count] : counts) entries.push_back({value, "", count});
  std::sort(entries.begin(), entries.end(), [](const LegendEntry& a, const LegendEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.value < b.value;
  });
  if (entries.size() > kLegendCap) {
    LegendEntry other{"other", kOtherColor, 0};
    for (std::size_t i = kLegendCap - 1; i < entries.size(); ++i) other.count += entries[i].count;
    entries.resize(kLegendCap - 1);
    entries.push_back(other);
  }
  // Hash picks the starting slot; probing keeps colors distinct within a legend.
  std::array<bool, kPalette.size()> used{};
  for (auto& e : entries) {
    if (e.value == "other" && e.color == kOtherColor) continue;
    if (e.value == "unknown") {
      e.color = kUnknownColor;
      continue;
    }
    auto slot = static_cast<std::size_t>(fnv1a(e.value) % kPalette.size());
    while (used[slot]) slot = (slot + 1) % kPalette.size();
    used[slot] = true;
    e.color = kPalette[slot];
  }
  return entries;
}

std::string scatter_svg(const PlotSpec& spec) {
  const auto& layout = spec.layout;
  const auto m = layout.ids.size();
  if (static_cast<std::size_t>(layout.coords.rows()) != m || layout.coords.cols() != 2) {
    throw Error(ErrorKind::validation, "layout must have one 2D coordinate per id");
  }
  std::map<std::string, const EncoderRecord*> by_id;
  for (const auto& r : spec.records) {
    if (!by_id.emplace(r.encoder_id, &r).second) {
      throw Error(ErrorKind::validation, "duplicate record for " + r.encoder_id);
    }
  }
  const std::set<std::string> layout_ids(layout.ids.begin(), layout.ids.end());
  for (const auto& r : spec.records) {
    if (!layout_ids.count(r.encoder_id)) {
      throw Error(ErrorKind::validation, "record " + r.encoder_id + " has no position in the layout");
    }
  }
  if (!record_fields().count(spec.color_by)) {
    const bool any = std::any_of(spec.records.begin(), spec.records.end(),
                                 [&](const EncoderRecord& r) { return r.attributes.count(spec.color_by) > 0; });
    if (!any) throw Error(ErrorKind::validation, "color_by '" + spec.color_by + "' is not a record field or attribute");
  }

  std::vector<std::string> values(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto it = by_id.find(layout.ids[i]);
    values[i] = it == by_id.end() ? "unknown" : attribute_value(*it->second, spec.color_by);
  }
  const auto legend = build_legend(values);
  std::map<std::string, std::string> color_of;
  for (const auto& e : legend) color_of[e.value] = e.color;
  const auto color_for = [&](const std::string& v) {
    const auto it = color_of.find(v);
    return it != color_of.end() ? it->second : std::string(kOtherColor);
  };

  BoundingBox box;
  if (spec.crop) {
    box = *spec.crop;
  } else if (m > 0) {
    box = {layout.coords.col(0).minCoeff(), layout.coords.col(0).maxCoeff(), layout.coords.col(1).minCoeff(),
           layout.coords.col(1).maxCoeff()};
  }
  const double span_x = std::max(box.x_max - box.x_min, 1e-12);
  const double span_y = std::max(box.y_max - box.y_min, 1e-12);
  const double plot_w = kWidth - kLegendWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  const auto px = [&](double x) { return kMargin + (x - box.x_min) / span_x * plot_w; };
  const auto py = [&](double y) { return kHeight - kMargin - (y - box.y_min) / span_y * plot_h; };
  const std::set<std::string> highlighted(spec.highlight.begin(), spec.highlight.end());

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text class=\"title\" x=\"" << num(kMargin) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(spec.title) << "</text>\n<g class=\"markers\">\n";
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double x = layout.coords(r, 0);
    const double y = layout.coords(r, 1);
    if (spec.crop && (x < box.x_min || x > box.x_max || y < box.y_min || y > box.y_max)) continue;
    const bool hl = highlighted.count(layout.ids[i]) > 0;
    svg << "<circle class=\"marker\" data-id=\"" << xml_escape(layout.ids[i]) << "\" data-value=\""
        << xml_escape(values[i]) << "\" cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\""
        << (hl ? "6" : "4") << "\" fill=\"" << color_for(values[i]) << "\""
        << (hl ? " stroke=\"black\" stroke-width=\"1.5\"" : "") << "/>\n";
    if (hl) {
      svg << "<text class=\"highlight-label\" x=\"" << num(px(x) + 8) << "\" y=\"" << num(py(y) - 8)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(layout.ids[i]) << "</text>\n";
    }
  }
  svg << "</g>\n<g class=\"legend\">\n";
  const double lx = kWidth - kLegendWidth;
  double ly = kMargin;
  svg << "<text x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(spec.color_by) << "</text>\n";
  for (const auto& e : legend) {
    ly += 18;
    svg << "<g class=\"legend-entry\" data-value=\"" << xml_escape(e.value) << "\"><rect x=\"" << num(lx) << "\" y=\""
        << num(ly - 10) << "\" width=\"10\" height=\"10\" fill=\"" << e.color << "\"/><text x=\"" << num(lx + 16)
        << "\" y=\"" << num(ly) << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(e.value) << " ("
        << e.count << ")</text></g>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

void render_scatter(const PlotSpec& spec, const std::filesystem::path& path) {
  detail::write_text_atomic(path, scatter_svg(spec));
}

std::string dendrogram_svg(const Dendrogram& tree, bool log_heights) {
  const auto order = tree.leaf_order();
  const auto leaves = tree.leaf_count();
  const auto& nodes = tree.nodes();
  const auto scale_h = [&](double h) { return log_heights ? std::log1p(h) : h; };
  const double top = std::max(scale_h(tree.node(tree.root()).merge_height), 1e-12);

  constexpr double label_band = 120.0;
  const double plot_w = kWidth - 2 * kMargin - 40.0;
  const double plot_h = kHeight - 2 * kMargin - label_band;
  const double base_y = kMargin + plot_h;
  const auto ypos = [&](double h) { return base_y - scale_h(h) / top * plot_h; };

  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < order.size(); ++i) slot[order[i]] = i;
  std::vector<double> xs(nodes.size());
  const double step = leaves > 1 ? plot_w / static_cast<double>(leaves - 1) : 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    xs[i] = n.is_leaf() ? kMargin + 40.0 + step * static_cast<double>(slot[n.leaf_id])
                        : 0.5 * (xs[static_cast<std::size_t>(n.left)] + xs[static_cast<std::size_t>(n.right)]);
  }

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<g class=\"axis\" data-scale=\"" << (log_heights ? "log1p" : "linear") << "\">\n"
      << "<line x1=\"" << num(kMargin + 20) << "\" y1=\"" << num(base_y) << "\" x2=\"" << num(kMargin + 20)
      << "\" y2=\"" << num(kMargin) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double frac = t / 4.0;
    const double value = frac * top;
    const double h = log_heights ? std::expm1(value) : value;
    const double y = base_y - frac * plot_h;
    char label[32];
    std::snprintf(label, sizeof label, "%.3g", h);
    svg << "<text x=\"" << num(kMargin + 16) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << label << "</text>\n";
  }
  svg << "</g>\n<g class=\"junctions\">\n";
  for (std::size_t i = leaves; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    const auto l = static_cast<std::size_t>(n.left);
    const auto r = static_cast<std::size_t>(n.right);
    const double y = ypos(n.merge_height);
    char height[32];
    std::snprintf(height, sizeof height, "%.12g", n.merge_height);
    svg << "<path class=\"junction\" data-node=\"" << i << "\" data-height=\"" << height << "\" data-y=\""
        << num(y) << "\" d=\"M" << num(xs[l]) << ' ' << num(ypos(nodes[l].merge_height)) << " V" << num(y) << " H"
        << num(xs[r]) << " V" << num(ypos(nodes[r].merge_height)) << "\" fill=\"none\" stroke=\"black\"/>\n";
  }
  svg << "</g>\n<g class=\"leaves\">\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double x = kMargin + 40.0 + step * static_cast<double>(i);
    svg << "<text class=\"leaf\" data-rank=\"" << i << "\" x=\"" << num(x) << "\" y=\"" << num(base_y + 8)
        << "\" transform=\"rotate(90 " << num(x) << ' ' << num(base_y + 8)
        << ")\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(order[i]) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

void render_dendrogram(const Dendrogram& tree, bool log_heights, const std::filesystem::path& path) {
  detail::write_text_atomic(path, dendrogram_svg(tree, log_heights));
}

}  // namespace encmap
