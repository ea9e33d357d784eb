#include "encmap/distance.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "encmap/binary_io.hpp"
#include "encmap/error.hpp"

namespace encmap {

DistanceMatrix::DistanceMatrix(std::vector<std::string> ids, Eigen::MatrixXd values)
    : ids_(std::move(ids)), values_(std::move(values)) {
  const auto m = values_.rows();
  if (values_.cols() != m || static_cast<Eigen::Index>(ids_.size()) != m) {
    throw Error(ErrorKind::shape, "distance matrix must be square with one id per row");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (values_(i, i) != 0.0) throw Error(ErrorKind::validation, "distance matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = values_(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorKind::validation, "distance entries must be finite and nonnegative");
      }
      if (v != values_(j, i)) throw Error(ErrorKind::validation, "distance matrix must be symmetric");
    }
  }
}

Eigen::Index DistanceMatrix::index_of(const std::string& id) const {
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) throw Error(ErrorKind::lookup, "unknown encoder id '" + id + "'");
  return static_cast<Eigen::Index>(it - ids_.begin());
}

void check_comparable(const FeatureVector& a, const FeatureVector& b) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw Error(ErrorKind::comparability, a.encoder_id + " (N=" + std::to_string(a.ambient_dim()) + ") and " +
                                              b.encoder_id + " (N=" + std::to_string(b.ambient_dim()) +
                                              ") have different dimensions");
  }
  if (!(a.provenance == b.provenance)) {
    throw Error(ErrorKind::comparability,
                a.encoder_id + " and " + b.encoder_id +
                    " were computed under different settings (epsilon, rank tolerance or normalization)");
  }
}

double l1_distance(const FeatureVector& a, const FeatureVector& b) {
  check_comparable(a, b);
  return (a.values - b.values).cwiseAbs().sum();
}

DistanceMatrix pairwise_distances(std::span<const FeatureVector> vectors, bool allow_mixed_provenance) {
  const auto m = static_cast<Eigen::Index>(vectors.size());
  if (m < 1) throw Error(ErrorKind::parameter, "need at least one feature vector");
  std::vector<std::string> ids;
  ids.reserve(vectors.size());
  for (const auto& v : vectors) ids.push_back(v.encoder_id);

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const auto& a = vectors[static_cast<std::size_t>(i)];
      const auto& b = vectors[static_cast<std::size_t>(j)];
      if (allow_mixed_provenance) {
        if (a.ambient_dim() != b.ambient_dim()) check_comparable(a, b);
      } else {
        check_comparable(a, b);
      }
      const double v = (a.values - b.values).cwiseAbs().sum();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return DistanceMatrix(std::move(ids), std::move(d));
}

std::vector<Neighbor> nearest_neighbors(const DistanceMatrix& d, const std::string& target, Eigen::Index k) {
  const auto t = d.index_of(target);
  if (k < 1 || k > d.size() - 1) {
    throw Error(ErrorKind::parameter, "k must be in [1, " + std::to_string(d.size() - 1) + "], got " +
                                          std::to_string(k));
  }
  std::vector<Neighbor> all;
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    if (j != t) all.push_back({d.ids()[static_cast<std::size_t>(j)], d(t, j)});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.encoder_id < b.encoder_id;
  });
  all.resize(static_cast<std::size_t>(k));
  return all;
}

Linkage parse_linkage(const std::string& name) {
  if (name == "single") return Linkage::single;
  if (name == "complete") return Linkage::complete;
  if (name == "average") return Linkage::average;
  throw Error(ErrorKind::parameter, "unknown linkage '" + name + "' (expected single, complete or average)");
}

std::string to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
  }
  return "average";
}

Dendrogram::Dendrogram(std::vector<DendrogramNode> nodes, std::size_t leaf_count)
    : nodes_(std::move(nodes)), leaf_count_(leaf_count) {
  if (leaf_count_ < 1 || nodes_.size() != 2 * leaf_count_ - 1) {
    throw Error(ErrorKind::validation, "dendrogram must have 2M - 1 nodes");
  }
}

std::vector<std::string> Dendrogram::leaf_order() const {
  std::vector<std::string> order;
  std::vector<int> stack{root()};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const auto& n = node(i);
    if (n.is_leaf()) {
      order.push_back(n.leaf_id);
    } else {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  return order;
}

std::vector<int> Dendrogram::cut(std::size_t clusters) const {
  if (clusters < 1 || clusters > leaf_count_) {
    throw Error(ErrorKind::parameter, "cluster count must be in [1, " + std::to_string(leaf_count_) + "]");
  }
  std::vector<int> parent(nodes_.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };

  const std::size_t merges_to_apply = leaf_count_ - clusters;
  for (std::size_t t = 0; t < merges_to_apply; ++t) {
    const int idx = static_cast<int>(leaf_count_ + t);
    const auto& n = nodes_[static_cast<std::size_t>(idx)];
    parent[find(n.left)] = idx;
    parent[find(n.right)] = idx;
  }
  std::vector<int> labels(leaf_count_, -1);
  std::vector<std::pair<int, int>> seen;
  for (std::size_t leaf = 0; leaf < leaf_count_; ++leaf) {
    const int r = find(static_cast<int>(leaf));
    auto it = std::find_if(seen.begin(), seen.end(), [r](const auto& p) { return p.first == r; });
    if (it == seen.end()) {
      seen.emplace_back(r, static_cast<int>(seen.size()));
      labels[leaf] = seen.back().second;
    } else {
      labels[leaf] = it->second;
    }
  }
  return labels;
}

namespace {

std::string newick_label(const std::string& id) {
  if (id.find_first_of(" ()[]':;,\t") == std::string::npos && !id.empty()) return id;
  std::string out = "'";
  for (const char c : id) {
    if (c == '\'') out += "''";
    else out += c;
  }
  return out + "'";
}

std::string format_length(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string Dendrogram::to_newick() const {
  std::function<std::string(int)> emit = [&](int i) -> std::string {
    const auto& n = node(i);
    if (n.is_leaf()) return newick_label(n.leaf_id);
    const auto branch = [&](int child) {
      return emit(child) + ":" + format_length(n.merge_height - node(child).merge_height);
    };
    return "(" + branch(n.left) + "," + branch(n.right) + ")";
  };
  return emit(root()) + ";";
}

Dendrogram hierarchical_cluster(const DistanceMatrix& d, Linkage linkage) {
  const auto m = d.size();
  if (m < 2) throw Error(ErrorKind::parameter, "hierarchical clustering needs at least two encoders");

  std::vector<DendrogramNode> nodes;
  nodes.reserve(static_cast<std::size_t>(2 * m - 1));
  for (Eigen::Index i = 0; i < m; ++i) {
    DendrogramNode leaf;
    leaf.leaf_id = d.ids()[static_cast<std::size_t>(i)];
    nodes.push_back(std::move(leaf));
  }

  // Slot i holds the cluster whose smallest original index is i.
  Eigen::MatrixXd work = d.values();
  std::vector<bool> active(static_cast<std::size_t>(m), true);
  std::vector<int> slot_node(static_cast<std::size_t>(m));
  std::vector<std::size_t> slot_size(static_cast<std::size_t>(m), 1);
  std::iota(slot_node.begin(), slot_node.end(), 0);

  for (Eigen::Index step = 0; step < m - 1; ++step) {
    Eigen::Index best_i = -1;
    Eigen::Index best_j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = i + 1; j < m; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        if (work(i, j) < best || best_i < 0) {
          best = work(i, j);
          best_i = i;
          best_j = j;
        }
      }
    }
    const auto ui = static_cast<std::size_t>(best_i);
    const auto uj = static_cast<std::size_t>(best_j);
    const double ni = static_cast<double>(slot_size[ui]);
    const double nj = static_cast<double>(slot_size[uj]);
    for (Eigen::Index k = 0; k < m; ++k) {
      if (!active[static_cast<std::size_t>(k)] || k == best_i || k == best_j) continue;
      const double dik = work(best_i, k);
      const double djk = work(best_j, k);
      double merged = 0.0;
      switch (linkage) {
        case Linkage::single: merged = std::min(dik, djk); break;
        case Linkage::complete: merged = std::max(dik, djk); break;
        case Linkage::average: merged = (ni * dik + nj * djk) / (ni + nj); break;
      }
      work(best_i, k) = merged;
      work(k, best_i) = merged;
    }

    DendrogramNode join;
    join.left = slot_node[ui];
    join.right = slot_node[uj];
    join.merge_height = best;
    join.member_count = slot_size[ui] + slot_size[uj];
    nodes.push_back(join);

    slot_node[ui] = static_cast<int>(nodes.size()) - 1;
    slot_size[ui] += slot_size[uj];
    active[uj] = false;
  }
  return Dendrogram(std::move(nodes), static_cast<std::size_t>(m));
}

void write_distance_csv(const DistanceMatrix& d, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "id";
  for (const auto& id : d.ids()) out << ',' << id;
  out << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    out << d.ids()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", d(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
  detail::write_text_atomic(path, out.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

DistanceMatrix read_distance_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::format, path.string() + ": empty distance CSV");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "id") {
    throw Error(ErrorKind::format, path.string() + ": header must start with 'id'");
  }
  std::vector<std::string> ids(header.begin() + 1, header.end());
  const auto m = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd values(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorKind::corruption, path.string() + ": missing rows");
    const auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != m + 1 || fields[0] != ids[static_cast<std::size_t>(i)]) {
      throw Error(ErrorKind::corruption, path.string() + ": malformed row " + std::to_string(i + 1));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      try {
        values(i, j) = std::stod(fields[static_cast<std::size_t>(j + 1)]);
      } catch (const std::exception&) {
        throw Error(ErrorKind::format, path.string() + ": non-numeric entry in row " + std::to_string(i + 1));
      }
    }
  }
  return DistanceMatrix(std::move(ids), std::move(values));
}

}  // namespace encmap
