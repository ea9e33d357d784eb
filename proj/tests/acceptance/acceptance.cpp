// Acceptance checks. Each criterion prints one PASS/FAIL line with the
// measured values and the tolerances they were held to.
//
//   encmap_acceptance            run every criterion
//   encmap_acceptance <name>...  run the named criteria

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "encmap/binary_io.hpp"
#include "encmap/distance.hpp"
#include "encmap/prediction.hpp"
#include "encmap/projection.hpp"
#include "encmap/qre.hpp"
#include "encmap/rng.hpp"
#include "encmap/spectral.hpp"
#include "encmap/synthetic.hpp"
#include "oracles.hpp"

using namespace encmap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// Appends "label=value (<op> bound)" and folds the comparison into the outcome.
void require_at_most(Outcome& o, const std::string& label, double value, double bound) {
  const bool ok = value <= bound;
  o.pass = o.pass && ok;
  o.detail += label + "=" + fmt("%.3g", value) + (ok ? "" : "!") + "(<=" + fmt("%.0e", bound) + ") ";
}

void require_less(Outcome& o, const std::string& label, double value, double bound) {
  const bool ok = value < bound;
  o.pass = o.pass && ok;
  o.detail += label + "=" + fmt("%.4g", value) + (ok ? "" : "!") + "(<" + fmt("%.3g", bound) + ") ";
}

void require_at_least(Outcome& o, const std::string& label, double value, double bound) {
  const bool ok = value >= bound;
  o.pass = o.pass && ok;
  o.detail += label + "=" + fmt("%.6g", value) + (ok ? "" : "!") + "(>=" + fmt("%.3g", bound) + ") ";
}

void require(Outcome& o, const std::string& label, bool ok) {
  o.pass = o.pass && ok;
  o.detail += label + "=" + (ok ? "yes " : "NO ");
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// ------------------------------------------------------------------ criteria

Outcome spectral_correctness() {
  Outcome o;
  Clock clock;
  Rng shapes(1001);
  double worst_value = 0.0, worst_angle = 0.0;
  bool ranks_agree = true;
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<Eigen::Index>(2 + shapes.below(255));
    const auto d = static_cast<Eigen::Index>(1 + shapes.below(32));
    const auto m = testing::gaussian_embedding(n, d, 5000 + static_cast<std::uint64_t>(t));
    const auto fast = compute_spectrum(m);
    const auto dense = explicit_spectrum_oracle(m);
    if (fast.rank() != dense.rank()) {
      ranks_agree = false;
      continue;
    }
    worst_value = std::max(worst_value, (fast.eigenvalues - dense.eigenvalues).cwiseAbs().maxCoeff());
    worst_angle = std::max(worst_angle, testing::max_principal_angle(fast.eigenvectors, dense.eigenvectors));
  }
  require(o, "ranks_agree", ranks_agree);
  require_at_most(o, "max_eig_err", worst_value, 1e-10);
  require_at_most(o, "max_angle", worst_angle, 1e-6);
  require_less(o, "seconds", clock.seconds(), 30.0);
  return o;
}

Outcome qre_oracle_equivalence() {
  Outcome o;
  Clock clock;
  double worst_oracle = 0.0, worst_schur = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto seed = 7000 + static_cast<std::uint64_t>(2 * t);
    const Eigen::MatrixXd a = testing::gaussian_matrix(32, 3 + t % 12, seed);
    const auto rho = compute_spectrum(EmbeddingMatrix("rho", a));
    const auto sigma = compute_spectrum(testing::gaussian_embedding(32, 4 + (t * 5) % 16, seed + 1));
    const double fast = qre(rho, sigma).total;
    const Eigen::MatrixXd rho_dense = testing::density_from_embedding(a);
    worst_oracle = std::max(worst_oracle, std::abs(fast - qre_dense_oracle(rho_dense, sigma, kDefaultEpsilon)));
    worst_schur = std::max(
        worst_schur, std::abs(fast - testing::dense_qre_schur(rho_dense, testing::padded_density(sigma, kDefaultEpsilon))));
  }
  require_at_most(o, "pairs_max_err", worst_oracle, 1e-7);
  require_at_most(o, "pairs_schur_err", worst_schur, 1e-7);

  Eigen::MatrixXd a3(3, 2);
  a3 << 1, 0, 0, 1, 0, 0;
  const auto sigma3 = compute_spectrum(EmbeddingMatrix("a", a3));
  const double fast3 = qre(unit_base_spectrum(3), sigma3).total;
  const double oracle3 = qre_dense_oracle(Eigen::MatrixXd::Identity(3, 3) / 3.0, sigma3, kDefaultEpsilon);
  const double expected3 = -std::log(3.0) - (2.0 / 3.0) * std::log(0.5) + 4.0;
  require_at_most(o, "n3_vs_oracle", std::abs(fast3 - oracle3), 1e-7);
  require_at_most(o, "n3_vs_3.3635", std::abs(fast3 - 3.3635), 5e-5);
  require_at_most(o, "n3_vs_closed", std::abs(fast3 - expected3), 1e-12);
  require_less(o, "seconds", clock.seconds(), 10.0);
  return o;
}

Outcome feature_identities() {
  Outcome o;
  Clock clock;
  Rng shapes(2002);
  double sum_vs_qre = 0.0, sum_vs_closed = 0.0, rotation = 0.0, scaling = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto n = static_cast<Eigen::Index>(4 + shapes.below(125));
    const auto d = static_cast<Eigen::Index>(1 + shapes.below(static_cast<std::uint64_t>(n / 2)));
    const auto seed = 9000 + static_cast<std::uint64_t>(t);
    const Eigen::MatrixXd a = testing::gaussian_matrix(n, d, seed);
    const auto sigma = compute_spectrum(EmbeddingMatrix("e", a));
    const auto f = feature_vector(sigma);
    const double total = f.values.sum();
    const double via_qre = qre(unit_base_spectrum(n), sigma).total;
    const double closed = closed_form_qre_total(sigma);
    sum_vs_qre = std::max(sum_vs_qre, std::abs(total - via_qre) / std::abs(via_qre));
    sum_vs_closed = std::max(sum_vs_closed, std::abs(total - closed) / std::abs(closed));

    const Eigen::MatrixXd q = testing::random_orthogonal(d, seed + 1);
    const auto rotated = feature_vector(compute_spectrum(EmbeddingMatrix("e", a * q)));
    rotation = std::max(rotation, (rotated.values - f.values).cwiseAbs().maxCoeff());
    const double c = 0.01 + 100.0 * shapes.uniform();
    const auto scaled = feature_vector(compute_spectrum(EmbeddingMatrix("e", c * a)));
    scaling = std::max(scaling, (scaled.values - f.values).cwiseAbs().maxCoeff());
  }
  require_at_most(o, "sum_vs_qre_rel", sum_vs_qre, 1e-8);
  require_at_most(o, "sum_vs_closed_rel", sum_vs_closed, 1e-8);
  require_at_most(o, "rotation_inv", rotation, 1e-8);
  require_at_most(o, "scaling_inv", scaling, 1e-8);
  require_less(o, "seconds", clock.seconds(), 60.0);
  return o;
}

Outcome self_and_copy() {
  Outcome o;
  double base_norm = 0.0;
  for (Eigen::Index n : {2, 10, 64, 200}) {
    const auto f = feature_vector(compute_spectrum(base_matrix(n)));
    base_norm = std::max(base_norm, f.values.cwiseAbs().maxCoeff());
  }
  require_at_most(o, "identity_max_abs", base_norm, 1e-10);
  double copy = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = testing::gaussian_embedding(80, 16, 300 + seed, "x");
    const auto a = feature_vector(compute_spectrum(m));
    const auto b = feature_vector(compute_spectrum(EmbeddingMatrix("y", m.values())));
    copy = std::max(copy, l1_distance(a, b));
  }
  require_less(o, "copy_l1", copy, 1e-12);
  return o;
}

// Assigns each 2D point to one of two centroids; deterministic start from the
// two points farthest apart.
std::vector<int> two_means(const Eigen::MatrixXd& pts) {
  const auto m = pts.rows();
  Eigen::Index a = 0, b = 1;
  double best = -1.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double d = (pts.row(i) - pts.row(j)).squaredNorm();
      if (d > best) {
        best = d;
        a = i;
        b = j;
      }
    }
  }
  Eigen::RowVector2d c0 = pts.row(a), c1 = pts.row(b);
  std::vector<int> label(static_cast<std::size_t>(m), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      const int l = (pts.row(i) - c0).squaredNorm() <= (pts.row(i) - c1).squaredNorm() ? 0 : 1;
      changed = changed || l != label[static_cast<std::size_t>(i)];
      label[static_cast<std::size_t>(i)] = l;
    }
    Eigen::RowVector2d s0 = Eigen::RowVector2d::Zero(), s1 = Eigen::RowVector2d::Zero();
    double n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (label[static_cast<std::size_t>(i)] == 0) {
        s0 += pts.row(i);
        n0 += 1;
      } else {
        s1 += pts.row(i);
        n1 += 1;
      }
    }
    if (n0 > 0) c0 = s0 / n0;
    if (n1 > 0) c1 = s1 / n1;
    if (!changed && iter > 0) break;
  }
  return label;
}

double purity(const std::vector<int>& clusters, const std::vector<int>& truth) {
  std::map<int, std::map<int, int>> table;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][truth[i]];
  int agree = 0;
  for (const auto& [c, counts] : table) {
    int top = 0;
    for (const auto& [t, k] : counts) top = std::max(top, k);
    agree += top;
  }
  return static_cast<double>(agree) / static_cast<double>(clusters.size());
}

Outcome synthetic_separation() {
  Outcome o;
  Clock clock;
  SyntheticSpec spec;
  spec.ambient_dim = 500;
  spec.seed = 0;
  const auto encoders = generate(spec);
  std::vector<FeatureVector> features;
  std::vector<int> truth;
  for (const auto& e : encoders) {
    features.push_back(feature_vector(compute_spectrum(e.matrix)));
    truth.push_back(e.group);
  }
  double low_max = -INFINITY, high_min = INFINITY;
  double low_mean = 0.0, high_mean = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (truth[i] == 0) {
      low_max = std::max(low_max, features[i].qre_total);
      low_mean += features[i].qre_total / 10.0;
    } else {
      high_min = std::min(high_min, features[i].qre_total);
      high_mean += features[i].qre_total / 10.0;
    }
  }
  o.detail += "low_mean=" + fmt("%.6f", low_mean) + " high_mean=" + fmt("%.6f", high_mean) + " ";
  require(o, "(a)disjoint_qre", low_max < high_min);

  const auto distances = pairwise_distances(features);
  TsneParams params;
  params.perplexity = 19.0 / 3.0;  // the map command's choice for M = 20
  const auto layout = tsne(distances, params);
  const double p = purity(two_means(layout.coords), truth);
  o.detail += "purity=" + fmt("%.2f", p) + " ";
  require(o, "(b)purity_1", p == 1.0);

  int own = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto nn = nearest_neighbors(distances, features[i].encoder_id, 1);
    const auto j = static_cast<std::size_t>(distances.index_of(nn[0].encoder_id));
    own += truth[j] == truth[i] ? 1 : 0;
  }
  o.detail += "nn_in_group=" + std::to_string(own) + "/20 ";
  require(o, "(c)nn_all_in_group", own == 20);
  require_less(o, "seconds", clock.seconds(), 300.0);
  return o;
}

Outcome regression_pipeline() {
  Outcome o;
  Clock clock;

  bool zeroed = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd x = testing::gaussian_matrix(40, 12, 11000 + seed);
    const Eigen::VectorXd y = x * testing::gaussian_matrix(12, 1, 12000 + seed).col(0) +
                              testing::gaussian_matrix(40, 1, 13000 + seed).col(0);
    for (double ratio : {0.1, 0.5, 1.0}) {
      const auto model = elastic_net_fit(x, y, alpha_max(x, y, ratio), ratio);
      zeroed = zeroed && model.coefficients.cwiseAbs().maxCoeff() == 0.0;
    }
  }
  require(o, "(a)alpha_max_zero", zeroed);

  const Eigen::MatrixXd x = testing::gaussian_matrix(60, 8, 14000);
  const auto [st, z] = standardize_fit(x);
  const Eigen::VectorXd y = (2.0 * z.col(3)).array() - 1.0;
  const auto cv = elastic_net_cv(z, y);
  require_at_least(o, "(b)noiseless_spearman", spearman(to_std(cv.oof_predictions), to_std(y)).coefficient, 1.0);

  // 112 encoders sharing N = 64 sentences with widths 2..33.
  std::vector<FeatureVector> features;
  Rng widths(15000);
  for (int i = 0; i < 112; ++i) {
    const auto d = static_cast<Eigen::Index>(2 + widths.below(32));
    const auto id = "enc" + std::to_string(i);
    features.push_back(
        feature_vector(compute_spectrum(testing::gaussian_embedding(64, d, 16000 + static_cast<std::uint64_t>(i), id))));
  }
  std::vector<TaskScore> scores;
  for (const auto& f : features) scores.push_back({f.encoder_id, "qre_total", f.qre_total});
  const auto suite = run_prediction_suite(features, scores);
  require_at_least(o, "(c)qre_total_spearman", suite.reports.at(0).spearman, 0.99);

  double abs_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<double> targets;
    for (const auto& f : features) targets.push_back(f.qre_total);
    Rng rng(17000 + seed);
    encmap::shuffle(targets.begin(), targets.end(), rng);
    std::vector<TaskScore> permuted;
    for (std::size_t i = 0; i < features.size(); ++i) permuted.push_back({features[i].encoder_id, "perm", targets[i]});
    PredictionOptions options;
    options.cv.seed = seed;
    abs_sum += std::abs(run_prediction_suite(features, permuted, options).reports.at(0).spearman);
  }
  require_less(o, "(d)perm_mean_abs_spearman", abs_sum / 20.0, 0.3);
  require_less(o, "seconds", clock.seconds(), 120.0);
  return o;
}

Outcome metric_axioms() {
  Outcome o;
  Rng rng(18000);
  auto random_vector = [&](const std::string& id, Eigen::Index n) {
    FeatureVector f;
    f.encoder_id = id;
    f.values = Eigen::VectorXd(n);
    for (Eigen::Index i = 0; i < n; ++i) f.values(i) = rng.normal() * std::pow(10.0, rng.uniform(-3.0, 3.0));
    return f;
  };
  bool nonneg = true, symmetric = true, identity = true;
  double worst_triangle = -INFINITY;
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<Eigen::Index>(1 + rng.below(64));
    const auto a = random_vector("a", n), b = random_vector("b", n), c = random_vector("c", n);
    const double ab = l1_distance(a, b), bc = l1_distance(b, c), ac = l1_distance(a, c);
    nonneg = nonneg && ab >= 0.0 && bc >= 0.0 && ac >= 0.0;
    symmetric = symmetric && ab == l1_distance(b, a);
    identity = identity && l1_distance(a, a) == 0.0;
    auto b_copy = b;
    b_copy.encoder_id = "b2";
    identity = identity && l1_distance(b, b_copy) == 0.0;
    if (ab > 0.0) identity = identity && !(a.values == b.values);
    worst_triangle = std::max(worst_triangle, ac - (ab + bc));
  }
  require(o, "nonnegative", nonneg);
  require(o, "symmetric", symmetric);
  require(o, "identity", identity);
  require_at_most(o, "triangle_excess", std::max(0.0, worst_triangle), 1e-9);
  return o;
}

using Snapshot = std::map<std::string, std::vector<unsigned char>>;

Snapshot snapshot(const fs::path& dir) {
  Snapshot out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = detail::read_file(e.path());
  }
  return out;
}

// Names of files that differ or exist on one side only.
std::vector<std::string> differing(const Snapshot& a, const Snapshot& b, bool skip_manifests) {
  std::set<std::string> names;
  for (const auto& [k, v] : a) names.insert(k);
  for (const auto& [k, v] : b) names.insert(k);
  std::vector<std::string> out;
  for (const auto& n : names) {
    if (skip_manifests && n.find(".manifest.json") != std::string::npos) continue;
    const auto ia = a.find(n), ib = b.find(n);
    if (ia == a.end() || ib == b.end() || ia->second != ib->second) out.push_back(n);
  }
  return out;
}

// features -> map -> predict into `out`; returns the worst exit code.
int run_pipeline(const fs::path& out, const std::vector<std::string>& emaps, const fs::path& scores,
                 const std::string& jobs) {
  std::vector<std::string> args{"features", "--jobs", jobs, "--output-dir", (out / "features").string()};
  args.insert(args.end(), emaps.begin(), emaps.end());
  int code = cli::run(args);
  std::vector<std::string> feats;
  for (const auto& e : emaps) feats.push_back((out / "features" / (fs::path(e).stem().string() + ".efvc")).string());
  args = {"map", "--seed", "3", "--jobs", jobs, "--output-dir", (out / "map").string()};
  args.insert(args.end(), feats.begin(), feats.end());
  code = std::max(code, cli::run(args));
  args = {"predict", "--scores", scores.string(), "--jobs", jobs, "--output-dir", (out / "predict").string()};
  args.insert(args.end(), feats.begin(), feats.end());
  return std::max(code, cli::run(args));
}

Outcome determinism() {
  Outcome o;
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  const auto root = testing::scratch_dir("acceptance_determinism");
  SyntheticSpec spec;
  spec.ambient_dim = 40;
  spec.groups = {{0.0, 1.0, 6}, {3.0, 4.0, 6}};
  std::vector<std::string> emaps;
  for (const auto& e : generate(spec)) {
    const auto p = root / (e.matrix.encoder_id() + ".emap");
    write_embedding_matrix(e.matrix, p);
    emaps.push_back(p.string());
  }
  std::ofstream scores(root / "scores.csv");
  scores << "encoder_id,task_name,score\n";
  for (std::size_t i = 0; i < emaps.size(); ++i) {
    scores << fs::path(emaps[i]).stem().string() << ",sts," << 0.1 * static_cast<double>(i * 7 % 12) << "\n";
  }
  scores.close();

  // Same flags, same output directory: everything, manifests included, must repeat.
  require(o, "first_exit0", run_pipeline(root / "out", emaps, root / "scores.csv", "1") == 0);
  const auto first = snapshot(root / "out");
  fs::remove_all(root / "out");
  require(o, "rerun_exit0", run_pipeline(root / "out", emaps, root / "scores.csv", "1") == 0);
  const auto rerun = differing(first, snapshot(root / "out"), false);
  o.detail += "files=" + std::to_string(first.size()) + " ";
  require(o, "rerun_identical", rerun.empty());
  if (!rerun.empty()) o.detail += "(" + rerun.front() + ") ";

  // More workers: the manifest records --jobs, every artifact must still match.
  require(o, "jobs3_exit0", run_pipeline(root / "jobs3", emaps, root / "scores.csv", "3") == 0);
  const auto parallel = differing(first, snapshot(root / "jobs3"), true);
  require(o, "jobs3_artifacts_identical", parallel.empty());
  if (!parallel.empty()) o.detail += "(" + parallel.front() + ") ";
  ::unsetenv("SOURCE_DATE_EPOCH");
  return o;
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"spectral_correctness", spectral_correctness},
      {"qre_oracle_equivalence", qre_oracle_equivalence},
      {"feature_identities", feature_identities},
      {"self_and_copy", self_and_copy},
      {"synthetic_separation", synthetic_separation},
      {"regression_pipeline", regression_pipeline},
      {"metric_axioms", metric_axioms},
      {"determinism", determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, check] : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
