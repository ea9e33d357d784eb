#include "encmap/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "encmap/error.hpp"
#include "encmap/rng.hpp"

namespace encmap {

namespace {

constexpr int kMaxRedraws = 16;
constexpr double kMinNoiseNorm = 1e-30;

}  // namespace

void SyntheticSpec::validate() const {
  if (ambient_dim < 1) throw Error(ErrorKind::parameter, "synthetic ambient dimension must be positive");
  if (groups.empty()) throw Error(ErrorKind::parameter, "synthetic spec needs at least one group");
  for (const auto& g : groups) {
    if (!(g.sigma2_low >= 0.0) || !(g.sigma2_low <= g.sigma2_high)) {
      throw Error(ErrorKind::parameter, "noise range must satisfy 0 <= low <= high");
    }
    if (g.count < 1) throw Error(ErrorKind::parameter, "group count must be at least 1");
  }
  if (!std::isfinite(noise_scale)) throw Error(ErrorKind::parameter, "noise scale must be finite");
}

EmbeddingMatrix base_matrix(Eigen::Index n) {
  if (n < 1) throw Error(ErrorKind::parameter, "base matrix dimension must be positive");
  return EmbeddingMatrix("unit_base", Eigen::MatrixXd::Identity(n, n));
}

EmbeddingMatrix perturb(const EmbeddingMatrix& matrix, double sigma2, double noise_scale, std::uint64_t seed) {
  if (!(sigma2 >= 0.0)) throw Error(ErrorKind::parameter, "sigma2 must be nonnegative");
  if (sigma2 == 0.0) return matrix.with_id(matrix.encoder_id());

  Rng rng(seed);
  const double stddev = std::sqrt(sigma2);
  Eigen::MatrixXd values = matrix.values();
  Eigen::VectorXd noise(values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    double norm = 0.0;
    for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
      for (auto& v : noise) v = stddev * rng.normal();
      norm = noise.norm();
      if (norm >= kMinNoiseNorm) break;
    }
    if (!(norm >= kMinNoiseNorm)) {
      throw Error(ErrorKind::numerical, "noise draw for row " + std::to_string(i) + " stayed below 1e-30 after " +
                                            std::to_string(kMaxRedraws) + " redraws");
    }
    values.row(i) += (noise_scale / norm) * noise.transpose();
  }
  return EmbeddingMatrix(matrix.encoder_id(), std::move(values));
}

std::vector<SyntheticEncoder> generate(const SyntheticSpec& spec) {
  spec.validate();
  const auto base = base_matrix(spec.ambient_dim);
  std::vector<SyntheticEncoder> out;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& group = spec.groups[g];
    Rng draw(mix_seed(spec.seed, g));
    for (int i = 0; i < group.count; ++i) {
      const double sigma2 = draw.uniform(group.sigma2_low, group.sigma2_high);
      const std::uint64_t seed = mix_seed(mix_seed(spec.seed, g), static_cast<std::uint64_t>(i) + 1000);
      char name[48];
      std::snprintf(name, sizeof name, "synth_g%zu_%03d", g, i);
      auto matrix = perturb(base, sigma2, spec.noise_scale, seed).with_id(name);
      out.push_back({static_cast<int>(g), i, sigma2, seed, std::move(matrix)});
    }
  }
  return out;
}

}  // namespace encmap
