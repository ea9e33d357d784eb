#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "encmap/embedding_io.hpp"

namespace encmap {

struct NoiseGroup {
  double sigma2_low = 0.0;
  double sigma2_high = 1.0;
  int count = 10;
};

struct SyntheticSpec {
  Eigen::Index ambient_dim = 500;
  std::vector<NoiseGroup> groups{{0.0, 1.0, 10}, {3.0, 4.0, 10}};
  double noise_scale = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticEncoder {
  int group = 0;
  int index = 0;  // within the group
  double sigma2 = 0.0;
  std::uint64_t seed = 0;  // seed handed to perturb()
  EmbeddingMatrix matrix;
};

/// n x n identity: row i is the standard basis vector e_i.
EmbeddingMatrix base_matrix(Eigen::Index n);

/// Replaces every row x by x + noise_scale * g / |g| with g ~ N(0, sigma2 I).
/// sigma2 == 0 returns the input unchanged.
EmbeddingMatrix perturb(const EmbeddingMatrix& matrix, double sigma2, double noise_scale, std::uint64_t seed);

/// Draws `count` sigma^2 values per group from a seeded uniform and perturbs
/// the base matrix with each. Per-matrix seeds mix (seed, group, index), so the
/// result does not depend on generation order.
std::vector<SyntheticEncoder> generate(const SyntheticSpec& spec);

}  // namespace encmap
