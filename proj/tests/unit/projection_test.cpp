#include <cmath>
#include <fstream>

#include "doctest.h"
#include "encmap/error.hpp"
#include "encmap/projection.hpp"
#include "encmap/rng.hpp"
#include "oracles.hpp"

using namespace encmap;

namespace {

// Two tight pairs far apart: {a, b} and {c, d}.
DistanceMatrix two_pairs() {
  Eigen::MatrixXd v(4, 4);
  v << 0, 1, 10, 10, 1, 0, 10, 10, 10, 10, 0, 1, 10, 10, 1, 0;
  return DistanceMatrix({"a", "b", "c", "d"}, v);
}

DistanceMatrix random_distances(int m, std::uint64_t seed) {
  const Eigen::MatrixXd pts = testing::gaussian_matrix(m, 3, seed);
  Eigen::MatrixXd d(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) d(i, j) = (pts.row(i) - pts.row(j)).cwiseAbs().sum();
  }
  std::vector<std::string> ids;
  for (int i = 0; i < m; ++i) ids.push_back("p" + std::to_string(i));
  return DistanceMatrix(ids, d);
}

double row_perplexity(const Eigen::RowVectorXd& p) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (p(j) > 0.0) h -= p(j) * std::log(p(j));
  }
  return std::exp(h);
}

}  // namespace

TEST_SUITE("projection") {
  TEST_CASE("conditional affinities hit the target perplexity") {
    const auto d = random_distances(30, 4);
    Eigen::VectorXd achieved;
    const auto p = conditional_affinities(d.values(), 8.0, achieved);
    for (Eigen::Index i = 0; i < 30; ++i) {
      CHECK(p(i, i) == 0.0);
      CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(row_perplexity(p.row(i)) - 8.0) < 1e-4);
      CHECK(achieved(i) == doctest::Approx(row_perplexity(p.row(i))).epsilon(1e-9));
    }
  }

  TEST_CASE("well separated pairs stay separated") {
    TsneParams params;
    params.perplexity = 1.5;
    const auto layout = tsne(two_pairs(), params);
    const auto& c = layout.coords;
    auto dist = [&](int i, int j) { return (c.row(i) - c.row(j)).norm(); };
    const double intra = std::max(dist(0, 1), dist(2, 3));
    const double inter = std::min({dist(0, 2), dist(0, 3), dist(1, 2), dist(1, 3)});
    CHECK(inter > intra);
    CHECK(c.allFinite());
    CHECK(c.rows() == 4);
  }

  TEST_CASE("same seed gives identical coordinates") {
    const auto d = random_distances(12, 9);
    TsneParams params;
    params.perplexity = 3.0;
    params.iterations = 300;
    const auto a = tsne(d, params);
    const auto b = tsne(d, params);
    CHECK(a.coords == b.coords);
    CHECK(a.kl_history == b.kl_history);
    params.seed = 1;
    CHECK(tsne(d, params).coords != a.coords);
  }

  TEST_CASE("KL divergence drops after exaggeration ends") {
    const auto d = random_distances(25, 12);
    TsneParams params;
    params.perplexity = 5.0;
    params.iterations = 600;
    const auto layout = tsne(d, params);
    REQUIRE(layout.kl_history.size() == 600);
    CHECK(layout.kl_history.back() < layout.kl_history[250]);
    CHECK(layout.kl_divergence >= 0.0);
  }

  TEST_CASE("parameter validation") {
    TsneParams params;
    params.perplexity = 30.0;
    CHECK_THROWS_AS(tsne(two_pairs(), params), Error);
    params.perplexity = 1.0;
    CHECK_THROWS_AS(tsne(two_pairs(), params), Error);
    Eigen::MatrixXd three = Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(tsne(DistanceMatrix({"a", "b", "c"}, three), TsneParams{}), Error);
  }

  TEST_CASE("PCA recovers an exact subspace") {
    const Eigen::MatrixXd latent = testing::gaussian_matrix(30, 2, 3);
    const Eigen::MatrixXd basis = testing::random_orthogonal(6, 4).leftCols(2);
    const Eigen::MatrixXd data = latent * basis.transpose();
    const auto model = fit_pca(data, 2);
    const Eigen::MatrixXd scores = apply_pca(model, data);
    const Eigen::MatrixXd rebuilt = (scores * model.components).rowwise() + model.mean.transpose();
    CHECK((rebuilt - data).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::MatrixXd gram = model.components * model.components.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("collinear points have one nonzero variance") {
    Eigen::MatrixXd data(3, 2);
    data << 0, 0, 1, 2, 2, 4;
    const auto model = fit_pca(data, 2);
    CHECK(model.explained_variance(0) > 0.0);
    CHECK(std::abs(model.explained_variance(1)) < 1e-12);
  }

  TEST_CASE("PCA subspace matches the covariance eigenvectors") {
    const Eigen::MatrixXd data = testing::gaussian_matrix(112, 200, 8);
    const auto model = fit_pca(data, 10);
    const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / 111.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::MatrixXd top = eig.eigenvectors().rightCols(10);
    CHECK(testing::max_principal_angle(model.components.transpose(), top) < 1e-6);
    for (Eigen::Index i = 0; i < 10; ++i) {
      CHECK(model.explained_variance(i) == doctest::Approx(eig.eigenvalues()(199 - i)).epsilon(1e-9));
      if (i > 0) CHECK(model.explained_variance(i) <= model.explained_variance(i - 1));
    }
  }

  TEST_CASE("projecting vectors") {
    const Eigen::MatrixXd data = testing::gaussian_matrix(20, 5, 6);
    const auto model = fit_pca(data, 3);
    CHECK(apply_pca(model, Eigen::VectorXd(model.mean)).cwiseAbs().maxCoeff() < 1e-14);
    const Eigen::VectorXd x = testing::gaussian_matrix(5, 1, 7).col(0);
    const Eigen::VectorXd direct = model.components * (x - model.mean);
    CHECK((apply_pca(model, x) - direct).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(fit_pca(data, 6), Error);
  }

  TEST_CASE("layout csv") {
    const auto dir = testing::scratch_dir("layout_csv");
    TsneParams params;
    params.perplexity = 1.5;
    params.iterations = 50;
    const auto layout = tsne(two_pairs(), params);
    write_layout_csv(layout, dir / "layout.csv");
    std::ifstream in(dir / "layout.csv");
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(line == "id,x,y");
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
  }
}
