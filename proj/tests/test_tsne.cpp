#include "support.hpp"

#include "spectral/error.hpp"
#include "spectral/tsne.hpp"

#include <doctest.h>

using namespace spectral;

namespace {

Eigen::MatrixXd gaussian_rows(Eigen::Index n, Eigen::Index p, Rng& rng) {
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

/// Lloyd's 2-means seeded with point 0 and the point farthest from it.
std::vector<int> two_means(const Eigen::MatrixXd& y) {
  Eigen::Index far = 0;
  (y.rowwise() - y.row(0)).rowwise().squaredNorm().maxCoeff(&far);
  Eigen::RowVectorXd c0 = y.row(0), c1 = y.row(far);
  std::vector<int> assign(static_cast<std::size_t>(y.rows()), 0);
  for (int it = 0; it < 100; ++it) {
    Eigen::RowVectorXd s0 = Eigen::RowVectorXd::Zero(y.cols()), s1 = s0;
    int n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const bool second = (y.row(i) - c1).squaredNorm() < (y.row(i) - c0).squaredNorm();
      assign[i] = second;
      (second ? s1 : s0) += y.row(i);
      ++(second ? n1 : n0);
    }
    if (n0) c0 = s0 / n0;
    if (n1) c1 = s1 / n1;
  }
  return assign;
}

}  // namespace

TEST_SUITE("tsne") {

TEST_CASE("affinities are a symmetric distribution at the requested perplexity") {
  Rng rng(1);
  const auto x = gaussian_rows(100, 8, rng);
  TsneConfig c;
  c.perplexity = 20;
  const auto a = tsne_affinities(x, c);
  CHECK(std::abs(a.joint.sum() - 1.0) <= 1e-9);
  CHECK((a.joint - a.joint.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(a.joint.minCoeff() >= 0.0);
  CHECK(a.joint.diagonal().cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < a.entropy.size(); ++i) {
    CHECK(std::abs(a.entropy[i] - std::log(20.0)) <= 1e-5);
  }
}

TEST_CASE("perplexity is matched even with duplicate and distant points") {
  Rng rng(2);
  Eigen::MatrixXd x = gaussian_rows(60, 3, rng);
  x.row(5) = x.row(6);
  x.row(7) *= 50.0;
  TsneConfig c;
  c.perplexity = 10;
  const auto a = tsne_affinities(x, c);
  for (Eigen::Index i = 0; i < a.entropy.size(); ++i) {
    CAPTURE(i);
    CHECK(std::abs(a.entropy[i] - std::log(10.0)) <= 1e-5);
  }
}

TEST_CASE("optimisation lowers the KL divergence") {
  Rng rng(3);
  const auto x = gaussian_rows(80, 10, rng);
  TsneConfig c;
  c.perplexity = 15;
  const auto r = tsne_embed(x, c);
  REQUIRE(r.kl_trace.size() >= 2);
  CHECK(r.kl_trace.front().iteration == 0);
  CHECK(r.kl_trace.back().iteration == c.iterations);
  CHECK(r.kl_trace.back().kl < r.kl_trace.front().kl);
  CHECK(r.embedding.rows() == 80);
  CHECK(r.embedding.cols() == 2);
  CHECK(r.embedding.allFinite());
}

TEST_CASE("two separated clusters stay apart") {
  Rng rng(4);
  Eigen::MatrixXd x = gaussian_rows(40, 10, rng);
  std::vector<int> truth;
  for (Eigen::Index i = 0; i < 40; ++i) {
    const int c = i < 20 ? 0 : 1;
    truth.push_back(c);
    if (c) x.row(i).array() += 10.0 / std::sqrt(10.0);
  }
  const auto r = tsne_embed(x, {});
  const auto split = two_means(r.embedding);
  int agree = 0;
  for (int i = 0; i < 40; ++i) agree += split[i] == truth[i];
  agree = std::max(agree, 40 - agree);
  CHECK(agree >= 38);
}

TEST_CASE("same seed gives the same embedding, row order does not matter") {
  Rng rng(5);
  const auto x = gaussian_rows(45, 6, rng);
  TsneConfig c;
  c.perplexity = 12;
  c.iterations = 300;
  c.seed = 99;
  const auto a = tsne_embed(x, c);
  const auto b = tsne_embed(x, c);
  CHECK(a.embedding == b.embedding);

  std::vector<std::size_t> perm(45);
  std::iota(perm.begin(), perm.end(), 0);
  Rng(6).shuffle(perm);
  Eigen::MatrixXd xp(45, 6);
  for (int i = 0; i < 45; ++i) xp.row(i) = x.row(static_cast<Eigen::Index>(perm[i]));
  const auto p = tsne_embed(xp, c);
  double worst = 0.0;
  for (int i = 0; i < 45; ++i) {
    worst = std::max(worst, (p.embedding.row(i) - a.embedding.row(static_cast<Eigen::Index>(perm[i]))).cwiseAbs().maxCoeff());
  }
  CHECK(worst == 0.0);
}

TEST_CASE("argument checks") {
  TsneConfig c;
  c.perplexity = 5;
  CHECK_THROWS_AS(tsne_embed(Eigen::MatrixXd::Random(3, 2), c), ArgumentError);
  CHECK_THROWS_AS(tsne_embed(Eigen::MatrixXd::Random(5, 2), c), ArgumentError);
  c.perplexity = 1.0;
  CHECK_THROWS_AS(tsne_embed(Eigen::MatrixXd::Random(10, 2), c), ArgumentError);
}

}  // TEST_SUITE
