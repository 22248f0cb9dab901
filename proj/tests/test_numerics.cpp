#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smx/numerics.hpp"
#include "smx/rng.hpp"

using namespace smx;

namespace {

ImageTensor single_channel(const std::vector<float>& vals) {
  ImageTensor t(1, 1, 1, static_cast<int>(vals.size()), ValueDomain::raw);
  t.data = vals;
  return t;
}

// Independent oracle: square root through a fresh eigendecomposition, done
// the long way so it does not share code with matrix_sqrt_psd.
SymMatrix sqrt_oracle(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  SymMatrix out = SymMatrix::Zero(m.rows(), m.cols());
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    double ev = std::max(0.0, es.eigenvalues()[k]);
    out += std::sqrt(ev) * es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose();
  }
  return out;
}

SymMatrix random_psd(int d, Rng& rng) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  return a * a.transpose();
}

}  // namespace

TEST_CASE("channel_stats hand-computed examples") {
  auto cs = channel_stats(single_channel({1, 2, 3, 4}), 0.0f);
  CHECK(cs.m(0, 0) == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(cs.s(0, 0) == doctest::Approx(1.118034).epsilon(1e-6));

  auto cs2 = channel_stats(single_channel({5, 5, 5, 5}), 1e-5f);
  CHECK(cs2.m(0, 0) == doctest::Approx(5.0));
  CHECK(cs2.s(0, 0) == doctest::Approx(std::sqrt(1e-5)).epsilon(1e-5));

  auto cs3 = channel_stats(single_channel({0, 2, 0, 2}), 0.0f);
  CHECK(cs3.m(0, 0) == doctest::Approx(1.0));
  CHECK(cs3.s(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("channel_stats rejects empty spatial extent") {
  ImageTensor t(1, 1, 0, 4);
  CHECK_THROWS_AS(channel_stats(t, 0.0f), Error);
}

TEST_CASE("normalization property: (t - mean) / std has stats (0, 1)") {
  Rng rng(stream_key(7, "norm-prop"));
  for (int trial = 0; trial < 20; ++trial) {
    ImageTensor t(2, 3, 5, 7);
    for (float& v : t.data) v = static_cast<float>(rng.normal() * 3 + 1);
    auto cs = channel_stats(t, 0.0f);
    ImageTensor z = t;
    for (int n = 0; n < t.n; ++n)
      for (int c = 0; c < t.c; ++c) {
        float* p = z.chan(n, c);
        for (size_t i = 0; i < t.plane(); ++i) p[i] = (p[i] - cs.m(n, c)) / cs.s(n, c);
      }
    auto zs = channel_stats(z, 0.0f);
    for (size_t k = 0; k < zs.mean.size(); ++k) {
      CHECK(std::abs(zs.mean[k]) < 1e-6);
      CHECK(std::abs(zs.stdev[k] - 1.0f) < 1e-6);
    }
  }
}

TEST_CASE("matrix_sqrt_psd identity and diagonal cases") {
  SymMatrix id = SymMatrix::Identity(3, 3);
  CHECK((matrix_sqrt_psd(id) - id).norm() < 1e-12);

  SymMatrix d(2, 2);
  d << 4, 0, 0, 9;
  SymMatrix expect(2, 2);
  expect << 2, 0, 0, 3;
  CHECK((matrix_sqrt_psd(d) - expect).norm() < 1e-12);
}

TEST_CASE("matrix_sqrt_psd matches eigendecomposition oracle on random PSD") {
  Rng rng(stream_key(11, "psd"));
  for (int trial = 0; trial < 20; ++trial) {
    SymMatrix m = random_psd(5, rng);
    SymMatrix s = matrix_sqrt_psd(m);
    CHECK((s - s.transpose()).norm() < 1e-9 * (1.0 + s.norm()));
    CHECK(((s * s) - m).norm() / m.norm() < 1e-8);
    CHECK((s - sqrt_oracle(m)).norm() / (1.0 + s.norm()) < 1e-8);
  }
}

TEST_CASE("matrix_sqrt_psd rejects genuinely indefinite input") {
  SymMatrix m(2, 2);
  m << 1, 0, 0, -1;
  CHECK_THROWS_AS(matrix_sqrt_psd(m, 1e-8), Error);
}

TEST_CASE("matrix_sqrt_psd clamps tiny negative eigenvalues") {
  SymMatrix m(2, 2);
  m << 1, 0, 0, -1e-12;
  SymMatrix s = matrix_sqrt_psd(m, 1e-8);
  CHECK(s(0, 0) == doctest::Approx(1.0));
  CHECK(s(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("estimate_gaussian hand-computed example") {
  Eigen::MatrixXd rows(2, 2);
  rows << 0, 0, 2, 2;
  auto g = estimate_gaussian(rows);
  CHECK(g.mu[0] == doctest::Approx(1.0));
  CHECK(g.mu[1] == doctest::Approx(1.0));
  CHECK(g.cov(0, 0) == doctest::Approx(2.0));
  CHECK(g.cov(0, 1) == doctest::Approx(2.0));
  CHECK(g.cov(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("estimate_gaussian degenerate identical rows") {
  Eigen::MatrixXd rows(5, 3);
  for (int i = 0; i < 5; ++i) rows.row(i) << 1.5, -2.0, 0.25;
  auto g = estimate_gaussian(rows);
  CHECK(g.cov.norm() < 1e-12);
  CHECK(g.mu[1] == doctest::Approx(-2.0));
}

TEST_CASE("estimate_gaussian rejects n < 2") {
  Eigen::MatrixXd rows(1, 3);
  rows.setZero();
  CHECK_THROWS_AS(estimate_gaussian(rows), Error);
}

TEST_CASE("estimate_gaussian recovers a known 3-d Gaussian within 3 SE") {
  // ground truth: mu = (1, -2, 0.5), cov = L L^T
  Eigen::Matrix3d L;
  L << 1.0, 0.0, 0.0,
       0.5, 0.8, 0.0,
      -0.3, 0.2, 0.6;
  Eigen::Matrix3d cov = L * L.transpose();
  Eigen::Vector3d mu(1.0, -2.0, 0.5);
  const int n = 1000;
  Rng rng(stream_key(3, "gauss-sample"));
  Eigen::MatrixXd rows(n, 3);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
    rows.row(i) = (mu + L * z).transpose();
  }
  auto g = estimate_gaussian(rows);
  for (int j = 0; j < 3; ++j) {
    double se = std::sqrt(cov(j, j) / n);
    CHECK(std::abs(g.mu[j] - mu[j]) < 3.0 * se);
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      // standard error of a covariance entry, Gaussian case
      double se = std::sqrt((cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / (n - 1));
      CHECK(std::abs(g.cov(a, b) - cov(a, b)) < 3.5 * se);
    }
}

TEST_CASE("estimate_gaussian is permutation-invariant over rows") {
  Rng rng(stream_key(5, "perm"));
  Eigen::MatrixXd rows(8, 4);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 4; ++j) rows(i, j) = rng.normal();
  auto g1 = estimate_gaussian(rows);
  Eigen::MatrixXd shuffled = rows;
  shuffled.row(0) = rows.row(7);
  shuffled.row(7) = rows.row(0);
  shuffled.row(2) = rows.row(5);
  shuffled.row(5) = rows.row(2);
  auto g2 = estimate_gaussian(shuffled);
  CHECK((g1.mu - g2.mu).norm() < 1e-12);
  CHECK((g1.cov - g2.cov).norm() < 1e-12);
}
