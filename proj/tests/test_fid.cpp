#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smx/fid.hpp"

using namespace smx;

namespace {

GaussianStats stats_1d(double mu, double var, int n = 100) {
  GaussianStats g;
  g.mu = Eigen::VectorXd::Constant(1, mu);
  g.cov = SymMatrix::Constant(1, 1, var);
  g.n = n;
  return g;
}

GaussianStats stats_diag(std::vector<double> mu, std::vector<double> var, int n = 100) {
  GaussianStats g;
  g.mu = Eigen::Map<Eigen::VectorXd>(mu.data(), mu.size());
  g.cov = Eigen::VectorXd::Map(var.data(), var.size()).asDiagonal();
  g.n = n;
  return g;
}

ImageTensor random_unit(int n, int c, int h, int w, uint64_t seed) {
  Rng rng(stream_key(seed, "img"));
  ImageTensor t(n, c, h, w, ValueDomain::unit);
  for (float& v : t.data) v = static_cast<float>(rng.uniform());
  return t;
}

}  // namespace

TEST_CASE("fid of identical stats is zero") {
  Rng rng(stream_key(1, "fid"));
  Eigen::MatrixXd a(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
  GaussianStats g = estimate_gaussian(a);
  CHECK(std::abs(fid(g, g)) < 1e-6);
}

TEST_CASE("univariate closed form") {
  // (mu1-mu2)^2 + s1^2 + s2^2 - 2 s1 s2
  CHECK(fid(stats_1d(0, 1), stats_1d(1, 4)) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("diagonal closed form") {
  double expect = (1 + 4 - 2 * 2) + (1 + 9 - 2 * 3);
  CHECK(fid(stats_diag({0, 0}, {1, 1}), stats_diag({0, 0}, {4, 9})) ==
        doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("fid is symmetric and nonnegative") {
  Rng rng(stream_key(2, "sym"));
  for (int t = 0; t < 5; ++t) {
    Eigen::MatrixXd a(20, 4), b(20, 4);
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 4; ++j) {
        a(i, j) = rng.normal();
        b(i, j) = rng.normal() * 1.5 + 0.3;
      }
    GaussianStats ga = estimate_gaussian(a), gb = estimate_gaussian(b);
    double fab = fid(ga, gb), fba = fid(gb, ga);
    CHECK(fab == doctest::Approx(fba).epsilon(1e-6));
    CHECK(fab > -1e-6);
  }
}

TEST_CASE("fid invariant under simultaneous orthogonal rotation") {
  Rng rng(stream_key(3, "rot"));
  Eigen::MatrixXd a(30, 3), b(30, 3);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 3; ++j) {
      a(i, j) = rng.normal();
      b(i, j) = rng.normal() * 2 - 1;
    }
  // orthogonal matrix via QR of a random matrix
  Eigen::MatrixXd m(3, 3);
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rng.normal();
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  double f1 = fid(estimate_gaussian(a), estimate_gaussian(b));
  double f2 = fid(estimate_gaussian((q * a.transpose()).transpose()),
                  estimate_gaussian((q * b.transpose()).transpose()));
  CHECK(f1 == doctest::Approx(f2).epsilon(1e-5));
}

TEST_CASE("fid rejects dimension mismatch") {
  CHECK_THROWS_AS(fid(stats_1d(0, 1), stats_diag({0, 0}, {1, 1})), Error);
}

TEST_CASE("fid_images of a set against itself is ~0") {
  FeatureEncoder enc = make_encoder(8, 5);
  ImageTensor set = random_unit(8, 3, 16, 16, 10);
  double f = fid_images(stream_of(set), stream_of(set), enc);
  CHECK(std::abs(f) < 1e-4);
}

TEST_CASE("fid_images detects a constant brightness shift") {
  FeatureEncoder enc = make_encoder(8, 6);
  ImageTensor a = random_unit(10, 3, 16, 16, 20);
  ImageTensor b = a;
  for (float& v : b.data) v = std::min(1.0f, v + 0.3f);
  double f = fid_images(stream_of(a), stream_of(b), enc);
  CHECK(f > 1e-3);
}

TEST_CASE("fid_images between disjoint halves shrinks as n grows") {
  FeatureEncoder enc = make_encoder(8, 7);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto halves_fid = [&](int n) {
      ImageTensor pool = random_unit(2 * n, 3, 16, 16, 100 + seed);
      std::vector<ImageTensor> a, b;
      for (int i = 0; i < n; ++i) a.push_back(pool.image(i));
      for (int i = n; i < 2 * n; ++i) b.push_back(pool.image(i));
      return fid_images(stream_of(a), stream_of(b), enc);
    };
    double small = halves_fid(8);
    double large = halves_fid(48);
    CHECK(small > 0.0);
    CHECK(large < small);
  }
}

TEST_CASE("fid_images requires at least 2 images per set") {
  FeatureEncoder enc = make_encoder(8, 8);
  ImageTensor one = random_unit(1, 3, 16, 16, 30);
  ImageTensor two = random_unit(2, 3, 16, 16, 31);
  CHECK_THROWS_AS(fid_images(stream_of(one), stream_of(two), enc), Error);
}

TEST_CASE("fid_stylized_stream at lambda 0 equals fid_images exactly") {
  FeatureEncoder enc_nst = make_encoder(8, 9);
  FeatureDecoder dec = make_decoder(8, 10);
  FeatureEncoder enc_fid = make_encoder(8, 11);
  std::vector<ImageTensor> pool = {random_unit(1, 3, 16, 16, 40),
                                   random_unit(1, 3, 16, 16, 41)};
  StyleBank bank = build_style_bank(pool, 2, enc_nst, 16, 1);
  ImageTensor orig = random_unit(6, 3, 16, 16, 50);
  ImageTensor synth = random_unit(6, 3, 16, 16, 51);
  double direct = fid_images(stream_of(orig), stream_of(synth), enc_fid);
  double streamed = fid_stylized_stream(stream_of(orig), stream_of(synth), bank, 0.0,
                                        AlphaSpec::uniform(0.1, 1.0), enc_nst, dec,
                                        enc_fid, 3);
  CHECK(streamed == direct);
}

TEST_CASE("fid_stylized_stream rejects lambda outside [0,1]") {
  FeatureEncoder enc = make_encoder(8, 12);
  FeatureDecoder dec = make_decoder(8, 13);
  StyleBank bank;
  ImageTensor set = random_unit(3, 3, 16, 16, 60);
  CHECK_THROWS_AS(fid_stylized_stream(stream_of(set), stream_of(set), bank, 1.5,
                                      AlphaSpec::fixed(1.0), enc, dec, enc, 0),
                  Error);
}
