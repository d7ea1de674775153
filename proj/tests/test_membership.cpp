#include <doctest.h>

#include <cmath>

#include "essr/error.hpp"
#include "essr/membership.hpp"
#include "essr/rate.hpp"
#include "support.hpp"

using essr::MembershipEncoding;
using essr_test::Matrix;
using essr_test::Vector;

TEST_CASE("from_labels") {
  const auto pi = MembershipEncoding::from_labels(std::vector<int>{0, 1, 0}, 2);
  Matrix want(3, 2);
  want << 1, 0, 0, 1, 1, 0;
  CHECK(pi.weights() == want);
  const auto one = MembershipEncoding::from_labels(std::vector<int>(4, 0), 3);
  CHECK(one.class_size(0) == 4.0);
  CHECK(one.class_size(1) == 0.0);
  CHECK(one.class_size(2) == 0.0);
  try {
    MembershipEncoding::from_labels(std::vector<int>{5}, 2);
    FAIL("expected LabelOutOfRange");
  } catch (const essr::Error& e) {
    CHECK(e.kind() == essr::ErrorKind::LabelOutOfRange);
  }
}

TEST_CASE("encoding validation") {
  Matrix bad(1, 2);
  bad << 0.7, 0.7;
  CHECK_THROWS_AS(MembershipEncoding{bad}, essr::Error);
  bad << 1.2, -0.2;
  CHECK_THROWS_AS(MembershipEncoding{bad}, essr::Error);
}

TEST_CASE("softmax membership") {
  const std::vector<double> norms{0.4, 0.1, 0.9};
  const Vector u = essr::softmax_membership(norms, 0.0);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(u[j] - 1.0 / 3.0) < 1e-15);
  const Vector h = essr::softmax_membership(std::vector<double>{0.25, 0.25}, 100.0);
  CHECK(h[0] == 0.5);
  CHECK(h[1] == 0.5);
  const Vector d = essr::softmax_membership(std::vector<double>{0.3, 0.3 + std::log(2.0)}, 1.0);
  CHECK(std::abs(d[0] - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(d[1] - 1.0 / 3.0) < 1e-15);
  const Vector sharp = essr::softmax_membership(std::vector<double>{0.5, 0.6, 0.8}, 1e4);
  CHECK(sharp[0] >= 1.0 - 1e-6);
  // huge lambda times large norms must not overflow
  const Vector big = essr::softmax_membership(std::vector<double>{1e3, 1e3 + 1.0}, 1e6);
  CHECK(std::isfinite(big[0]));
  CHECK(std::abs(big.sum() - 1.0) < 1e-12);
}

TEST_CASE("softmax monotone in each norm") {
  std::vector<double> norms{0.5, 0.4, 0.7};
  const double before = essr::softmax_membership(norms, 10.0)[1];
  norms[1] = 0.35;
  CHECK(essr::softmax_membership(norms, 10.0)[1] > before);
}

TEST_CASE("estimate_membership on operators is a simplex vector") {
  essr::SplitMix64 rng(31);
  const Matrix z = essr_test::unit_columns(rng, 6, 18);
  const auto pi = MembershipEncoding::from_labels(essr_test::balanced_labels(18, 3), 3);
  const auto ops = essr::build_operators(z, pi, essr::RateParams{0.1});
  const Matrix est = essr::estimate_memberships(z, ops, essr::EstimationConfig{100.0});
  for (Eigen::Index i = 0; i < est.rows(); ++i) {
    CHECK(est.row(i).minCoeff() >= 0.0);
    CHECK(std::abs(est.row(i).sum() - 1.0) <= 1e-12);
    // independent evaluation of the definition
    Vector norms(3);
    for (int j = 0; j < 3; ++j) norms[j] = (ops.compressions[static_cast<std::size_t>(j)] * z.col(i)).norm();
    Vector e = (-100.0 * (norms.array() - norms.minCoeff())).exp();
    e /= e.sum();
    CHECK((est.row(i).transpose() - e).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("estimation error counting") {
  Matrix est(4, 2);
  est << 1, 0, 0, 1, 1, 0, 0, 1;
  const auto truth = MembershipEncoding::from_labels(std::vector<int>{0, 1, 0, 1}, 2);
  auto r = essr::count_estimation_errors(est, truth);
  CHECK(r.errors == 0);
  CHECK(r.confusion(0, 0) == 2);
  CHECK(r.confusion(1, 1) == 2);
  CHECK(r.confusion(0, 1) == 0);
  est.row(3) << 0.8, 0.2;
  r = essr::count_estimation_errors(est, truth);
  CHECK(r.errors == 1);
  CHECK(r.confusion(1, 0) == 1);

  // lopsided: every class 1 sample estimated as class 0
  Matrix lop(5, 2);
  lop << 0.9, 0.1, 0.8, 0.2, 0.6, 0.4, 0.7, 0.3, 0.55, 0.45;
  const auto t2 = MembershipEncoding::from_labels(std::vector<int>{0, 0, 1, 1, 1}, 2);
  r = essr::count_estimation_errors(lop, t2);
  CHECK(r.errors == 3);
  CHECK(r.confusion(1, 0) == 3);
  CHECK(r.confusion(1, 1) == 0);

  // ties go to the lowest class
  Matrix tie(1, 2);
  tie << 0.5, 0.5;
  CHECK(essr::count_estimation_errors(tie, MembershipEncoding::from_labels(std::vector<int>{0}, 2)).errors == 0);
  CHECK(essr::count_estimation_errors(tie, MembershipEncoding::from_labels(std::vector<int>{1}, 2)).errors == 1);
}

TEST_CASE("estimation errors invariant under joint permutation") {
  essr::SplitMix64 rng(32);
  const Matrix z = essr_test::unit_columns(rng, 5, 12);
  const auto labels = essr_test::balanced_labels(12, 2);
  const auto pi = MembershipEncoding::from_labels(labels, 2);
  const auto ops = essr::build_operators(z, pi, essr::RateParams{0.1});
  const auto base = essr::estimation_errors(z, ops, essr::EstimationConfig{100.0}, pi);
  Matrix zr = z.rowwise().reverse();
  zr = z(Eigen::all, Eigen::seq(11, 0, -1));
  std::vector<int> lr(labels.rbegin(), labels.rend());
  const auto rev = essr::estimation_errors(zr, ops, essr::EstimationConfig{100.0}, MembershipEncoding::from_labels(lr, 2));
  CHECK(base.errors == rev.errors);
  CHECK(base.confusion == rev.confusion);
}
