#include <doctest.h>

#include <cmath>

#include "essr/error.hpp"
#include "essr/ess_control.hpp"
#include "essr/membership.hpp"
#include "support.hpp"

using essr_test::Matrix;
using essr_test::Vector;

TEST_CASE("class confusion probabilities") {
  Matrix est(3, 2);
  est << 0.9, 0.1, 0.7, 0.3, 0.2, 0.8;
  const auto truth = essr::MembershipEncoding::from_labels(std::vector<int>{0, 0, 1}, 2);
  const Matrix c = essr::class_confusion_probs(est, truth);
  CHECK(std::abs(c(0, 0) - 0.8) < 1e-15);
  CHECK(std::abs(c(0, 1) - 0.2) < 1e-15);
  CHECK(std::abs(c(1, 0) - 0.2) < 1e-15);
  CHECK(std::abs(c(1, 1) - 0.8) < 1e-15);

  const Matrix eye = essr::class_confusion_probs(Matrix::Identity(3, 3), essr::MembershipEncoding::from_labels(std::vector<int>{0, 1, 2}, 3));
  CHECK(eye == Matrix::Identity(3, 3));
  const Matrix uni = essr::class_confusion_probs(Matrix::Constant(4, 2, 0.5),
                                                 essr::MembershipEncoding::from_labels(std::vector<int>{0, 1, 0, 1}, 2));
  CHECK((uni.array() == 0.5).all());

  CHECK_THROWS_AS(essr::class_confusion_probs(Matrix::Constant(2, 2, 0.5),
                                              essr::MembershipEncoding::from_labels(std::vector<int>{0, 0}, 2)),
                  essr::Error);
}

TEST_CASE("posterior identities") {
  const Vector uniform2 = Vector::Constant(2, 0.5);
  const Vector uniform3 = Vector::Constant(3, 1.0 / 3.0);
  auto p = essr::posterior_from_confusion(Matrix::Identity(3, 3), uniform3);
  CHECK(p.posterior == Matrix::Identity(3, 3));
  CHECK(p.degenerate_columns.empty());

  p = essr::posterior_from_confusion(Matrix::Constant(3, 3, 1.0 / 3.0), uniform3);
  CHECK((p.posterior.array() - 1.0 / 3.0).abs().maxCoeff() <= 1e-15);

  Matrix conf(2, 2);
  conf << 0.9, 0.1, 0.2, 0.8;
  p = essr::posterior_from_confusion(conf, uniform2);
  CHECK(std::abs(p.posterior(0, 0) - 9.0 / 11.0) <= 1e-15);
  CHECK(std::abs(p.posterior(1, 0) - 2.0 / 11.0) <= 1e-15);
  CHECK(std::abs(p.posterior(0, 1) - 1.0 / 9.0) <= 1e-15);
  CHECK(std::abs(p.posterior(1, 1) - 8.0 / 9.0) <= 1e-15);

  for (double a : {0.6, 0.75, 0.9}) {
    Matrix sym(2, 2);
    sym << a, 1 - a, 1 - a, a;
    const auto fp = essr::posterior_from_confusion(sym, uniform2);
    CHECK((fp.posterior - sym).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("degenerate posterior column") {
  Matrix conf(2, 2);
  conf << 1.0, 0.0, 1.0, 0.0;  // nothing is ever estimated as class 1
  const auto p = essr::posterior_from_confusion(conf, Vector::Constant(2, 0.5));
  REQUIRE(p.degenerate_columns.size() == 1);
  CHECK(p.degenerate_columns[0] == 1);
  CHECK(p.posterior(0, 1) == 0.0);
  CHECK(p.posterior(1, 1) == 1.0);
  CHECK(std::abs(p.posterior(0, 0) - 0.5) < 1e-15);
}

TEST_CASE("corrected estimation") {
  Matrix post(2, 2);
  post << 9.0 / 11.0, 1.0 / 9.0, 2.0 / 11.0, 8.0 / 9.0;
  Vector pi(2);
  pi << 1.0, 0.0;
  Vector pc = essr::corrected_estimation(pi, post);
  CHECK(std::abs(pc[0] - 9.0 / 11.0) <= 1e-15);
  CHECK(std::abs(pc[1] - 2.0 / 11.0) <= 1e-15);
  pi << 0.3, 0.7;
  CHECK(essr::corrected_estimation(pi, Matrix::Identity(2, 2)) == pi);
  pc = essr::corrected_estimation(pi, Matrix::Constant(2, 2, 0.5));
  CHECK(std::abs(pc[0] - 0.5) < 1e-15);
  CHECK(std::abs(pc[1] - 0.5) < 1e-15);
}

TEST_CASE("corrected estimation preserves the simplex") {
  essr::SplitMix64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(4));
    Matrix conf(k, k);
    for (int i = 0; i < k; ++i) {
      Vector r(k);
      for (int j = 0; j < k; ++j) r[j] = rng.uniform();
      conf.row(i) = r.transpose() / r.sum();
    }
    Vector prior(k);
    for (int i = 0; i < k; ++i) prior[i] = rng.uniform() + 0.01;
    prior /= prior.sum();
    const auto post = essr::posterior_from_confusion(conf, prior);
    for (int j = 0; j < k; ++j) CHECK(std::abs(post.posterior.col(j).sum() - 1.0) <= 1e-9);
    Vector pi(k);
    for (int j = 0; j < k; ++j) pi[j] = rng.uniform();
    pi /= pi.sum();
    const Vector pc = essr::corrected_estimation(pi, post.posterior);
    CHECK(std::abs(pc.sum() - 1.0) <= 1e-9);
    CHECK(pc.minCoeff() >= 0.0);
  }
}

TEST_CASE("expansion weight and schedule") {
  essr::ExpansionSchedule s{0.0, 0.1, 10.0};
  CHECK(essr::expansion_weight(s) == 1.0);
  s.tau = 1.0;
  CHECK(std::abs(essr::expansion_weight(s) - std::exp(1.0)) <= 1e-15);
  s.tau = 5.0;
  CHECK(essr::expansion_weight(s) == 10.0);

  essr::ExpansionSchedule t{0.0, 0.1, 10.0};
  t = essr::advance_schedule(t);
  CHECK(std::abs(t.tau - 0.1) <= 1e-15);
  essr::ExpansionSchedule u{0.0, 0.1, 10.0};
  for (int i = 0; i < 30; ++i) u = essr::advance_schedule(u);
  CHECK(std::abs(u.tau - 3.0) <= 1e-12);
  CHECK(essr::expansion_weight(u) == 10.0);
  essr::ExpansionSchedule z{0.7, 0.0, 10.0};
  CHECK(essr::advance_schedule(z).tau == 0.7);

  double prev = 0.0;
  for (double tau = 0.0; tau < 6.0; tau += 0.05) {
    const double w = essr::expansion_weight({tau, 0.1, 10.0});
    CHECK(w >= prev);
    CHECK(w >= 1.0);
    CHECK(w <= 10.0);
    prev = w;
  }
}
