#include "helpers.hpp"
#include "wtpgmr/errors.hpp"
#include "wtpgmr/optimize.hpp"
#include "wtpgmr/pipeline.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace wtpgmr;

namespace {

Trajectory copy_of(const Demonstration& d, const Vec& offset, double cov_scale = 1.0) {
  Trajectory tr;
  tr.times = d.points.col(0);
  tr.means = d.points.rightCols(d.points.cols() - 1);
  tr.means.rowwise() += offset.transpose();
  for (Eigen::Index n = 0; n < d.length(); ++n) {
    tr.covs.push_back(cov_scale * (1.0 + 0.1 * static_cast<double>(n)) * Mat::Identity(2, 2));
  }
  return tr;
}

}  // namespace

TEST_CASE("weighted loss worked examples") {
  std::mt19937_64 rng(31);
  const auto ds = testing::planar_dataset(rng, 3, 15, 0.2);
  std::vector<Trajectory> same, shifted, scaled;
  Vec d(2);
  d << 0.3, -0.4;
  for (const auto& demo : ds.demos) {
    same.push_back(copy_of(demo, Vec::Zero(2)));
    shifted.push_back(copy_of(demo, d));
    scaled.push_back(copy_of(demo, d, 9.0));
  }
  for (auto mode : {WeightMode::Inverse, WeightMode::Literal}) {
    const LossConfig cfg{mode};
    CHECK(weighted_loss(ds, same, cfg) == 0.0);
    CHECK(weighted_loss(ds, shifted, cfg) == doctest::Approx(3.0 * 0.25).epsilon(1e-12));
    CHECK(weighted_loss(ds, scaled, cfg) == doctest::Approx(weighted_loss(ds, shifted, cfg)).epsilon(1e-12));
  }
  shifted.pop_back();
  CHECK_THROWS_AS(weighted_loss(ds, shifted), ValidationError);
  CHECK(weight_mode_from_string("literal") == WeightMode::Literal);
  CHECK(to_string(WeightMode::Inverse) == "inverse");
  CHECK_THROWS_AS(weight_mode_from_string("other"), ValidationError);
}

TEST_CASE("inverse mode puts more weight on tight steps") {
  Demonstration demo;
  demo.points = Mat::Zero(2, 3);
  demo.points.col(0) << 1, 2;
  Dataset ds;
  ds.demos.push_back(demo);
  Trajectory tr;
  tr.times = demo.points.col(0);
  tr.means = Mat::Zero(2, 2);
  tr.means(0, 0) = 1.0;  // error only at the tight step
  tr.covs = {0.1 * Mat::Identity(2, 2), 1.0 * Mat::Identity(2, 2)};
  const std::vector<Trajectory> g{tr};
  CHECK(weighted_loss(ds, g, {WeightMode::Inverse}) == doctest::Approx(10.0 / 11.0));
  CHECK(weighted_loss(ds, g, {WeightMode::Literal}) == doctest::Approx(1.0 / 11.0));
}

TEST_CASE("golden section worked examples") {
  const auto r = golden_section([](double x) { return (x - 1.0) * (x - 1.0); }, -3.0, 4.0, 1e-6);
  CHECK(std::abs(r.x - 1.0) < 1e-6);
  const auto edge = golden_section([](double x) { return x; }, 2.0, 5.0, 1e-6);
  CHECK(std::abs(edge.x - 2.0) < 1e-6);
  CHECK_THROWS_AS(golden_section([](double x) { return x; }, 1.0, 1.0, 1e-3), ValidationError);
  CHECK_THROWS_AS(golden_section([](double x) { return x; }, 0.0, 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(golden_section([](double) { return std::nan(""); }, 0.0, 1.0, 1e-3), NumericalError);
}

TEST_CASE("golden section on 50 random quadratics") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-7.5, 7.5), ua(0.1, 10.0);
  const double tol = 1e-6;
  for (int k = 0; k < 50; ++k) {
    const double c = u(rng);
    const double a = ua(rng);
    const auto r = golden_section([&](double x) { return a * (x - c) * (x - c) + 3.0; }, -8.0, 8.0, tol);
    CHECK(std::abs(r.x - c) < tol);
    const int bound = 3 + static_cast<int>(std::ceil(std::log(tol / 16.0) / std::log((std::sqrt(5.0) - 1.0) / 2.0)));
    CHECK(r.evaluations <= bound);
  }
}

TEST_CASE("golden section agrees with a dense grid on a unimodal bracket") {
  auto f = [](double x) { return std::cos(x) + 0.1 * x; };
  const double lo = 1.5, hi = 5.0;
  double best_x = lo, best_f = f(lo);
  for (int k = 0; k <= 100000; ++k) {
    const double x = lo + (hi - lo) * k / 100000.0;
    if (f(x) < best_f) {
      best_f = f(x);
      best_x = x;
    }
  }
  const auto r = golden_section(f, lo, hi, 1e-7);
  CHECK(std::abs(r.x - best_x) < 1e-4);
  CHECK(r.fx <= best_f + 1e-12);
}

TEST_CASE("alpha search") {
  std::mt19937_64 rng(33);
  const auto ds = testing::planar_dataset(rng, 5, 40, 0.4);
  TrainConfig tc;
  tc.K = 3;
  auto model = train_model(ds, tc);
  AlphaSearchConfig cfg;
  const auto res = fit_alpha(model, ds, cfg);
  REQUIRE(model.alpha.has_value());
  CHECK(*model.alpha == res.alpha_star);
  CHECK(res.window == default_window(40));
  // never worse than any scanned point, including alpha = 0
  for (const auto& [a, l] : res.evaluations) CHECK(res.loss_star <= l);
  const double at_zero = alpha_objective(model.gmm, ds, model.steps, 0.0, res.window, cfg.loss);
  CHECK(res.loss_star <= at_zero);
  CHECK(res.loss_star == doctest::Approx(alpha_objective(model.gmm, ds, model.steps, res.alpha_star, res.window, cfg.loss)));

  AlphaSearchConfig bad;
  bad.lo = 1.0;
  bad.hi = -1.0;
  CHECK_THROWS_AS(optimize_alpha(model.gmm, ds, bad), ValidationError);
  bad = {};
  bad.scan_points = 1;
  CHECK_THROWS_AS(optimize_alpha(model.gmm, ds, bad), ValidationError);
}
