#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlq/bicharacteristic.hpp"

using namespace mlq;

namespace {

SymbolModel model_tau() {
  PolyR p(4);
  p.add_term(1.0, {0, 0, 1, 0});
  return symbol_from_polynomial(1, p, PolyC(4));
}

// harmonic level set p = (x^2 + xi^2)/2 - r0^2/2; flow circles of radius r0
SymbolModel model_circle(double r0) {
  PolyR p(4);
  p.add_term(0.5, {0, 2, 0, 0});
  p.add_term(0.5, {0, 0, 0, 2});
  p.add_term(-0.5 * r0 * r0, {0, 0, 0, 0});
  return symbol_from_polynomial(1, p, PolyC(4));
}

SymbolModel model_xi1xi2() {
  PolyR p1(6), p2(6);
  p1.add_term(1.0, {0, 0, 0, 0, 1, 0});
  p2.add_term(1.0, {0, 0, 0, 0, 0, 1});
  return symbol_product(2, {p1, p2}, PolyC(6));
}

}  // namespace

TEST_CASE("straight-line flow of the model symbol") {
  auto m = model_tau();
  PhasePoint start(0.0, 0.0, 0.0, 1.0);
  auto curve = integrate_bicharacteristic(m, start, 1.0);

  REQUIRE(curve.size() > 10);
  CHECK(!curve.truncated);
  CHECK(curve.total_length() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < curve.size(); ++i) {
    CHECK(curve.pts[i].t == doctest::Approx(curve.s[i]).epsilon(1e-12));
    CHECK(std::abs(curve.pts[i].x(0)) < 1e-12);
    CHECK(std::abs(curve.pts[i].tau) < 1e-12);
    CHECK(curve.pts[i].xi(0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("flow stays on p = 0 and the cosphere at unit speed") {
  struct Case { SymbolModel m; PhasePoint start; FlowOptions opts; };
  std::vector<Case> cases;
  cases.push_back({model_tau(), PhasePoint(0.0, 0.0, 0.0, 1.0), {}});
  {
    // the harmonic level set is a conic test model, not fiber-homogeneous
    double r0 = 0.6;
    FlowOptions fo;
    fo.cosphere = false;
    cases.push_back({model_circle(r0), PhasePoint(0.0, r0, 1.0, 0.0), fo});
  }
  {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd xi(2);
    double c = 0.5;
    xi << 0.0, c;
    cases.push_back({model_xi1xi2(), PhasePoint(0.0, x, std::sqrt(1.0 - c * c), xi), {}});
  }

  for (auto& cs : cases) {
    auto curve = integrate_bicharacteristic(cs.m, cs.start, 1.0, cs.opts);
    const double p0 = curve.p_vals.front();
    double max_drift = 0.0, max_speed_dev = 0.0, max_cosphere = 0.0;
    for (int i = 0; i < curve.size(); ++i) {
      max_drift = std::max(max_drift, std::abs(curve.p_vals[i] - p0));
      if (cs.opts.cosphere)
        max_cosphere = std::max(max_cosphere, std::abs(curve.pts[i].fiber_norm() - 1.0));
    }
    // unit speed by divided differences
    for (int i = 0; i + 1 < curve.size(); ++i) {
      const double ds = curve.s[i + 1] - curve.s[i];
      CHECK(ds > 0.0);
      const double speed = (curve.pts[i + 1].flat() - curve.pts[i].flat()).norm() / ds;
      // chord length understates arc length by O(ds^2 curvature^2)
      max_speed_dev = std::max(max_speed_dev, std::abs(speed - 1.0) - ds * ds);
    }
    CHECK(max_drift <= 1e-8);
    CHECK(max_cosphere <= 1e-8);
    CHECK(max_speed_dev <= 1e-8);
  }
}

TEST_CASE("Mendoza-Uhlmann line: x1 moves at unit arc speed") {
  auto m = model_xi1xi2();
  double c = 0.3;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2), xi(2);
  xi << 0.0, c;
  PhasePoint start(0.0, x, std::sqrt(1.0 - c * c), xi);
  auto curve = integrate_bicharacteristic(m, start, 0.8);
  // flow moves x1 only (at speed c before normalization)
  const auto& end = curve.pts.back();
  CHECK(end.x(0) == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(std::abs(end.x(1)) < 1e-10);
  CHECK(end.xi(1) == doctest::Approx(c).epsilon(1e-10));
}

TEST_CASE("circle flow closes with period 2 pi r0") {
  const double r0 = 0.37;
  auto m = model_circle(r0);
  PhasePoint start(0.0, r0, 1.0, 0.0);
  const double period = 2.0 * M_PI * r0;
  FlowOptions fo;
  fo.cosphere = false;
  auto curve = integrate_bicharacteristic(m, start, period, fo);
  CHECK((curve.pts.back().flat() - curve.pts.front().flat()).norm() < 1e-8);
  CHECK(curve.closed(1e-6));

  // curvature of the circle: second flow derivative of position has norm 1/r0
  auto position = [](const PhasePoint& w) {
    Eigen::VectorXd v(2);
    v << w.x(0), w.xi(0);
    return v;
  };
  auto der = derivative_along_flow(m, curve, position, 2);
  for (Eigen::Index i = 0; i < der.values.rows(); ++i)
    CHECK(der.values.row(i).norm() == doctest::Approx(1.0 / r0).epsilon(1e-4));
}

TEST_CASE("time reversal returns to the start") {
  const double r0 = 0.52;
  auto m = model_circle(r0);
  PhasePoint start(0.0, r0, 1.0, 0.0);
  FlowOptions fo;
  fo.cosphere = false;
  auto fwd = integrate_bicharacteristic(m, start, 0.9, fo);
  FlowOptions back = fo;
  back.orientation = -1;
  auto bwd = integrate_bicharacteristic(m, fwd.pts.back(), 0.9, back);
  CHECK((bwd.pts.back().flat() - start.flat()).norm() <= 1e-7);
}

TEST_CASE("reparametrize preserves invariants") {
  auto m = model_tau();
  auto curve = integrate_bicharacteristic(m, PhasePoint(0.0, 0.0, 0.0, 1.0), 1.0);

  SUBCASE("identity grid returns the same samples") {
    auto same = reparametrize(m, curve, curve.s);
    for (int i = 0; i < curve.size(); ++i)
      CHECK((same.pts[i].flat() - curve.pts[i].flat()).norm() < 1e-12);
  }
  SUBCASE("half-resolution grid on a straight line is exact") {
    std::vector<double> grid;
    for (int i = 0; i < curve.size(); i += 2) grid.push_back(curve.s[i]);
    auto half = reparametrize(m, curve, grid);
    for (size_t i = 0; i < grid.size(); ++i) {
      CHECK(half.pts[i].t == doctest::Approx(grid[i]).epsilon(1e-12));
      CHECK(std::abs(half.p_vals[i]) < 1e-12);
    }
  }
  SUBCASE("grid out of range is rejected") {
    CHECK_THROWS_AS(reparametrize(m, curve, {-0.5}), ContractViolation);
    CHECK_THROWS_AS(reparametrize(m, curve, {curve.total_length() + 0.5}), ContractViolation);
  }
}

TEST_CASE("circle resampled at 4x density keeps |p| small") {
  const double r0 = 0.44;
  auto m = model_circle(r0);
  FlowOptions fo;
  fo.cosphere = false;
  auto curve = integrate_bicharacteristic(m, PhasePoint(0.0, r0, 1.0, 0.0), 1.5, fo);
  std::vector<double> grid;
  const int n4 = 4 * curve.size();
  for (int i = 0; i < n4; ++i)
    grid.push_back(curve.s.back() * static_cast<double>(i) / (n4 - 1));
  auto fine = reparametrize(m, curve, grid);
  for (double pv : fine.p_vals) CHECK(std::abs(pv) <= 1e-7);
}

TEST_CASE("derivative_along_flow basics") {
  auto m = model_tau();
  auto curve = integrate_bicharacteristic(m, PhasePoint(0.0, 0.0, 0.0, 1.0), 1.0);

  auto grad_field = [&](const PhasePoint& w) { return normalized_gradient(m, w); };
  for (int k = 1; k <= 4; ++k) {
    auto der = derivative_along_flow(m, curve, grad_field, k);
    CHECK(der.magnitudes().maxCoeff() <= 1e-9);
  }
  CHECK_THROWS_AS(derivative_along_flow(m, curve, grad_field, 3, 12), ContractViolation);
}

TEST_CASE("flow errors") {
  auto m = model_tau();
  CHECK_THROWS_AS(integrate_bicharacteristic(m, PhasePoint(0.0, 0.0, 0.5, 1.0), 1.0),
                  ContractViolation);  // off the characteristic set
}
