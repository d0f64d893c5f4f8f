#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlq/riccati.hpp"

using namespace mlq;

namespace {

QuadraticCoefficients scalar_coeffs(double axx, double axxi, double axixi) {
  QuadraticCoefficients c;
  c.dim = 1;
  c.Axx = [=](double) { return axx * Eigen::MatrixXd::Identity(1, 1); };
  c.Axxi = [=](double) { return axxi * Eigen::MatrixXd::Identity(1, 1); };
  c.Axixi = [=](double) { return axixi * Eigen::MatrixXd::Identity(1, 1); };
  return c;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

RiccatiState zero_state(int d) {
  RiccatiState s;
  s.A = Eigen::MatrixXd::Zero(d, d);
  s.t = 0.0;
  return s;
}

}  // namespace

TEST_CASE("riccati_rhs") {
  auto c = scalar_coeffs(1.0, 0.0, 1.0);
  RiccatiState s = zero_state(1);
  CHECK(riccati_rhs(c, s)(0, 0) == doctest::Approx(1.0));  // A=0 -> Axx

  s.A(0, 0) = 2.0;
  CHECK(riccati_rhs(c, s)(0, 0) == doctest::Approx(1.0 + 4.0));  // 1 + a^2

  auto c2 = scalar_coeffs(0.0, 0.7, 0.0);
  s.A(0, 0) = 3.0;
  CHECK(riccati_rhs(c2, s)(0, 0) == doctest::Approx(2.0 * 0.7 * 3.0));  // 2ab
}

TEST_CASE("scalar witness a' = 1 + a^2 matches tan") {
  auto c = scalar_coeffs(1.0, 0.0, 1.0);
  auto grid = linspace(0.0, 1.2, 13);
  auto traj = propagate_section(c, zero_state(1), grid);
  CHECK(traj.switch_count == 0);
  for (int i = 0; i < traj.size(); ++i)
    CHECK(traj.at(i).A(0, 0) == doctest::Approx(std::tan(grid[i])).epsilon(1e-9));
  CHECK(std::abs(traj.states.back().A(0, 0) - std::tan(1.2)) <= 1e-8);
}

TEST_CASE("uniqueness: Axx = 0 keeps A = 0") {
  auto c = scalar_coeffs(0.0, 0.9, 0.6);
  auto grid = linspace(0.0, 1.0, 11);
  auto traj = propagate_section(c, zero_state(1), grid);
  for (const auto& st : traj.states) CHECK(std::abs(st.A(0, 0)) < 1e-12);
}

TEST_CASE("chart switch continues tan across pi/2 as a plane") {
  auto c = scalar_coeffs(1.0, 0.0, 1.0);
  auto grid = linspace(0.0, 2.4, 25);
  auto traj = propagate_section(c, zero_state(1), grid);
  CHECK(traj.switch_count >= 1);
  for (int i = 0; i < traj.size(); ++i) {
    const double t = grid[i];
    // analytic plane span{(cos t, sin t)}
    Eigen::MatrixXd exact(2, 1);
    exact << std::cos(t), std::sin(t);
    CHECK(plane_angle(plane_basis(traj.at(i)), exact) <= 1e-6);
    // after the switch past pi/2 the graph slope in the rotated chart is -cot
    if (t > M_PI / 2 && !traj.at(i).chart.empty()) {
      CHECK(traj.at(i).A(0, 0) == doctest::Approx(-1.0 / std::tan(t)).epsilon(1e-8));
    }
  }
}

TEST_CASE("chart_switch unit behavior") {
  SUBCASE("scalar big slope inverts") {
    RiccatiState s = zero_state(1);
    s.A(0, 0) = 1e3;
    auto sw = chart_switch(s);
    CHECK(sw.chart == std::vector<int>{0});
    CHECK(sw.A(0, 0) == doctest::Approx(-1e-3).epsilon(1e-12));
    CHECK(plane_angle(plane_basis(s), plane_basis(sw)) <= 1e-12);
  }
  SUBCASE("identity-chart switch is rejected when unnecessary") {
    RiccatiState s = zero_state(1);
    auto sw = chart_switch(s);
    CHECK(sw.chart.empty());
    CHECK(sw.A(0, 0) == doctest::Approx(0.0));
  }
  SUBCASE("2x2 partial rotation preserves the plane") {
    RiccatiState s = zero_state(2);
    s.A << 1e3, 0.0, 0.0, 0.0;
    auto sw = chart_switch(s);
    CHECK(sw.chart == std::vector<int>{0});
    CHECK(plane_angle(plane_basis(s), plane_basis(sw)) <= 1e-10);
    CHECK(std::abs(sw.A(0, 0) + 1e-3) <= 1e-12);
    CHECK(std::abs(sw.A(1, 1)) <= 1e-12);
  }
}

TEST_CASE("symmetry is preserved along the integration") {
  for (const auto& set : builtin_coefficient_sets()) {
    auto grid = linspace(0.0, set.t_end, 21);
    auto traj = propagate_section(set.coeffs, zero_state(set.coeffs.dim), grid);
    for (const auto& st : traj.states)
      CHECK((st.A - st.A.transpose()).norm() <= 1e-10);
  }
}

TEST_CASE("riccati propagation agrees with linearized-flow plane transport") {
  for (const auto& set : builtin_coefficient_sets()) {
    auto grid = linspace(0.0, std::min(set.t_end, 1.0), 41);
    auto traj = propagate_section(set.coeffs, zero_state(set.coeffs.dim), grid);
    CHECK(grazing_residual(set.coeffs, grid, traj) <= 1e-6);
  }
}

TEST_CASE("grazing_residual flags a frozen section") {
  auto c = scalar_coeffs(0.8, 0.0, 0.0);
  auto grid = linspace(0.0, 1.0, 21);
  // trajectory frozen at A = 0 while Axx != 0
  RiccatiTrajectory frozen;
  for (double t : grid) {
    RiccatiState s = zero_state(1);
    s.t = t;
    frozen.states.push_back(s);
  }
  const double res_full = grazing_residual(c, grid, frozen);
  CHECK(res_full == doctest::Approx(std::sin(std::atan(0.8))).epsilon(0.05));

  // residual grows linearly with elapsed time, slope ~ |Axx|
  auto grid_half = linspace(0.0, 0.5, 11);
  RiccatiTrajectory frozen_half;
  for (double t : grid_half) {
    RiccatiState s = zero_state(1);
    s.t = t;
    frozen_half.states.push_back(s);
  }
  const double res_half = grazing_residual(c, grid_half, frozen_half);
  CHECK(res_half == doctest::Approx(std::sin(std::atan(0.4))).epsilon(0.05));

  // trivial coefficients: residual vanishes
  auto c0 = scalar_coeffs(0.0, 0.0, 0.0);
  CHECK(grazing_residual(c0, grid, frozen) <= 1e-12);
}

TEST_CASE("chart independence of the propagated plane") {
  auto c = scalar_coeffs(1.0, 0.0, 1.0);
  auto grid = linspace(0.0, 2.0, 21);

  RiccatiOptions early;
  early.switch_threshold = 10.0;  // switches well before the blowup
  RiccatiOptions late;
  late.switch_threshold = 1e4;

  auto t1 = propagate_section(c, zero_state(1), grid, early);
  auto t2 = propagate_section(c, zero_state(1), grid, late);
  CHECK(t1.switch_count >= 1);
  for (int i = 0; i < t1.size(); ++i)
    CHECK(plane_angle(plane_basis(t1.at(i)), plane_basis(t2.at(i))) <= 1e-6);
}
