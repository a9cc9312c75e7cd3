#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "flowforms/circulation.hpp"
#include "flowforms/fieldlib.hpp"
#include "flowforms/geometry.hpp"
#include "flowforms/util.hpp"

using namespace flowforms;
using circulation::Loop;
using circulation::Surface;

namespace {

Loop tilted_circle(double radius, int nodes = 256) {
  const Vec center = (Vec(3) << 1.5, 0.0, 0.25).finished();
  const Vec e1 = Vec::Unit(3, 0);
  const Vec e2 = (Vec(3) << 0.0, std::sqrt(0.5), std::sqrt(0.5)).finished();
  return Loop::circle(center, e1, e2, radius, nodes);
}

fieldlib::VelocityField gradient_field_3d() {
  fieldlib::VelocityField f;
  f.name = "gradient";
  f.dim = 3;
  f.value = [](const Vec& x, double) -> Vec { return x; };
  f.jacobian = [](const Vec& x, double) -> Mat {
    return Mat::Identity(x.size(), x.size());
  };
  return f;
}

}  // namespace

TEST_CASE("loop circulation: exact values on closed forms") {
  const auto rigid = fieldlib::by_id("rigid-rotation-3d", 0.0);
  // Planar circle: the constant-curl part contributes 2 pi r^2, the axial
  // component is orthogonal to the tangent.
  const auto loop = Loop::circle((Vec(3) << 0.3, -0.2, 0.5).finished(),
                                 Vec::Unit(3, 0), Vec::Unit(3, 1), 0.7, 128);
  CHECK(circulation::loop_circulation(rigid, loop, 0.0) ==
        doctest::Approx(2.0 * M_PI * 0.49).epsilon(1e-12));

  // Gradient fields have zero circulation.
  CHECK(std::abs(circulation::loop_circulation(gradient_field_3d(), loop,
                                               0.0)) < 1e-12);

  // Unit square against the planar rotation: circulation = 2 * area.
  fieldlib::VelocityField rot2;
  rot2.name = "rotation-2d";
  rot2.dim = 2;
  rot2.value = [](const Vec& x, double) -> Vec {
    return (Vec(2) << -x(1), x(0)).finished();
  };
  const std::vector<Vec> square = {
      (Vec(2) << 0, 0).finished(), (Vec(2) << 1, 0).finished(),
      (Vec(2) << 1, 1).finished(), (Vec(2) << 0, 1).finished()};
  const Loop poly = Loop::polygon(square, 16);
  CHECK(circulation::loop_circulation(rot2, poly, 0.0) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("loop validation errors") {
  const auto rigid = fieldlib::by_id("rigid-rotation-3d", 0.0);
  CHECK_THROWS_AS(Loop::polygon({Vec::Zero(2), Vec::Ones(2)}, 8), ConfigError);
  CHECK_THROWS_AS(Loop::from_parametrization(
                      2, [](double s) { return (Vec(2) << s, 0.0).finished(); },
                      [](double) { return (Vec(2) << 1.0, 0.0).finished(); }),
                  ConfigError);
  // Dimension mismatch between field and loop.
  const Loop poly = Loop::polygon({(Vec(2) << 0, 0).finished(),
                                   (Vec(2) << 1, 0).finished(),
                                   (Vec(2) << 0, 1).finished()},
                                  8);
  CHECK_THROWS_AS(circulation::loop_circulation(rigid, poly, 0.0), ConfigError);
}

TEST_CASE("Stokes: loop circulation equals the surface integral of d alpha") {
  const auto rigid = fieldlib::by_id("rigid-rotation-3d", 0.0);
  const std::vector<Vec> square = {
      (Vec(3) << 0, 0, 0.4).finished(), (Vec(3) << 1, 0, 0.4).finished(),
      (Vec(3) << 1, 1, 0.4).finished(), (Vec(3) << 0, 1, 0.4).finished()};
  const geometry::TwoForm beta =
      geometry::exterior_derivative(geometry::one_form(rigid.as_vector_field()));
  const Surface S = Surface::planar_rectangle(square[0], Vec::Unit(3, 0),
                                              Vec::Unit(3, 1), 16, 16);
  const double lhs = circulation::loop_circulation(rigid, Loop::polygon(square, 32), 0.0);
  const double rhs = circulation::surface_integral(beta, S, 0.0);
  CHECK(lhs == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rhs == doctest::Approx(2.0).epsilon(1e-12));

  // Non-constant curl: swirl profile over an off-axis rectangle.
  const auto swirl = fieldlib::by_id("sine-swirl-3d", 0.0);
  const Vec corner = (Vec(3) << 0.2, 0.1, 0.3).finished();
  const geometry::TwoForm bs =
      geometry::exterior_derivative(geometry::one_form(swirl.as_vector_field()));
  const Surface Ss = Surface::planar_rectangle(corner, Vec::Unit(3, 0),
                                               Vec::Unit(3, 1), 200, 200);
  const std::vector<Vec> sq = {
      corner, corner + Vec::Unit(3, 0),
      corner + Vec::Unit(3, 0) + Vec::Unit(3, 1), corner + Vec::Unit(3, 1)};
  const double ls = circulation::loop_circulation(swirl, Loop::polygon(sq, 400), 0.0);
  const double rs = circulation::surface_integral(bs, Ss, 0.0);
  CHECK(ls == doctest::Approx(rs).epsilon(5e-4));
}

TEST_CASE("pulled-back surface integral with identity transport") {
  const auto swirl = fieldlib::by_id("sine-swirl-3d", 0.0);
  const geometry::TwoForm beta =
      geometry::exterior_derivative(geometry::one_form(swirl.as_vector_field()));
  const Surface S = Surface::planar_rectangle(
      (Vec(3) << 0.3, 0.2, 0.0).finished(), Vec::Unit(3, 0), Vec::Unit(3, 1),
      12, 9);
  std::vector<Vec> states;
  std::vector<Mat> jacs;
  for (int i = 0; i < S.grid1; ++i)
    for (int j = 0; j < S.grid2; ++j) {
      states.push_back(S.tau((i + 0.5) / S.grid1, (j + 0.5) / S.grid2));
      jacs.push_back(Mat::Identity(3, 3));
    }
  const double a = circulation::surface_integral(beta, S, 0.0);
  const double b =
      circulation::pulled_back_surface_integral(beta, S, states, jacs, 0.0);
  CHECK(a == doctest::Approx(b).epsilon(1e-14));
  states.pop_back();
  CHECK_THROWS_AS(
      circulation::pulled_back_surface_integral(beta, S, states, jacs, 0.0),
      ConfigError);
}

TEST_CASE("Kelvin: circulation is conserved by steady Euler transport") {
  for (const std::string id : {"rigid-rotation-3d", "sine-swirl-3d"}) {
    const auto u = fieldlib::by_id(id, 0.0);
    const auto rep =
        circulation::kelvin_check(u, tilted_circle(0.6, 128), 1.0, 1e-3);
    REQUIRE(rep.times.size() == 5);
    CHECK(std::abs(rep.values[0]) > 0.1);  // a nontrivial invariant
    CHECK(rep.drift <= 1e-6);
  }
}

TEST_CASE("Cauchy vorticity transport for steady Euler fields") {
  const auto points = util::probe_box((Vec(3) << 0.2, 0.2, -0.5).finished(),
                                      (Vec(3) << 1.4, 1.4, 0.5).finished(), 10);
  for (const std::string id : {"rigid-rotation-3d", "sine-swirl-3d"}) {
    const auto u = fieldlib::by_id(id, 0.0);
    const auto rep = circulation::vorticity_transport_check(u, points, 0.5, 1e-3);
    REQUIRE(rep.errors.size() == points.size());
    CHECK(rep.max_error <= 1e-6);
  }
  CHECK_THROWS_AS(circulation::vorticity_transport_check(
                      fieldlib::by_id("taylor-green-2d", 0.0), points, 0.5, 1e-3),
                  ConfigError);
}

TEST_CASE("theorem11: linear field makes the surface process degenerate") {
  auto u = fieldlib::by_id("rigid-rotation-3d", 0.0);
  u.nu = 0.05;  // harmonic velocity: an exact solution for any viscosity
  u.laplacian = [](const Vec&, double) { return Vec::Zero(3); };

  circulation::Theorem11Config cfg;
  cfg.T = 0.25;
  cfg.h = 2.5e-3;
  cfg.samples = 20;
  cfg.checkpoints = {0.125, 0.25};
  cfg.surface = Surface::planar_rectangle(Vec::Zero(3), Vec::Unit(3, 0),
                                          Vec::Unit(3, 1), 10, 10);
  cfg.has_surface = true;
  const auto rep = circulation::theorem11_experiment(u, cfg);

  CHECK(rep.z0 == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(rep.discarded == 0);
  // The two-form is constant and the Jacobian deterministic, so every sample
  // produces the same path: paired z-statistics collapse to zero and the
  // quadratic variation vanishes with the second derivatives.
  CHECK(rep.max_abs_pair_z == 0.0);
  for (const auto& c : rep.checkpoints)
    CHECK(c.mean == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(rep.formula_qv_mean == 0.0);
  CHECK(rep.realized_qv_mean <= 1e-10);
  CHECK(rep.max_det_drift <= 1e-5);
  REQUIRE(rep.pair_times.size() == 3);
  CHECK(rep.pair_z.rows() == 3);
}

TEST_CASE("theorem11: Taylor-Green martingale statistics at small scale") {
  const auto u = fieldlib::by_id("taylor-green-3d", 0.1);
  circulation::Theorem11Config cfg;
  cfg.T = 0.25;
  cfg.h = 2.5e-3;
  cfg.samples = 400;
  cfg.checkpoints = {0.0625, 0.125, 0.1875, 0.25};
  cfg.surface = Surface::planar_rectangle(Vec::Zero(3), Vec::Unit(3, 0),
                                          Vec::Unit(3, 1), 12, 12);
  cfg.has_surface = true;
  cfg.resolution_tol = 2e-3;
  cfg.seed = 0x51ab1e5u;
  const auto rep = circulation::theorem11_experiment(u, cfg);

  CHECK(rep.discarded == 0);
  CHECK(rep.resolution_change <= 2e-3);
  CHECK(std::abs(rep.z0) > 0.5);
  CHECK(rep.max_abs_pair_z <= 4.0);
  CHECK(rep.qv_ratio > 0.7);
  CHECK(rep.qv_ratio < 1.3);
  CHECK(rep.max_det_drift <= 1e-3);

  const auto energy = circulation::energy_bound_check(rep);
  CHECK(energy.bound_ok);
  CHECK(energy.identity_ok);
}

TEST_CASE("theorem11: configuration and validation rejections") {
  const auto rigid = fieldlib::by_id("rigid-rotation-3d", 0.0);
  circulation::Theorem11Config cfg;
  cfg.T = 0.25;
  cfg.h = 2.5e-3;
  cfg.samples = 10;
  cfg.checkpoints = {0.25};
  // Inviscid field: the stochastic theorem needs nu > 0.
  CHECK_THROWS_AS(circulation::theorem11_experiment(rigid, cfg), ConfigError);

  const auto tg = fieldlib::by_id("taylor-green-3d", 0.1);
  {
    auto bad = cfg;
    bad.checkpoints = {0.1234, 0.25};  // off the step grid
    CHECK_THROWS_AS(circulation::theorem11_experiment(tg, bad), ConfigError);
  }
  {
    auto bad = cfg;
    bad.checkpoints = {0.125};  // final checkpoint below the horizon
    CHECK_THROWS_AS(circulation::theorem11_experiment(tg, bad), ConfigError);
  }
  {
    auto bad = cfg;
    bad.samples = 1;
    CHECK_THROWS_AS(circulation::theorem11_experiment(tg, bad), ConfigError);
  }
  {
    // A 3x3 grid cannot pass the default grid-doubling audit.
    auto bad = cfg;
    bad.surface = Surface::planar_rectangle(Vec::Zero(3), Vec::Unit(3, 0),
                                            Vec::Unit(3, 1), 3, 3);
    bad.has_surface = true;
    CHECK_THROWS_AS(circulation::theorem11_experiment(tg, bad), ConfigError);
  }
  // The residual gate rejects a field that does not solve the equations.
  const auto corrupted = fieldlib::by_id("corrupted-taylor-green", 0.1);
  CHECK_THROWS_AS(circulation::theorem11_experiment(corrupted, cfg),
                  NumericalError);
}

TEST_CASE("energy bound check: synthetic reports") {
  circulation::MartingaleReport rep;
  rep.energy_lhs = 1.0;
  rep.energy_rhs = 1.05;
  rep.energy_diff_se = 0.05;
  rep.ez2_identity_z = 1.2;
  auto v = circulation::energy_bound_check(rep);
  CHECK(v.bound_ok);
  CHECK(v.identity_ok);
  CHECK(v.bound_margin == doctest::Approx(0.2));

  rep.energy_lhs = 1.5;
  rep.ez2_identity_z = -4.0;
  v = circulation::energy_bound_check(rep);
  CHECK_FALSE(v.bound_ok);
  CHECK_FALSE(v.identity_ok);
}

TEST_CASE("vorticity reconstruction in the near-deterministic limit") {
  const auto u = fieldlib::by_id("taylor-green-3d", 1e-8);
  circulation::ConstantinIyerConfig cfg;
  cfg.T = 0.3;
  cfg.h = 2.5e-3;
  cfg.samples = 4;
  cfg.points = {(Vec(3) << 0.7, 0.4, 0.2).finished(),
                (Vec(3) << 1.2, 2.0, -0.3).finished()};
  cfg.checkpoints = {0.15, 0.3};
  const auto rep = circulation::constantin_iyer_estimate(u, cfg);

  REQUIRE(rep.points.size() == 2);
  CHECK(rep.max_error <= 1e-3);
  for (const auto& pt : rep.points) {
    REQUIRE(pt.times.size() == 2);
    CHECK(pt.discarded == 0);
    // The estimator is a martingale in t: both checkpoint means agree with
    // the reference vorticity in the deterministic limit.
    for (int c = 0; c < 2; ++c)
      CHECK((pt.mean[c] - pt.reference).cwiseAbs().maxCoeff() <= 1e-3);
    // Embedded field: reference vorticity is axial.
    CHECK(std::abs(pt.reference(0)) < 1e-10);
    CHECK(std::abs(pt.reference(1)) < 1e-10);
  }
}

TEST_CASE("vorticity reconstruction rejects bad configurations") {
  circulation::ConstantinIyerConfig cfg;
  cfg.points = {(Vec(3) << 0.5, 0.5, 0.0).finished()};
  CHECK_THROWS_AS(circulation::constantin_iyer_estimate(
                      fieldlib::by_id("rigid-rotation-3d", 0.0), cfg),
                  ConfigError);  // nu = 0
  CHECK_THROWS_AS(circulation::constantin_iyer_estimate(
                      fieldlib::by_id("taylor-green-2d", 0.1), cfg),
                  ConfigError);  // dim != 3
  circulation::ConstantinIyerConfig empty;
  CHECK_THROWS_AS(circulation::constantin_iyer_estimate(
                      fieldlib::by_id("taylor-green-3d", 0.1), empty),
                  ConfigError);  // no points
}
