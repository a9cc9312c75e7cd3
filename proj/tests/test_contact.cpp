#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "flowforms/contact.hpp"
#include "flowforms/fieldlib.hpp"
#include "flowforms/flow.hpp"
#include "flowforms/geometry.hpp"
#include "flowforms/rng.hpp"
#include "flowforms/symplectic.hpp"
#include "flowforms/util.hpp"

using namespace flowforms;

namespace {

std::vector<Vec> contact_probes(int count) {
  return util::probe_box((Vec(3) << 0.15, 0.1, -0.9).finished(),
                         (Vec(3) << 1.1, 1.3, 0.9).finished(), count);
}

ScalarField height_function() {
  ScalarField H;
  H.dim = 3;
  H.value = [](const Vec& x, double) { return x(2); };
  H.gradient = [](const Vec& x, double) -> Vec {
    return Vec::Unit(x.size(), 2);
  };
  return H;
}

}  // namespace

TEST_CASE("rigid rotation frame: curl, Reeb, and annihilation identities") {
  const auto u = fieldlib::by_id("rigid-rotation-3d", 0.0);
  for (const Vec& x : contact_probes(40)) {
    const auto f = contact::frame_at(u, x, 0.0);
    CHECK((f.xi - (Vec(3) << 0, 0, 2).finished()).norm() < 1e-12);
    CHECK(f.contact_scalar == doctest::Approx(2.0).epsilon(1e-12));
    CHECK((f.reeb - Vec::Unit(3, 2)).norm() < 1e-12);
    CHECK(std::abs(f.u.dot(f.reeb) - 1.0) < 1e-10);
    const Mat C = geometry::c_matrix(u.jac(x, 0.0));
    CHECK((C * f.reeb).norm() < 1e-10);
    // C acts as the cross product with xi.
    const Vec v = (Vec(3) << 0.3, -0.7, 0.4).finished();
    Vec cross(3);
    cross << f.xi(1) * v(2) - f.xi(2) * v(1), f.xi(2) * v(0) - f.xi(0) * v(2),
        f.xi(0) * v(1) - f.xi(1) * v(0);
    CHECK((C * v - cross).norm() < 1e-10);
    // Kernel-plane basis is orthonormal and orthogonal to u.
    CHECK(inf_norm(f.kernel_basis.transpose() * f.kernel_basis -
                   Mat::Identity(2, 2)) < 1e-12);
    CHECK((f.kernel_basis.transpose() * f.u).norm() < 1e-12);
  }
}

TEST_CASE("Reeb field scales inversely with the form") {
  const auto u = fieldlib::by_id("rigid-rotation-3d", 0.0);
  const auto u2 = fieldlib::scale_field(u, 2.0);
  const Vec x = (Vec(3) << 0.4, 0.9, -0.2).finished();
  CHECK((contact::reeb_3d(u2, x) - 0.5 * contact::reeb_3d(u, x)).norm() <
        1e-12);
}

TEST_CASE("contact condition: rigid rotation vs gradient field") {
  const auto u = fieldlib::by_id("rigid-rotation-3d", 0.0);
  const auto probes = contact_probes(30);
  const auto rep = contact::contact_condition_3d(u, probes, 0.0);
  CHECK(rep.degenerate == 0);
  CHECK(rep.min_abs == doctest::Approx(2.0).epsilon(1e-12));
  REQUIRE(rep.values.size() == probes.size());

  fieldlib::VelocityField grad;
  grad.name = "gradient";
  grad.dim = 3;
  grad.value = [](const Vec& x, double) -> Vec { return x; };  // grad |x|^2/2
  grad.jacobian = [](const Vec& x, double) -> Mat {
    return Mat::Identity(x.size(), x.size());
  };
  const auto rep2 = contact::contact_condition_3d(grad, probes, 0.0);
  CHECK(rep2.degenerate == static_cast<int>(probes.size()));
  CHECK(rep2.min_abs < 1e-12);
  CHECK_THROWS_AS(contact::reeb_3d(grad, probes[0]), NumericalError);
}

TEST_CASE("swirl profile is contact away from the axis, degenerate on it") {
  const auto u = fieldlib::by_id("sine-swirl-3d", 0.0);
  auto probes = contact_probes(60);
  const auto rep = contact::contact_condition_3d(u, probes, 0.0);
  CHECK(rep.degenerate == 0);
  CHECK(rep.min_abs > 0.1);
  // u·xi = r + sin 2r for this profile.
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double r = std::hypot(probes[i](0), probes[i](1));
    CHECK(rep.values[i] ==
          doctest::Approx(r + std::sin(2.0 * r)).epsilon(1e-7));
  }
  probes.push_back((Vec(3) << 0.0, 0.0, 0.5).finished());
  CHECK(contact::contact_condition_3d(u, probes, 0.0).degenerate == 1);
}

TEST_CASE("c_prime satisfies its two defining identities") {
  rng::NoiseStream rnd(0xc0u, 7);
  int draw = 0;
  for (const std::string id : {"rigid-rotation-3d", "sine-swirl-3d"}) {
    const auto u = fieldlib::by_id(id, 0.0);
    for (const Vec& x : contact_probes(20)) {
      const auto f = contact::frame_at(u, x, 0.0);
      const Mat C = geometry::c_matrix(u.jac(x, 0.0));
      const Mat Cp = contact::c_prime(u, x, 0.0);
      CHECK((Cp * f.reeb).norm() < 1e-10);
      for (int rep = 0; rep < 20; ++rep) {
        Vec v(3);
        for (int i = 0; i < 3; ++i) v(i) = rnd.normal(draw++, i);
        v -= v.dot(f.u) / f.u.squaredNorm() * f.u;  // project into u-perp
        CHECK((Cp * (C * v) - v).norm() < 1e-8 * (1.0 + v.norm()));
      }
    }
  }
}

TEST_CASE("c_prime inverts the rotation block on the axis") {
  const auto u = fieldlib::by_id("rigid-rotation-3d", 0.0);
  const Vec x = (Vec(3) << 0.0, 0.0, 0.3).finished();  // u = e3 here
  const Mat Cp = contact::c_prime(u, x, 0.0);
  CHECK((Cp * Vec::Unit(3, 1) - 0.5 * Vec::Unit(3, 0)).norm() < 1e-10);
  CHECK((Cp * Vec::Unit(3, 0) + 0.5 * Vec::Unit(3, 1)).norm() < 1e-10);
  CHECK((Cp * Vec::Unit(3, 2)).norm() < 1e-12);
}

TEST_CASE("c_prime rejects a fully degenerate two-form") {
  fieldlib::VelocityField grad;
  grad.name = "gradient";
  grad.dim = 3;
  grad.value = [](const Vec& x, double) -> Vec { return x; };
  grad.jacobian = [](const Vec& x, double) -> Mat {
    return Mat::Identity(x.size(), x.size());
  };
  CHECK_THROWS_AS(contact::c_prime(grad, (Vec(3) << 0.2, 0.4, 0.1).finished()),
                  NumericalError);
}

TEST_CASE("frame_at requires an odd dimension") {
  const auto u = fieldlib::by_id("double-rotation-4d", 0.0);
  CHECK_THROWS_AS(contact::frame_at(u, Vec::Constant(4, 0.5)), ConfigError);
}

TEST_CASE("contact Hamiltonian field: closed forms on the rigid rotation") {
  const auto u = fieldlib::by_id("rigid-rotation-3d", 0.0);
  const ScalarField H = height_function();

  ScalarField one;
  one.dim = 3;
  one.value = [](const Vec&, double) { return 1.0; };
  one.gradient = [](const Vec& x, double) { return Vec::Zero(x.size()); };

  for (const Vec& x : contact_probes(100)) {
    // H == 1 flows along the Reeb field.
    const auto f = contact::frame_at(u, x, 0.0);
    CHECK((contact::contact_hamiltonian_field(u, one, x) - f.reeb).norm() <
          1e-10);
    // H == z has X_H = (x/2, y/2, z).
    const Vec xh = contact::contact_hamiltonian_field(u, H, x);
    const Vec expect = (Vec(3) << 0.5 * x(0), 0.5 * x(1), x(2)).finished();
    CHECK((xh - expect).norm() < 1e-10);
    CHECK(std::abs(f.u.dot(xh) - H.value(x, 0.0)) < 1e-8);
  }
}

TEST_CASE("contact Hamiltonian field matches the 3d cross-product form") {
  const ScalarField H = height_function();
  for (const std::string id : {"rigid-rotation-3d", "sine-swirl-3d"}) {
    const auto u = fieldlib::by_id(id, 0.0);
    for (const Vec& x : contact_probes(25)) {
      const auto f = contact::frame_at(u, x, 0.0);
      const Vec ub = f.u / f.contact_scalar;
      const Vec gh = H.grad(x, 0.0);
      Vec cross(3);
      cross << ub(1) * gh(2) - ub(2) * gh(1), ub(2) * gh(0) - ub(0) * gh(2),
          ub(0) * gh(1) - ub(1) * gh(0);
      const Vec expect = cross + H.value(x, 0.0) * f.reeb;
      CHECK((contact::contact_hamiltonian_field(u, H, x) - expect).norm() <
            1e-8);
    }
  }
}

TEST_CASE("strong contact check: Hamiltonian fields pass, a drift fails") {
  const auto u = fieldlib::by_id("sine-swirl-3d", 0.0);
  const geometry::OneForm alpha = geometry::one_form(u.as_vector_field());
  const ScalarField H = height_function();
  const auto probes = contact_probes(40);

  DiffusionSpec spec;
  spec.dim = 3;
  spec.drift = contact::contact_hamiltonian_vector_field(u, H);
  VectorField reeb;
  reeb.dim = 3;
  reeb.value = [u](const Vec& x, double t) { return contact::reeb_3d(u, x, t); };
  spec.fields.push_back(reeb);

  const auto rep = contact::strong_contact_check(spec, alpha, probes);
  REQUIRE(rep.g.size() == 2);
  CHECK(rep.max_residual <= 1e-4);
  CHECK(rep.skipped == 0);
  // Fitted factor of X_H is dH(R); for the Reeb field it vanishes.
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const Vec r = contact::reeb_3d(u, probes[p]);
    CHECK(rep.g[0][p] == doctest::Approx(r(2)).epsilon(1e-4));
    CHECK(std::abs(rep.g[1][p]) < 1e-4);
  }

  DiffusionSpec bad;
  bad.dim = 3;
  bad.drift.dim = 3;
  bad.drift.value = [](const Vec& x, double) {
    return Vec::Unit(x.size(), 0);
  };
  const auto rep2 = contact::strong_contact_check(bad, alpha, probes);
  CHECK(rep2.max_residual > 1e-2);
}

TEST_CASE("proportionality residuals are invariant under rescaling the form") {
  const auto u = fieldlib::by_id("rigid-rotation-3d", 0.0);
  const auto u3 = fieldlib::scale_field(u, 3.0);
  const ScalarField H = height_function();
  const auto probes = contact_probes(15);

  DiffusionSpec spec;
  spec.dim = 3;
  spec.drift = contact::contact_hamiltonian_vector_field(u, H);
  const auto a = contact::strong_contact_check(
      spec, geometry::one_form(u.as_vector_field()), probes);
  const auto b = contact::strong_contact_check(
      spec, geometry::one_form(u3.as_vector_field()), probes);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    CHECK(a.g[0][p] == doctest::Approx(b.g[0][p]).epsilon(1e-9));
    CHECK(a.residual[0][p] == doctest::Approx(b.residual[0][p]).epsilon(1e-6));
  }
}

TEST_CASE("weak contact residual: strong specs pass, perturbations scale") {
  const auto u = fieldlib::by_id("rigid-rotation-3d", 0.0);
  const geometry::OneForm alpha = geometry::one_form(u.as_vector_field());
  const ScalarField H = height_function();
  const auto probes = contact_probes(30);

  DiffusionSpec spec;
  spec.dim = 3;
  spec.drift = contact::contact_hamiltonian_vector_field(u, H);
  const auto clean = contact::weak_contact_residual(spec, alpha, probes);
  CHECK(clean.max_residual <= 1e-4);
  for (double f : clean.f) CHECK(f == doctest::Approx(1.0).epsilon(1e-3));

  double last = clean.max_residual;
  for (double eps : {1e-3, 1e-2, 1e-1}) {
    DiffusionSpec pert = spec;
    const VectorField base = spec.drift;
    pert.drift.value = [base, eps](const Vec& x, double t) -> Vec {
      Vec v = base.value(x, t);
      v(0) += eps * (1.0 + x(2) * x(2));
      return v;
    };
    pert.drift.jacobian = nullptr;
    const auto rep = contact::weak_contact_residual(pert, alpha, probes);
    CHECK(rep.max_residual > 3.0 * last);
    last = rep.max_residual;
  }
}

TEST_CASE("weak contact residual: Hamiltonian spec with zero factor") {
  // Bernoulli Hamiltonian of the steady swirl: dH(R) = 0, so the generator
  // annihilates alpha outright.
  const auto u = fieldlib::by_id("sine-swirl-3d", 0.0);
  const geometry::OneForm alpha = geometry::one_form(u.as_vector_field());
  const ScalarField H = symplectic::bernoulli_function(u);
  DiffusionSpec spec;
  spec.dim = 3;
  spec.drift = contact::contact_hamiltonian_vector_field(u, H);
  const auto rep =
      contact::weak_contact_residual(spec, alpha, contact_probes(25));
  CHECK(rep.max_residual <= 1e-4);
  for (double f : rep.f) CHECK(std::abs(f) < 1e-4);
}

TEST_CASE("pulled-back form stays proportional along the Hamiltonian flow") {
  const auto u = fieldlib::by_id("rigid-rotation-3d", 0.0);
  const ScalarField H = height_function();
  DiffusionSpec spec;
  spec.dim = 3;
  spec.drift = contact::contact_hamiltonian_vector_field(u, H);

  flow::IntegratorOptions opt;
  opt.h = 1e-3;
  opt.checkpoints = {0.1};
  for (const Vec& x : contact_probes(10)) {
    const auto s = flow::integrate_ode(spec, x, 0.0, opt);
    REQUIRE(s.ok);
    const Vec pulled = s.jacobians[1].transpose() * u.value(s.states[1], 0.0);
    const Vec ux = u.value(x, 0.0);
    const double g = pulled.dot(ux) / ux.squaredNorm();
    CHECK((pulled - g * ux).norm() / ux.norm() <= 1e-3);
    // With H = z the factor integrates to e^T.
    CHECK(g == doctest::Approx(std::exp(0.1)).epsilon(1e-4));
  }
}

TEST_CASE("five-dimensional frame and Hamiltonian field") {
  // Standard contact form dz + x1 dy1 + x2 dy2 on (x1, y1, x2, y2, z).
  fieldlib::VelocityField u;
  u.name = "standard-contact-5d";
  u.dim = 5;
  u.value = [](const Vec& x, double) -> Vec {
    Vec v = Vec::Zero(5);
    v(1) = x(0);
    v(3) = x(2);
    v(4) = 1.0;
    return v;
  };
  u.jacobian = [](const Vec&, double) -> Mat {
    Mat j = Mat::Zero(5, 5);
    j(1, 0) = 1.0;
    j(3, 2) = 1.0;
    return j;
  };

  ScalarField H;
  H.dim = 5;
  H.value = [](const Vec& x, double) { return x(4); };
  H.gradient = [](const Vec&, double) -> Vec { return Vec::Unit(5, 4); };

  const geometry::OneForm alpha = geometry::one_form(u.as_vector_field());
  DiffusionSpec spec;
  spec.dim = 5;
  spec.drift = contact::contact_hamiltonian_vector_field(u, H);

  std::vector<Vec> probes = util::probe_box(Vec::Constant(5, -0.8),
                                            Vec::Constant(5, 0.9), 20);
  for (const Vec& x : probes) {
    const auto f = contact::frame_at(u, x, 0.0);
    CHECK((f.reeb - Vec::Unit(5, 4)).norm() < 1e-8);
    CHECK(std::abs(f.u.dot(f.reeb) - 1.0) < 1e-10);
    const Vec xh = contact::contact_hamiltonian_field(u, H, x);
    CHECK(std::abs(f.u.dot(xh) - H.value(x, 0.0)) < 1e-8);
  }
  const auto rep = contact::strong_contact_check(spec, alpha, probes);
  CHECK(rep.max_residual <= 1e-4);
  for (double g : rep.g[0]) CHECK(g == doctest::Approx(1.0).epsilon(1e-4));
}
