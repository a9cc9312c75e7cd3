#include "flowforms/fieldlib.hpp"

#include <cmath>

#include "flowforms/geometry.hpp"

namespace flowforms::fieldlib {

namespace {

using RowArr = Eigen::Array<double, 1, Eigen::Dynamic>;

constexpr double kAxisEps = 1e-12;

}  // namespace

void BatchDerivs::resize(int n, Eigen::Index m, int order) {
  val.resize(n, m);
  if (order >= 1) {
    du.resize(n);
    for (auto& d : du) d.resize(n, m);
  }
  if (order >= 2) {
    d2.resize(static_cast<std::size_t>(n) * n);
    for (auto& d : d2) d.resize(n, m);
  }
}

Mat VelocityField::jac(const Vec& x, double t) const {
  if (jacobian) return jacobian(x, t);
  return VectorField::fd_jacobian(value, x, t);
}

Vec VelocityField::u_t(const Vec& x, double t) const {
  if (time_derivative) return time_derivative(x, t);
  if (steady) return Vec::Zero(dim);
  const double h = 1e-6;
  return (value(x, t + h) - value(x, t - h)) / (2.0 * h);
}

Vec VelocityField::lap(const Vec& x, double t) const {
  if (laplacian) return laplacian(x, t);
  const double h = kFdStepNested;
  Vec acc = Vec::Zero(dim), xp = x, xm = x;
  const Vec u0 = value(x, t);
  for (int j = 0; j < dim; ++j) {
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    acc += (value(xp, t) - 2.0 * u0 + value(xm, t)) / (h * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return acc;
}

std::vector<Mat> VelocityField::hess(const Vec& x, double t) const {
  if (hessian) return hessian(x, t);
  const double h = kFdStepNested;
  std::vector<Mat> out(dim);
  Vec xp = x, xm = x;
  for (int i = 0; i < dim; ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    out[i] = (jac(xp, t) - jac(xm, t)) / (2.0 * h);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return out;
}

Vec VelocityField::vorticity3(const Vec& x, double t) const {
  if (dim != 3) throw ConfigError("vorticity3: field is not 3-dimensional");
  const Mat J = jac(x, t);
  Vec xi(3);
  xi << J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1);
  return xi;
}

VectorField VelocityField::as_vector_field() const {
  VectorField f;
  f.dim = dim;
  f.value = value;
  f.jacobian = jacobian;
  return f;
}

void VelocityField::eval_batch(const Mat& X, double t, BatchDerivs& out,
                               int order) const {
  if (batch) {
    batch(X, t, out, order);
    return;
  }
  const int n = dim;
  const Eigen::Index m = X.cols();
  out.resize(n, m, order);
  for (Eigen::Index c = 0; c < m; ++c) {
    const Vec x = X.col(c);
    out.val.col(c) = value(x, t);
    if (order >= 1) {
      const Mat J = jac(x, t);
      for (int j = 0; j < n; ++j) out.du[j].col(c) = J.col(j);
    }
    if (order >= 2) {
      const auto H = hess(x, t);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.d2[i * n + j].col(c) = H[i].col(j);
    }
  }
}

// ---------------------------------------------------------------------------
// Taylor-Green

VelocityField taylor_green_2d(double nu) {
  if (nu < 0) throw ConfigError("taylor_green_2d: nu must be >= 0");
  VelocityField f;
  f.name = "taylor-green-2d";
  f.dim = 2;
  f.nu = nu;
  f.divergence_free = true;
  f.steady = (nu == 0.0);

  const auto amp = [nu](double t) { return std::exp(-2.0 * nu * t); };
  const auto amp2 = [nu](double t) { return std::exp(-4.0 * nu * t); };

  f.value = [amp](const Vec& x, double t) -> Vec {
    const double e = amp(t);
    Vec u(2);
    u << -e * std::cos(x(0)) * std::sin(x(1)),
        e * std::sin(x(0)) * std::cos(x(1));
    return u;
  };
  f.jacobian = [amp](const Vec& x, double t) -> Mat {
    const double e = amp(t);
    const double sx = std::sin(x(0)), cx = std::cos(x(0));
    const double sy = std::sin(x(1)), cy = std::cos(x(1));
    Mat J(2, 2);
    J << e * sx * sy, -e * cx * cy, e * cx * cy, -e * sx * sy;
    return J;
  };
  f.time_derivative = [f, nu](const Vec& x, double t) -> Vec {
    return -2.0 * nu * f.value(x, t);
  };
  f.laplacian = [f](const Vec& x, double t) -> Vec {
    return -2.0 * f.value(x, t);
  };
  f.laplacian_jacobian = [f](const Vec& x, double t) -> Mat {
    return -2.0 * f.jacobian(x, t);
  };
  f.pressure = [amp2](const Vec& x, double t) {
    return -0.25 * amp2(t) * (std::cos(2 * x(0)) + std::cos(2 * x(1)));
  };
  f.pressure_gradient = [amp2](const Vec& x, double t) -> Vec {
    const double e2 = amp2(t);
    Vec g(2);
    g << 0.5 * e2 * std::sin(2 * x(0)), 0.5 * e2 * std::sin(2 * x(1));
    return g;
  };
  f.pressure_hessian = [amp2](const Vec& x, double t) -> Mat {
    const double e2 = amp2(t);
    Mat H = Mat::Zero(2, 2);
    H(0, 0) = e2 * std::cos(2 * x(0));
    H(1, 1) = e2 * std::cos(2 * x(1));
    return H;
  };
  f.hessian = [amp](const Vec& x, double t) -> std::vector<Mat> {
    const double e = amp(t);
    const double sx = std::sin(x(0)), cx = std::cos(x(0));
    const double sy = std::sin(x(1)), cy = std::cos(x(1));
    Mat h0(2, 2), h1(2, 2);
    h0 << e * cx * sy, e * sx * cy, -e * sx * cy, -e * cx * sy;
    h1 << e * sx * cy, e * cx * sy, -e * cx * sy, -e * sx * cy;
    return {h0, h1};
  };
  f.batch = [amp](const Mat& X, double t, BatchDerivs& out, int order) {
    const double e = amp(t);
    out.resize(2, X.cols(), order);
    const RowArr sx = X.row(0).array().sin(), cx = X.row(0).array().cos();
    const RowArr sy = X.row(1).array().sin(), cy = X.row(1).array().cos();
    const RowArr cxsy = cx * sy, sxcy = sx * cy, sxsy = sx * sy,
                 cxcy = cx * cy;
    out.val.row(0) = -e * cxsy;
    out.val.row(1) = e * sxcy;
    if (order >= 1) {
      out.du[0].row(0) = e * sxsy;
      out.du[0].row(1) = e * cxcy;
      out.du[1].row(0) = -e * cxcy;
      out.du[1].row(1) = -e * sxsy;
    }
    if (order >= 2) {
      out.d2[0].row(0) = e * cxsy;
      out.d2[0].row(1) = -e * sxcy;
      out.d2[1].row(0) = e * sxcy;
      out.d2[1].row(1) = -e * cxsy;
      out.d2[2] = out.d2[1];
      out.d2[3] = out.d2[0];
    }
  };
  return f;
}

VelocityField embed_2d_in_3d(const VelocityField& f2) {
  if (f2.dim != 2) throw ConfigError("embed_2d_in_3d: source must be planar");
  VelocityField f;
  f.name = f2.name + "-3d";
  f.dim = 3;
  f.nu = f2.nu;
  f.divergence_free = f2.divergence_free;
  f.steady = f2.steady;

  const auto plane = [](const Vec& x) -> Vec {
    Vec q(2);
    q << x(0), x(1);
    return q;
  };
  const auto lift = [](const Vec& v) -> Vec {
    Vec u = Vec::Zero(3);
    u.head(2) = v;
    return u;
  };
  f.value = [f2, plane, lift](const Vec& x, double t) {
    return lift(f2.value(plane(x), t));
  };
  if (f2.jacobian)
    f.jacobian = [f2, plane](const Vec& x, double t) -> Mat {
      Mat J = Mat::Zero(3, 3);
      J.topLeftCorner(2, 2) = f2.jacobian(plane(x), t);
      return J;
    };
  if (f2.time_derivative)
    f.time_derivative = [f2, plane, lift](const Vec& x, double t) {
      return lift(f2.time_derivative(plane(x), t));
    };
  if (f2.laplacian)
    f.laplacian = [f2, plane, lift](const Vec& x, double t) {
      return lift(f2.laplacian(plane(x), t));
    };
  if (f2.laplacian_jacobian)
    f.laplacian_jacobian = [f2, plane](const Vec& x, double t) -> Mat {
      Mat J = Mat::Zero(3, 3);
      J.topLeftCorner(2, 2) = f2.laplacian_jacobian(plane(x), t);
      return J;
    };
  if (f2.pressure)
    f.pressure = [f2, plane](const Vec& x, double t) {
      return f2.pressure(plane(x), t);
    };
  if (f2.pressure_gradient)
    f.pressure_gradient = [f2, plane, lift](const Vec& x, double t) {
      return lift(f2.pressure_gradient(plane(x), t));
    };
  if (f2.pressure_hessian)
    f.pressure_hessian = [f2, plane](const Vec& x, double t) -> Mat {
      Mat H = Mat::Zero(3, 3);
      H.topLeftCorner(2, 2) = f2.pressure_hessian(plane(x), t);
      return H;
    };
  if (f2.hessian)
    f.hessian = [f2, plane](const Vec& x, double t) -> std::vector<Mat> {
      const auto h2 = f2.hessian(plane(x), t);
      std::vector<Mat> h(3, Mat::Zero(3, 3));
      for (int i = 0; i < 2; ++i) h[i].topLeftCorner(2, 2) = h2[i];
      return h;
    };
  if (f2.batch)
    f.batch = [f2](const Mat& X, double t, BatchDerivs& out, int order) {
      BatchDerivs flat;
      f2.batch(X.topRows(2), t, flat, order);
      const Eigen::Index m = X.cols();
      out.resize(3, m, order);
      out.val.setZero();
      out.val.topRows(2) = flat.val;
      if (order >= 1) {
        for (int j = 0; j < 3; ++j) out.du[j].setZero();
        for (int j = 0; j < 2; ++j) out.du[j].topRows(2) = flat.du[j];
      }
      if (order >= 2) {
        for (auto& d : out.d2) d.setZero();
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            out.d2[i * 3 + j].topRows(2) = flat.d2[i * 2 + j];
      }
    };
  return f;
}

VelocityField taylor_green_3d(double nu) {
  VelocityField f = embed_2d_in_3d(taylor_green_2d(nu));
  f.name = "taylor-green-3d";
  return f;
}

// ---------------------------------------------------------------------------
// Axisymmetric swirl + axial family: u = (-y g(r), x g(r), c(r)).

VelocityField axisymmetric_steady(const AxisymmetricProfiles& p) {
  VelocityField f;
  f.name = p.name;
  f.dim = 3;
  f.nu = 0.0;
  f.divergence_free = true;
  f.steady = true;

  const auto g = p.g, dg = p.dg, c = p.c, dc = p.dc;

  f.value = [g, c](const Vec& x, double) -> Vec {
    const double r = std::hypot(x(0), x(1));
    Vec u(3);
    u << -x(1) * g(r), x(0) * g(r), c(r);
    return u;
  };
  f.jacobian = [g, dg, dc](const Vec& x, double) -> Mat {
    const double r = std::hypot(x(0), x(1));
    Mat J = Mat::Zero(3, 3);
    if (r < kAxisEps) {
      const double g0 = g(0.0);
      J(0, 1) = -g0;
      J(1, 0) = g0;
      return J;
    }
    const double gr = g(r), dgr = dg(r), dcr = dc(r);
    const double rx = x(0) / r, ry = x(1) / r;
    J(0, 0) = -x(1) * dgr * rx;
    J(0, 1) = -gr - x(1) * dgr * ry;
    J(1, 0) = gr + x(0) * dgr * rx;
    J(1, 1) = x(0) * dgr * ry;
    J(2, 0) = dcr * rx;
    J(2, 1) = dcr * ry;
    return J;
  };
  f.time_derivative = [](const Vec&, double) { return Vec::Zero(3); };
  f.pressure_gradient = [g](const Vec& x, double) -> Vec {
    const double r = std::hypot(x(0), x(1));
    const double g2 = g(r) * g(r);
    Vec gp(3);
    gp << g2 * x(0), g2 * x(1), 0.0;
    return gp;
  };
  // Pressure by radial quadrature of the centripetal balance P'(r) = r g(r)^2
  // on a cached trapezoid grid.
  {
    const int nodes = 10000;
    const double rmax = 20.0;
    auto table = std::make_shared<std::vector<double>>(nodes + 1, 0.0);
    const double dr = rmax / nodes;
    double acc = 0.0, prev = 0.0;
    for (int i = 1; i <= nodes; ++i) {
      const double r = i * dr;
      const double cur = r * g(r) * g(r);
      acc += 0.5 * (prev + cur) * dr;
      prev = cur;
      (*table)[i] = acc;
    }
    // Cubic Hermite interpolation (the slope r g(r)^2 is known analytically
    // at the nodes) keeps the table C^1, so finite differences across it stay
    // accurate.
    f.pressure = [g, table, dr, rmax](const Vec& x, double) {
      const double r = std::min(std::hypot(x(0), x(1)), rmax);
      const double s = r / dr;
      const int i = std::min(static_cast<int>(s), static_cast<int>(table->size()) - 2);
      const double w = s - i;
      const double r0 = i * dr, r1 = r0 + dr;
      const double p0 = (*table)[i], p1 = (*table)[i + 1];
      const double m0 = r0 * g(r0) * g(r0), m1 = r1 * g(r1) * g(r1);
      const double w2 = w * w, w3 = w2 * w;
      return (2.0 * w3 - 3.0 * w2 + 1.0) * p0 + (w3 - 2.0 * w2 + w) * dr * m0 +
             (3.0 * w2 - 2.0 * w3) * p1 + (w3 - w2) * dr * m1;
    };
  }
  return f;
}

VelocityField rigid_rotation_3d() {
  AxisymmetricProfiles p;
  p.name = "rigid-rotation-3d";
  p.g = [](double) { return 1.0; };
  p.dg = [](double) { return 0.0; };
  p.c = [](double) { return 1.0; };
  p.dc = [](double) { return 0.0; };
  return axisymmetric_steady(p);
}

VelocityField sine_swirl_3d() {
  AxisymmetricProfiles p;
  p.name = "sine-swirl-3d";
  p.g = [](double r) { return std::sin(r); };
  p.dg = [](double r) { return std::cos(r); };
  p.c = [](double r) { return std::cos(r); };
  p.dc = [](double r) { return -std::sin(r); };
  return axisymmetric_steady(p);
}

VelocityField overtwisted_3d() {
  AxisymmetricProfiles p;
  p.name = "overtwisted-3d";
  // g = sin(r)/(2r), extended through r = 0 by its series.
  p.g = [](double r) {
    if (r < 1e-3) return 0.5 - r * r / 12.0 + r * r * r * r / 240.0;
    return std::sin(r) / (2.0 * r);
  };
  p.dg = [](double r) {
    if (r < 1e-3) return -r / 6.0 + r * r * r / 60.0;
    return (r * std::cos(r) - std::sin(r)) / (2.0 * r * r);
  };
  p.c = [](double r) { return std::cos(r); };
  p.dc = [](double r) { return -std::sin(r); };
  return axisymmetric_steady(p);
}

// ---------------------------------------------------------------------------

VelocityField double_rotation_4d() {
  VelocityField f;
  f.name = "double-rotation-4d";
  f.dim = 4;
  f.nu = 0.0;
  f.divergence_free = true;
  f.steady = true;

  Mat K = Mat::Zero(4, 4);
  K(0, 1) = -1.0;
  K(1, 0) = 1.0;
  K(2, 3) = -1.0;
  K(3, 2) = 1.0;

  f.value = [K](const Vec& x, double) -> Vec { return K * x; };
  f.jacobian = [K](const Vec&, double) -> Mat { return K; };
  f.time_derivative = [](const Vec&, double) { return Vec::Zero(4); };
  f.laplacian = [](const Vec&, double) { return Vec::Zero(4); };
  f.laplacian_jacobian = [](const Vec&, double) { return Mat::Zero(4, 4); };
  f.pressure = [](const Vec& x, double) { return 0.5 * x.squaredNorm(); };
  f.pressure_gradient = [](const Vec& x, double) -> Vec { return x; };
  f.pressure_hessian = [](const Vec&, double) { return Mat::Identity(4, 4); };
  f.hessian = [](const Vec&, double) {
    return std::vector<Mat>(4, Mat::Zero(4, 4));
  };
  return f;
}

VelocityField scale_field(const VelocityField& u, double s) {
  VelocityField f = u;
  f.name = u.name + "-scaled";
  f.value = [u, s](const Vec& x, double t) -> Vec { return s * u.value(x, t); };
  if (u.jacobian)
    f.jacobian = [u, s](const Vec& x, double t) -> Mat {
      return s * u.jacobian(x, t);
    };
  if (u.time_derivative)
    f.time_derivative = [u, s](const Vec& x, double t) -> Vec {
      return s * u.time_derivative(x, t);
    };
  if (u.laplacian)
    f.laplacian = [u, s](const Vec& x, double t) -> Vec {
      return s * u.laplacian(x, t);
    };
  if (u.laplacian_jacobian)
    f.laplacian_jacobian = [u, s](const Vec& x, double t) -> Mat {
      return s * u.laplacian_jacobian(x, t);
    };
  if (u.hessian)
    f.hessian = [u, s](const Vec& x, double t) {
      auto h = u.hessian(x, t);
      for (auto& m : h) m *= s;
      return h;
    };
  if (u.batch)
    f.batch = [u, s](const Mat& X, double t, BatchDerivs& out, int order) {
      u.batch(X, t, out, order);
      out.val *= s;
      for (auto& d : out.du) d *= s;
      for (auto& d : out.d2) d *= s;
    };
  return f;
}

VelocityField corrupted_taylor_green(double nu) {
  VelocityField f = scale_field(taylor_green_2d(nu), 1.1);
  f.name = "corrupted-taylor-green";
  return f;
}

VelocityField time_reversed(const VelocityField& u, double horizon) {
  VelocityField f;
  f.name = u.name + "-reversed";
  f.dim = u.dim;
  f.nu = u.nu;
  f.divergence_free = u.divergence_free;
  f.steady = u.steady;
  const double T = horizon;

  f.value = [u, T](const Vec& x, double t) -> Vec {
    return -u.value(x, T - t);
  };
  if (u.jacobian)
    f.jacobian = [u, T](const Vec& x, double t) -> Mat {
      return -u.jacobian(x, T - t);
    };
  f.time_derivative = [u, T](const Vec& x, double t) -> Vec {
    return u.u_t(x, T - t);
  };
  if (u.laplacian)
    f.laplacian = [u, T](const Vec& x, double t) -> Vec {
      return -u.laplacian(x, T - t);
    };
  if (u.laplacian_jacobian)
    f.laplacian_jacobian = [u, T](const Vec& x, double t) -> Mat {
      return -u.laplacian_jacobian(x, T - t);
    };
  if (u.pressure)
    f.pressure = [u, T](const Vec& x, double t) { return u.pressure(x, T - t); };
  if (u.pressure_gradient)
    f.pressure_gradient = [u, T](const Vec& x, double t) -> Vec {
      return u.pressure_gradient(x, T - t);
    };
  if (u.pressure_hessian)
    f.pressure_hessian = [u, T](const Vec& x, double t) -> Mat {
      return u.pressure_hessian(x, T - t);
    };
  if (u.hessian)
    f.hessian = [u, T](const Vec& x, double t) {
      auto h = u.hessian(x, T - t);
      for (auto& m : h) m = -m;
      return h;
    };
  if (u.batch)
    f.batch = [u, T](const Mat& X, double t, BatchDerivs& out, int order) {
      u.batch(X, T - t, out, order);
      out.val = -out.val;
      for (auto& d : out.du) d = -d;
      for (auto& d : out.d2) d = -d;
    };
  return f;
}

VelocityField by_id(const std::string& id, double nu) {
  if (id == "taylor-green-2d") return taylor_green_2d(nu);
  if (id == "taylor-green-3d") return taylor_green_3d(nu);
  if (id == "rigid-rotation-3d") return rigid_rotation_3d();
  if (id == "sine-swirl-3d") return sine_swirl_3d();
  if (id == "overtwisted-3d") return overtwisted_3d();
  if (id == "double-rotation-4d") return double_rotation_4d();
  if (id == "corrupted-taylor-green") return corrupted_taylor_green(nu);
  throw ConfigError("unknown field id: " + id);
}

std::vector<std::string> catalog_ids() {
  return {"corrupted-taylor-green", "double-rotation-4d", "overtwisted-3d",
          "rigid-rotation-3d",      "sine-swirl-3d",      "taylor-green-2d",
          "taylor-green-3d"};
}

DiffusionSpec hamiltonian_system(const ScalarField& H) {
  if (H.dim % 2 != 0 || H.dim < 2)
    throw ConfigError("hamiltonian_system: dimension must be even");
  const Mat J = geometry::standard_symplectic_matrix(H.dim);
  DiffusionSpec spec;
  spec.dim = H.dim;
  spec.drift.dim = H.dim;
  spec.drift.value = [H, J](const Vec& x, double t) -> Vec {
    return J * H.grad(x, t);
  };
  spec.drift.jacobian = [H, J](const Vec& x, double t) -> Mat {
    return J * H.hess(x, t);
  };
  return spec;
}

namespace {

ResidualReport residual_impl(const VelocityField& u,
                             const std::vector<Vec>& probes,
                             const std::vector<double>& times,
                             double viscous_sign) {
  ResidualReport rep;
  rep.probes = static_cast<int>(probes.size() * times.size());
  if (!u.pressure_gradient) return rep;  // not validated
  rep.validated = true;
  for (double t : times) {
    for (const auto& x : probes) {
      const Mat J = u.jac(x, t);
      const Vec r = u.u_t(x, t) + J * u.value(x, t) + u.pressure_gradient(x, t) +
                    viscous_sign * u.nu * u.lap(x, t);
      rep.max_momentum = std::max(rep.max_momentum, r.norm());
      rep.max_divergence = std::max(rep.max_divergence, std::abs(J.trace()));
    }
  }
  return rep;
}

}  // namespace

ResidualReport residual_navier_stokes(const VelocityField& u,
                                      const std::vector<Vec>& probes,
                                      const std::vector<double>& times) {
  return residual_impl(u, probes, times, -1.0);
}

ResidualReport residual_backward_ns(const VelocityField& w,
                                    const std::vector<Vec>& probes,
                                    const std::vector<double>& times) {
  return residual_impl(w, probes, times, +1.0);
}

}  // namespace flowforms::fieldlib
