#include "flowforms/symplectic.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <utility>

#include "flowforms/circulation.hpp"
#include "flowforms/flow.hpp"

namespace flowforms::symplectic {

Mat MatrixField::d(const Vec& x, double t, int i) const {
  if (partial) return partial(x, t, i);
  const double h = fd_step(x);
  Vec xp = x, xm = x;
  xp(i) += h;
  xm(i) -= h;
  return (value(xp, t) - value(xm, t)) / (2.0 * h);
}

MatrixField MatrixField::constant(const Mat& m) {
  MatrixField f;
  f.rows = static_cast<int>(m.rows());
  f.cols = static_cast<int>(m.cols());
  f.value = [m](const Vec&, double) { return m; };
  f.partial = [r = f.rows, c = f.cols](const Vec&, double, int) {
    return Mat::Zero(r, c).eval();
  };
  return f;
}

DiffusionSpec HamiltonianDiffusion::stratonovich_spec() const {
  if (A.rows != d || B.rows != d || A.cols != B.cols)
    throw ConfigError("hamiltonian diffusion: A and B must be d x k");
  const int n = 2 * d;
  const int kk = A.cols;
  DiffusionSpec spec;
  spec.dim = n;

  auto stack = [d = this->d](const Mat& a, const Mat& b, int j) {
    Vec v(2 * d);
    v.head(d) = a.col(j);
    v.tail(d) = b.col(j);
    return v;
  };

  for (int j = 0; j < kk; ++j) {
    VectorField Vj;
    Vj.dim = n;
    Vj.value = [*this, stack, j](const Vec& x, double t) {
      return stack(A(x, t), B(x, t), j);
    };
    Vj.jacobian = [*this, stack, j, n](const Vec& x, double t) {
      Mat J(n, n);
      for (int i = 0; i < n; ++i) J.col(i) = stack(A.d(x, t, i), B.d(x, t, i), j);
      return J;
    };
    spec.fields.push_back(std::move(Vj));
  }

  VectorField drift;
  drift.dim = n;
  drift.value = [*this, fields = spec.fields, n](const Vec& x, double t) {
    Vec g = H.grad(x, t);
    Vec v(n);
    v.head(d) = g.tail(d);    // H_p
    v.tail(d) = -g.head(d);   // -H_q
    for (const auto& f : fields) v -= 0.5 * (f.jac(x, t) * f.value(x, t));
    return v;
  };
  spec.drift = std::move(drift);
  return spec;
}

HamiltonianDiffusion phase_lift_system(const fieldlib::VelocityField& w,
                                       double nu) {
  if (!w.pressure || !w.pressure_gradient)
    throw ConfigError("phase_lift_system: field must supply a pressure");
  const int d = w.dim;
  const double s = std::sqrt(2.0 * nu);

  HamiltonianDiffusion sys;
  sys.d = d;
  sys.H.dim = 2 * d;
  sys.H.value = [w](const Vec& x, double t) {
    const int d2 = static_cast<int>(x.size()) / 2;
    return 0.5 * x.tail(d2).squaredNorm() + w.pressure(x.head(d2), t);
  };
  sys.H.gradient = [w](const Vec& x, double t) {
    const int d2 = static_cast<int>(x.size()) / 2;
    Vec g(x.size());
    g.head(d2) = w.pressure_gradient(x.head(d2), t);
    g.tail(d2) = x.tail(d2);
    return g;
  };
  if (w.pressure_hessian) {
    sys.H.hessian = [w](const Vec& x, double t) {
      const int d2 = static_cast<int>(x.size()) / 2;
      Mat h = Mat::Identity(x.size(), x.size());
      h.topLeftCorner(d2, d2) = w.pressure_hessian(x.head(d2), t);
      return h;
    };
  }

  sys.A = MatrixField::constant(s * Mat::Identity(d, d));
  sys.B.rows = d;
  sys.B.cols = d;
  sys.B.value = [w, s, d](const Vec& x, double t) {
    return (s * w.jac(x.head(d), t)).eval();
  };
  sys.B.partial = [w, s, d](const Vec& x, double t, int i) {
    if (i >= d) return Mat::Zero(d, d).eval();
    return (s * w.hess(x.head(d), t)[i]).eval();
  };
  return sys;
}

std::pair<Vec, Vec> z_vectors(const MatrixField& A, const MatrixField& B,
                              const Vec& x, double t) {
  if (A.rows != B.rows || A.cols != B.cols)
    throw ConfigError("z_vectors: mismatched coefficient shapes");
  const int d = A.rows;
  if (x.size() != 2 * d)
    throw ConfigError("z_vectors: state dimension must be 2d");
  const Mat Av = A(x, t), Bv = B(x, t);
  Vec z1(d), z2(d);
  for (int i = 0; i < d; ++i) {
    const Mat dAq = A.d(x, t, i), dBq = B.d(x, t, i);
    z1(i) = (dAq.cwiseProduct(Bv) - dBq.cwiseProduct(Av)).sum();
    const Mat dAp = A.d(x, t, d + i), dBp = B.d(x, t, d + i);
    z2(i) = (dAp.cwiseProduct(Bv) - dBp.cwiseProduct(Av)).sum();
  }
  return {z1, z2};
}

VectorField corrected_drift(const ScalarField& H,
                            const std::vector<VectorField>& diffusions) {
  const int n = H.dim;
  if (n <= 0 || n % 2 != 0)
    throw ConfigError("corrected_drift: even state dimension required");
  const Mat J = geometry::standard_symplectic_matrix(n);
  VectorField V0;
  V0.dim = n;
  V0.value = [H, diffusions, J](const Vec& x, double t) {
    Vec v = J * H.grad(x, t);
    for (const auto& f : diffusions) {
      const Mat DV = f.jac(x, t);
      // C(J V_j) = J DV - (J DV)^T applied to V_j, then rotated by J.
      const Mat JD = J * DV;
      v += 0.5 * (J * ((JD - JD.transpose()) * f.value(x, t)));
    }
    return v;
  };
  return V0;
}

SymplecticDiffusionReport classify(const DiffusionSpec& spec,
                                   const std::vector<Vec>& probes,
                                   const ClassifyOptions& opt) {
  if (spec.dim % 2 != 0)
    throw ConfigError("classify: even state dimension required");
  const geometry::TwoForm omega = geometry::standard_symplectic(spec.dim);

  std::vector<const VectorField*> fields;
  fields.push_back(&spec.drift);
  for (const auto& f : spec.fields) fields.push_back(&f);

  SymplecticDiffusionReport rep;
  std::vector<geometry::TwoForm> lies;
  lies.reserve(fields.size());
  for (const auto* f : fields)
    lies.push_back(geometry::lie_derivative_two_form(omega, *f));
  const geometry::TwoForm gen =
      geometry::generator_two_form(spec.drift, spec.fields, omega);

  const double t = 0.0;
  for (const Vec& x : probes) {
    double strong = 0.0;
    for (const auto& L : lies) strong = std::max(strong, inf_norm(L.W(x, t)));
    rep.strong_per_probe.push_back(strong);
    rep.max_strong = std::max(rep.max_strong, strong);

    const double g = inf_norm(gen.W(x, t));
    rep.generator_per_probe.push_back(g);
    rep.generator_norm = std::max(rep.generator_norm, g);

    if (opt.shape) {
      auto [z1, z2] = z_vectors(opt.shape->A, opt.shape->B, x, t);
      rep.max_z = std::max(rep.max_z, z1.lpNorm<Eigen::Infinity>());
      rep.max_z = std::max(rep.max_z, z2.lpNorm<Eigen::Infinity>());
      rep.z1.push_back(std::move(z1));
      rep.z2.push_back(std::move(z2));
      rep.has_z = true;
    }
  }

  const bool weak_ok = rep.generator_norm <= opt.tol_weak &&
                       (!rep.has_z || rep.max_z <= opt.tol_z);
  if (rep.max_strong <= opt.tol_strong)
    rep.verdict = "strongly";
  else if (weak_ok)
    rep.verdict = "weakly";
  else
    rep.verdict = "not";
  return rep;
}

double poincare_loop_integral(const DiffusionSpec& spec,
                              const circulation::Loop& loop, double T,
                              double h) {
  if (spec.k() != 0)
    throw ConfigError("poincare_loop_integral: deterministic flow required");
  if (spec.dim != loop.dim || spec.dim % 2 != 0)
    throw ConfigError("poincare_loop_integral: loop must live in R^{2d}");
  loop.validate();
  const int d = spec.dim / 2;

  flow::IntegratorOptions opt;
  opt.h = h;
  if (T > 0.0) opt.checkpoints = {T};

  double acc = 0.0;
  for (double s : loop.parameters()) {
    Vec x = loop.gamma(s);
    Vec tau = loop.tangent(s);
    if (T > 0.0) {
      const flow::FlowSample fs = flow::integrate_ode(spec, x, 0.0, opt);
      x = fs.states.back();
      tau = fs.jacobians.back() * tau;
    }
    acc += x.tail(d).dot(tau.head(d));
  }
  return acc / loop.nodes;
}

ScalarField bernoulli_function(const fieldlib::VelocityField& u) {
  if (!u.pressure)
    throw ConfigError("bernoulli_function: field must supply a pressure");
  ScalarField H;
  H.dim = u.dim;
  H.value = [u](const Vec& x, double t) {
    return u.pressure(x, t) + 0.5 * u.value(x, t).squaredNorm();
  };
  H.gradient = [u](const Vec& x, double t) {
    return (u.pressure_gradient(x, t) + u.jac(x, t).transpose() * u.value(x, t))
        .eval();
  };
  return H;
}

LiouvilleReport liouville_check(const fieldlib::VelocityField& u,
                                const ScalarField& H,
                                const std::vector<Vec>& probes, double t) {
  const geometry::OneForm alpha = geometry::one_form(u.as_vector_field());
  const geometry::TwoForm beta = geometry::exterior_derivative(alpha);

  LiouvilleReport rep;

  VectorField X;
  X.dim = u.dim;
  X.value = [u](const Vec& x, double tt) {
    const Mat C = geometry::c_matrix(u.jac(x, tt));
    Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double rcond =
        sv(0) > 0.0 ? sv(sv.size() - 1) / sv(0) : 0.0;
    if (rcond < 1e-12)
      throw NumericalError("liouville_check: C(u) is numerically singular");
    return svd.solve(u.value(x, tt)).eval();
  };

  const geometry::TwoForm lie = geometry::lie_derivative_two_form(beta, X);
  for (const Vec& x : probes) {
    const Mat C = geometry::c_matrix(u.jac(x, t));
    Eigen::JacobiSVD<Mat> svd(C);
    const auto& sv = svd.singularValues();
    const double rcond = sv(0) > 0.0 ? sv(sv.size() - 1) / sv(0) : 0.0;
    rep.min_rcond = std::min(rep.min_rcond, rcond);

    rep.max_transport =
        std::max(rep.max_transport, inf_norm(lie.W(x, t) - beta.W(x, t)));
    const double bern =
        std::abs(X.value(x, t).dot(H.grad(x, t)) - u.value(x, t).squaredNorm());
    rep.max_bernoulli = std::max(rep.max_bernoulli, bern);
  }
  return rep;
}

}  // namespace flowforms::symplectic
