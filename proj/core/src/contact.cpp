#include "flowforms/contact.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

namespace flowforms::contact {

namespace {

constexpr double kDegenerate = 1e-8;

/** Orthonormal basis of the orthogonal complement of v (n x (n-1)). */
Mat orthogonal_complement(const Vec& v) {
  const int n = static_cast<int>(v.size());
  Eigen::HouseholderQR<Mat> qr(v);
  const Mat Q = qr.householderQ() * Mat::Identity(n, n);
  return Q.rightCols(n - 1);
}

double contact_scalar(const fieldlib::VelocityField& u, const Vec& x,
                      double t, Vec* u_out, Vec* xi_out) {
  const Vec uv = u.value(x, t);
  const Vec xi = u.vorticity3(x, t);
  if (u_out) *u_out = uv;
  if (xi_out) *xi_out = xi;
  return uv.dot(xi);
}

bool degenerate(double uxi, double unorm, double xinorm) {
  return std::abs(uxi) < kDegenerate * (unorm * xinorm + 1e-30);
}

}  // namespace

ContactConditionReport contact_condition_3d(const fieldlib::VelocityField& u,
                                            const std::vector<Vec>& probes,
                                            double t) {
  if (u.dim != 3) throw ConfigError("contact_condition_3d: dim must be 3");
  ContactConditionReport rep;
  for (const Vec& x : probes) {
    Vec uv, xi;
    const double s = contact_scalar(u, x, t, &uv, &xi);
    rep.values.push_back(s);
    rep.min_abs = std::min(rep.min_abs, std::abs(s));
    if (degenerate(s, uv.norm(), xi.norm())) ++rep.degenerate;
  }
  return rep;
}

Vec reeb_3d(const fieldlib::VelocityField& u, const Vec& x, double t) {
  if (u.dim != 3) throw ConfigError("reeb_3d: dim must be 3");
  Vec uv, xi;
  const double s = contact_scalar(u, x, t, &uv, &xi);
  if (degenerate(s, uv.norm(), xi.norm()))
    throw NumericalError("reeb_3d: contact condition degenerate at probe");
  return xi / s;
}

ContactFrame frame_at(const fieldlib::VelocityField& u, const Vec& x,
                      double t) {
  const int n = u.dim;
  if (n % 2 == 0) throw ConfigError("frame_at: odd dimension required");
  ContactFrame f;
  f.u = u.value(x, t);
  if (f.u.norm() < 1e-14)
    throw NumericalError("frame_at: alpha vanishes at probe");
  f.kernel_basis = orthogonal_complement(f.u);
  if (n == 3) {
    f.xi = u.vorticity3(x, t);
    f.contact_scalar = f.u.dot(f.xi);
    f.reeb = reeb_3d(u, x, t);
  } else {
    // Null direction of C(u) via SVD, normalized so alpha(R) = 1.
    const Mat C = geometry::c_matrix(u.jac(x, t));
    Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullV);
    Vec null = svd.matrixV().col(n - 1);
    const double s = f.u.dot(null);
    if (std::abs(s) < kDegenerate * (f.u.norm() + 1e-30))
      throw NumericalError("frame_at: kernel direction lies in ker alpha");
    f.reeb = null / s;
  }
  return f;
}

Mat c_prime(const fieldlib::VelocityField& u, const Vec& x, double t) {
  const int n = u.dim;
  if (n % 2 == 0) throw ConfigError("c_prime: odd dimension required");
  const ContactFrame f = frame_at(u, x, t);
  const Mat C = geometry::c_matrix(u.jac(x, t));

  Eigen::JacobiSVD<Mat> svd(C);
  const Vec sv = svd.singularValues();
  const double thresh = 1e-6 * sv(0);
  int small = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) < thresh) ++small;
  if (small != 1)
    throw NumericalError(
        "c_prime: C(u) must have a one-dimensional near-kernel");

  // Restrict C to a map (complement of R) -> (complement of u), invert there.
  const Mat Qu = orthogonal_complement(f.u / f.u.norm());
  const Vec r = f.reeb / f.reeb.norm();
  const Mat Qr = orthogonal_complement(r);
  const Mat M = Qr.transpose() * C * Qu;  // (n-1) x (n-1)
  Eigen::PartialPivLU<Mat> lu(M);
  return Qu * lu.solve(Mat(Qr.transpose()));
}

Vec contact_hamiltonian_field(const fieldlib::VelocityField& u,
                              const ScalarField& H, const Vec& x, double t) {
  const ContactFrame f = frame_at(u, x, t);
  const Mat Cp = c_prime(u, x, t);
  const Vec gh = H.grad(x, t);
  // Only the kernel-plane part of dH is inverted through C'; the component
  // dH(R) alpha stays with the Reeb direction. Dropping the subtraction
  // still gives alpha(X_H) = H but loses the contact property.
  const Vec w = gh - gh.dot(f.reeb) * f.u;
  return (-Cp * w + H.value(x, t) * f.reeb).eval();
}

VectorField contact_hamiltonian_vector_field(const fieldlib::VelocityField& u,
                                             const ScalarField& H) {
  VectorField X;
  X.dim = u.dim;
  X.value = [u, H](const Vec& x, double t) {
    return contact_hamiltonian_field(u, H, x, t);
  };
  return X;
}

namespace {

/** Projection fit c ~ g u: returns (g, |c - g u| / |u|). */
std::pair<double, double> fit_factor(const Vec& c, const Vec& u) {
  const double un2 = u.squaredNorm();
  const double g = c.dot(u) / un2;
  return {g, (c - g * u).norm() / std::sqrt(un2)};
}

}  // namespace

ProportionalityReport strong_contact_check(const DiffusionSpec& spec,
                                           const geometry::OneForm& alpha,
                                           const std::vector<Vec>& probes,
                                           double t) {
  std::vector<const VectorField*> fields;
  fields.push_back(&spec.drift);
  for (const auto& f : spec.fields) fields.push_back(&f);

  ProportionalityReport rep;
  rep.g.resize(fields.size());
  rep.residual.resize(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const geometry::OneForm lie =
        geometry::lie_derivative_one_form(alpha, *fields[i]);
    for (const Vec& x : probes) {
      const Vec uv = alpha.c(x, t);
      if (uv.squaredNorm() < 1e-30) {
        if (i == 0) ++rep.skipped;
        continue;
      }
      const auto [g, res] = fit_factor(lie.c(x, t), uv);
      rep.g[i].push_back(g);
      rep.residual[i].push_back(res);
      rep.max_residual = std::max(rep.max_residual, res);
    }
  }
  return rep;
}

WeakContactReport weak_contact_residual(const DiffusionSpec& spec,
                                        const geometry::OneForm& alpha,
                                        const std::vector<Vec>& probes,
                                        double t) {
  const geometry::OneForm gen =
      geometry::generator_one_form(spec.drift, spec.fields, alpha);
  WeakContactReport rep;
  for (const Vec& x : probes) {
    const Vec uv = alpha.c(x, t);
    if (uv.squaredNorm() < 1e-30) {
      ++rep.skipped;
      continue;
    }
    const auto [f, res] = fit_factor(gen.c(x, t), uv);
    rep.f.push_back(f);
    rep.residual.push_back(res);
    rep.max_residual = std::max(rep.max_residual, res);
  }
  return rep;
}

}  // namespace flowforms::contact
