#include "flowforms/geometry.hpp"

namespace flowforms::geometry {

namespace {

void check_dim(int a, int b, const char* what) {
  if (a != b) throw ConfigError(std::string(what) + ": dimension mismatch");
}

}  // namespace

Mat c_operator(const OneForm& u, const Vec& x, double t) {
  check_dim(u.dim, static_cast<int>(x.size()), "c_operator");
  return c_matrix(u.cjac(x, t));
}

Mat standard_symplectic_matrix(int n) {
  if (n < 2 || n % 2 != 0)
    throw ConfigError("standard_symplectic: dimension must be even");
  const int d = n / 2;
  Mat J = Mat::Zero(n, n);
  J.topRightCorner(d, d) = Mat::Identity(d, d);
  J.bottomLeftCorner(d, d) = -Mat::Identity(d, d);
  return J;
}

TwoForm standard_symplectic(int n) {
  const Mat J = standard_symplectic_matrix(n);
  TwoForm w;
  w.dim = n;
  w.closed = true;
  w.matrix = [J](const Vec&, double) { return J; };
  w.matrix_dx = [n](const Vec&, double) {
    return std::vector<Mat>(n, Mat::Zero(n, n));
  };
  return w;
}

OneForm one_form(const VectorField& u) {
  OneForm a;
  a.dim = u.dim;
  a.coeff = u.value;
  a.coeff_jacobian = u.jacobian;
  return a;
}

TwoForm exterior_derivative(const OneForm& u) {
  TwoForm b;
  b.dim = u.dim;
  b.closed = true;
  b.matrix = [u](const Vec& x, double t) { return c_matrix(u.cjac(x, t)); };
  return b;
}

VectorField contraction_field(const TwoForm& beta, const VectorField& V) {
  check_dim(beta.dim, V.dim, "contraction");
  VectorField c;
  c.dim = beta.dim;
  c.value = [beta, V](const Vec& x, double t) -> Vec {
    return beta.matrix(x, t) * V.value(x, t);
  };
  if (beta.matrix_dx && V.jacobian) {
    c.jacobian = [beta, V](const Vec& x, double t) -> Mat {
      const int n = static_cast<int>(x.size());
      const Mat W = beta.matrix(x, t);
      const std::vector<Mat> dW = beta.matrix_dx(x, t);
      const Vec v = V.value(x, t);
      const Mat DV = V.jacobian(x, t);
      Mat D(n, n);
      for (int j = 0; j < n; ++j) D.col(j) = dW[j] * v + W * DV.col(j);
      return D;
    };
  }
  return c;
}

OneForm contraction(const TwoForm& beta, const VectorField& V) {
  const VectorField c = contraction_field(beta, V);
  OneForm a;
  a.dim = c.dim;
  a.coeff = c.value;
  a.coeff_jacobian = c.jacobian;
  return a;
}

TwoForm lie_derivative_two_form(const TwoForm& beta, const VectorField& V,
                                double fd_h) {
  check_dim(beta.dim, V.dim, "lie_derivative_two_form");
  if (!beta.closed)
    throw ConfigError("lie_derivative_two_form: only closed 2-forms supported");
  const VectorField c = contraction_field(beta, V);
  TwoForm out;
  out.dim = beta.dim;
  out.closed = true;  // exact, hence closed
  out.matrix = [c, fd_h](const Vec& x, double t) -> Mat {
    const Mat Dc = c.jacobian ? c.jacobian(x, t)
                              : VectorField::fd_jacobian(c.value, x, t, fd_h);
    return c_matrix(Dc);
  };
  return out;
}

TwoForm generator_two_form(const VectorField& drift,
                           const std::vector<VectorField>& diffusions,
                           const TwoForm& beta) {
  const TwoForm l0 = lie_derivative_two_form(beta, drift);
  std::vector<TwoForm> l2;
  l2.reserve(diffusions.size());
  for (const auto& vi : diffusions) {
    const TwoForm li = lie_derivative_two_form(beta, vi);
    l2.push_back(lie_derivative_two_form(li, vi, kFdStepNested));
  }
  TwoForm out;
  out.dim = beta.dim;
  out.closed = true;
  out.matrix = [l0, l2](const Vec& x, double t) -> Mat {
    Mat W = l0.matrix(x, t);
    for (const auto& term : l2) W += 0.5 * term.matrix(x, t);
    return W;
  };
  return out;
}

Mat pullback_two_form(const TwoForm& beta, const Vec& phi_x, const Mat& jac,
                      double t) {
  return jac.transpose() * beta.matrix(phi_x, t) * jac;
}

OneForm lie_derivative_one_form(const OneForm& alpha, const VectorField& V) {
  check_dim(alpha.dim, V.dim, "lie_derivative_one_form");
  OneForm out;
  out.dim = alpha.dim;
  out.coeff = [alpha, V](const Vec& x, double t) -> Vec {
    return alpha.cjac(x, t) * V.value(x, t) +
           V.jac(x, t).transpose() * alpha.c(x, t);
  };
  return out;
}

namespace {

// Lie derivative whose input coefficient is itself a derived form: its
// Jacobian is differenced with the nested step.
OneForm lie_one_form_nested(const OneForm& alpha, const VectorField& V) {
  OneForm out;
  out.dim = alpha.dim;
  out.coeff = [alpha, V](const Vec& x, double t) -> Vec {
    return alpha.cjac(x, t, kFdStepNested) * V.value(x, t) +
           V.jac(x, t).transpose() * alpha.c(x, t);
  };
  return out;
}

}  // namespace

OneForm generator_one_form(const VectorField& drift,
                           const std::vector<VectorField>& diffusions,
                           const OneForm& alpha) {
  const OneForm l0 = lie_derivative_one_form(alpha, drift);
  std::vector<OneForm> l2;
  l2.reserve(diffusions.size());
  for (const auto& vi : diffusions)
    l2.push_back(lie_one_form_nested(lie_derivative_one_form(alpha, vi), vi));
  OneForm out;
  out.dim = alpha.dim;
  out.coeff = [l0, l2](const Vec& x, double t) -> Vec {
    Vec c = l0.c(x, t);
    for (const auto& term : l2) c += 0.5 * term.c(x, t);
    return c;
  };
  return out;
}

}  // namespace flowforms::geometry
