#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace flowforms {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Arr = Eigen::ArrayXd;

/** Raised when an input configuration is malformed or out of schema. */
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/** Raised when a computation degenerates numerically (blow-up, singular frame...). */
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/** Central-difference step for first derivatives at x. */
inline double fd_step(const Vec& x) {
  return std::max(1e-5, 1e-5 * x.norm());
}

/** Step used when differencing quantities that are themselves differenced. */
inline constexpr double kFdStepNested = 1e-4;

/** Max-abs entry of a matrix. */
inline double inf_norm(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/**
 * Time-dependent vector field on R^n. `jacobian` may be left empty, in which
 * case jac() falls back to central finite differences of `value`.
 */
struct VectorField {
  int dim = 0;
  std::function<Vec(const Vec&, double)> value;
  std::function<Mat(const Vec&, double)> jacobian;

  Vec operator()(const Vec& x, double t) const { return value(x, t); }

  Mat jac(const Vec& x, double t) const {
    if (jacobian) return jacobian(x, t);
    return fd_jacobian(value, x, t);
  }

  bool has_analytic_jacobian() const { return static_cast<bool>(jacobian); }

  static Mat fd_jacobian(const std::function<Vec(const Vec&, double)>& f,
                         const Vec& x, double t, double h = 0.0) {
    const int n = static_cast<int>(x.size());
    if (h <= 0.0) h = fd_step(x);
    Mat J(f(x, t).size(), n);
    Vec xp = x, xm = x;
    for (int j = 0; j < n; ++j) {
      xp(j) = x(j) + h;
      xm(j) = x(j) - h;
      J.col(j) = (f(xp, t) - f(xm, t)) / (2.0 * h);
      xp(j) = x(j);
      xm(j) = x(j);
    }
    return J;
  }
};

/**
 * Stratonovich diffusion dx = V0 dt + sum_i Vi o dW^i. `fields` may be empty,
 * in which case the spec describes an ODE.
 */
struct DiffusionSpec {
  int dim = 0;
  VectorField drift;
  std::vector<VectorField> fields;

  int k() const { return static_cast<int>(fields.size()); }
};

/**
 * Scalar field with optional analytic gradient/Hessian; finite-difference
 * fallbacks follow the same stepping policy as VectorField.
 */
struct ScalarField {
  int dim = 0;
  std::function<double(const Vec&, double)> value;
  std::function<Vec(const Vec&, double)> gradient;
  std::function<Mat(const Vec&, double)> hessian;

  double operator()(const Vec& x, double t) const { return value(x, t); }

  Vec grad(const Vec& x, double t) const {
    if (gradient) return gradient(x, t);
    const int n = static_cast<int>(x.size());
    const double h = fd_step(x);
    Vec g(n), xp = x, xm = x;
    for (int j = 0; j < n; ++j) {
      xp(j) = x(j) + h;
      xm(j) = x(j) - h;
      g(j) = (value(xp, t) - value(xm, t)) / (2.0 * h);
      xp(j) = x(j);
      xm(j) = x(j);
    }
    return g;
  }

  Mat hess(const Vec& x, double t) const {
    if (hessian) return hessian(x, t);
    const int n = static_cast<int>(x.size());
    const double h = gradient ? fd_step(x) : kFdStepNested;
    Mat H(n, n);
    Vec xp = x, xm = x;
    for (int j = 0; j < n; ++j) {
      xp(j) = x(j) + h;
      xm(j) = x(j) - h;
      H.col(j) = (grad(xp, t) - grad(xm, t)) / (2.0 * h);
      xp(j) = x(j);
      xm(j) = x(j);
    }
    return 0.5 * (H + H.transpose());
  }
};

}  // namespace flowforms
