#pragma once

#include <vector>

#include "flowforms/types.hpp"

namespace flowforms::geometry {

/** 1-form alpha = c(x,t)·dx given through its coefficient field. */
struct OneForm {
  int dim = 0;
  std::function<Vec(const Vec&, double)> coeff;
  std::function<Mat(const Vec&, double)> coeff_jacobian;  // optional

  Vec c(const Vec& x, double t) const { return coeff(x, t); }

  Mat cjac(const Vec& x, double t, double h = 0.0) const {
    if (coeff_jacobian) return coeff_jacobian(x, t);
    return VectorField::fd_jacobian(coeff, x, t, h);
  }

  double eval(const Vec& x, double t, const Vec& v) const {
    return coeff(x, t).dot(v);
  }

  bool has_analytic_jacobian() const { return static_cast<bool>(coeff_jacobian); }
};

/**
 * 2-form represented by its antisymmetric coefficient matrix W(x,t), acting as
 * beta(x; v1, v2) = W(x,t) v1 · v2. `matrix_dx`, when present, returns the
 * list of coordinate derivatives [dW/dx_j] and enables analytic Lie
 * derivatives. Only closed 2-forms are supported by the calculus below;
 * factory functions set `closed` accordingly.
 */
struct TwoForm {
  int dim = 0;
  bool closed = false;
  std::function<Mat(const Vec&, double)> matrix;
  std::function<std::vector<Mat>(const Vec&, double)> matrix_dx;  // optional

  Mat W(const Vec& x, double t) const { return matrix(x, t); }

  double eval(const Vec& x, double t, const Vec& v1, const Vec& v2) const {
    return (matrix(x, t) * v1).dot(v2);
  }
};

/** Antisymmetrized gradient: Du - Du^T from a Jacobian matrix. */
inline Mat c_matrix(const Mat& jacobian) {
  return jacobian - jacobian.transpose();
}

/** C(u)(x,t) = Du - Du^T for the coefficient field of a 1-form. */
Mat c_operator(const OneForm& u, const Vec& x, double t);

/** Matrix J = [[0, I],[-I, 0]] for the ordering x = (q, p), n = 2d. */
Mat standard_symplectic_matrix(int n);

/** Constant standard symplectic form omega-bar with matrix J. */
TwoForm standard_symplectic(int n);

/** The 1-form u·dx of a vector field (coefficients and Jacobian shared). */
OneForm one_form(const VectorField& u);

/** d-hat alpha: the closed 2-form with coefficient matrix C(u)(x,t). */
TwoForm exterior_derivative(const OneForm& u);

/** Contraction i_V beta: 1-form with coefficient W(x,t) V(x,t). */
VectorField contraction_field(const TwoForm& beta, const VectorField& V);
OneForm contraction(const TwoForm& beta, const VectorField& V);

/**
 * Lie derivative of a closed 2-form along V via Cartan's formula, which
 * reduces to d-hat(i_V beta). Coefficient derivatives use the analytic chain
 * rule when both beta.matrix_dx and V.jacobian exist, otherwise central
 * differences with step fd_h (0 = the first-derivative policy step).
 */
TwoForm lie_derivative_two_form(const TwoForm& beta, const VectorField& V,
                                double fd_h = 0.0);

/**
 * Diffusion generator on closed 2-forms: L_{V0} + (1/2) sum_i L_{Vi}^2.
 * The inner Lie derivative is analytic when possible; the outer one uses the
 * nested differencing step.
 */
TwoForm generator_two_form(const VectorField& drift,
                           const std::vector<VectorField>& diffusions,
                           const TwoForm& beta);

/**
 * Lie derivative of a 1-form: coefficient (Da)V + (DV)^T a, the Cartan sum
 * grad(a·V) + C(a)V. First derivatives are analytic when supplied; the
 * result carries no analytic Jacobian (nesting differentiates it with the
 * nested step).
 */
OneForm lie_derivative_one_form(const OneForm& alpha, const VectorField& V);

/** Generator on 1-forms: L_{V0} alpha + (1/2) sum_i L_{Vi}(L_{Vi} alpha). */
OneForm generator_one_form(const VectorField& drift,
                           const std::vector<VectorField>& diffusions,
                           const OneForm& alpha);

/** Pullback coefficient matrix jac^T W(phi_x, t) jac. */
Mat pullback_two_form(const TwoForm& beta, const Vec& phi_x, const Mat& jac,
                      double t);

}  // namespace flowforms::geometry
