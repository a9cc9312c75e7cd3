#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flowforms/fieldlib.hpp"
#include "flowforms/geometry.hpp"
#include "flowforms/types.hpp"

namespace flowforms::circulation {
struct Loop;
}

namespace flowforms::symplectic {

/** Matrix-valued coefficient field (value is rows x cols at each point). */
struct MatrixField {
  int rows = 0;
  int cols = 0;
  std::function<Mat(const Vec&, double)> value;
  /** Optional analytic partial d(value)/dx_i. */
  std::function<Mat(const Vec&, double, int)> partial;

  Mat operator()(const Vec& x, double t) const { return value(x, t); }

  /** Partial derivative in direction i, centered differences as fallback. */
  Mat d(const Vec& x, double t, int i) const;

  static MatrixField constant(const Mat& m);
};

/**
 * The Ito system dq = H_p dt + A dW, dp = -H_q dt + B dW on R^{2d} with
 * d x k noise coefficient matrices A(x,t), B(x,t).
 */
struct HamiltonianDiffusion {
  int d = 0;  // degrees of freedom; the state dimension is 2d
  ScalarField H;
  MatrixField A, B;

  int k() const { return A.cols; }

  /**
   * Equivalent Stratonovich system: diffusion fields are the columns
   * (A_j, B_j) and the drift carries the Ito-to-Stratonovich correction
   * -1/2 sum_j (DV_j)V_j on top of J grad H.
   */
  DiffusionSpec stratonovich_spec() const;
};

/**
 * Phase-space lift of a velocity field: dq = p dt + sqrt(2 nu) dW,
 * dp = -grad P dt + sqrt(2 nu) Dw dW, with H = |p|^2/2 + P(q,t) taken from
 * the field's pressure. Started on the graph p = w(q,0) with w solving the
 * backward equation, the q-marginal follows dq = w dt + sqrt(2 nu) dW.
 */
HamiltonianDiffusion phase_lift_system(const fieldlib::VelocityField& w,
                                       double nu);

/**
 * The two obstruction sums for the Ito system above:
 *   Z1_i = sum_{r,j} (dA^r_j/dq_i B^r_j - dB^r_j/dq_i A^r_j),
 *   Z2_i = sum_{r,j} (dA^r_j/dp_i B^r_j - dB^r_j/dp_i A^r_j).
 * The diffusion is weakly symplectic iff both vanish identically.
 */
std::pair<Vec, Vec> z_vectors(const MatrixField& A, const MatrixField& B,
                              const Vec& x, double t);

/**
 * Drift making the diffusion with the given noise fields weakly symplectic:
 * V0 = J grad H + 1/2 sum_j J C(J V_j) V_j.
 */
VectorField corrected_drift(const ScalarField& H,
                            const std::vector<VectorField>& diffusions);

struct ClassifyOptions {
  double tol_strong = 1e-5;  // analytic first derivatives
  double tol_weak = 1e-3;    // generator uses nested finite differences
  double tol_z = 1e-5;
  /** When set, Z1/Z2 detail is computed and folded into the weak verdict. */
  const HamiltonianDiffusion* shape = nullptr;
};

struct SymplecticDiffusionReport {
  std::string verdict;  // "strongly" | "weakly" | "not"
  double max_strong = 0.0;     // max over fields/probes of |L_{Vi} omega|
  double generator_norm = 0.0; // max over probes of |A_V omega|
  bool has_z = false;
  double max_z = 0.0;
  std::vector<Vec> z1, z2;     // per probe, when shape was supplied
  std::vector<double> strong_per_probe;
  std::vector<double> generator_per_probe;
};

/**
 * Pointwise strong/weak classification over a probe set (a finite proxy for
 * the "for all x" statements).
 */
SymplecticDiffusionReport classify(const DiffusionSpec& spec,
                                   const std::vector<Vec>& probes,
                                   const ClassifyOptions& opt = {});

/**
 * Transports the loop with the deterministic (k=0) flow to time T and
 * integrates p·dq over the transported loop (tangents via the co-integrated
 * Jacobian). T = 0 evaluates the loop directly.
 */
double poincare_loop_integral(const DiffusionSpec& spec,
                              const circulation::Loop& loop, double T,
                              double h);

/** Bernoulli function H = P + |u|^2/2 of a catalog field. */
ScalarField bernoulli_function(const fieldlib::VelocityField& u);

struct LiouvilleReport {
  double max_transport = 0.0;  // max |L_X beta - beta| over probes
  double max_bernoulli = 0.0;  // max |X·grad H - |u|^2| over probes
  double min_rcond = 1.0;      // reciprocal condition number of C(u)
};

/**
 * Steady even-dimensional Euler transversality: with X = C(u)^{-1} u checks
 * L_X d-hat(alpha) = d-hat(alpha) and X·grad H = |u|^2 at the probes.
 * Throws NumericalError when C(u) is numerically singular at a probe.
 */
LiouvilleReport liouville_check(const fieldlib::VelocityField& u,
                                const ScalarField& H,
                                const std::vector<Vec>& probes, double t = 0.0);

}  // namespace flowforms::symplectic
