#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flowforms/types.hpp"

namespace flowforms::fieldlib {

/**
 * Structure-of-arrays field evaluation over many points at once (one point
 * per column of X). Used by the Monte Carlo kernels; `du[j]` holds du/dx_j
 * and `d2[i*n+j]` holds d2u/dx_i dx_j, each as an n-by-M matrix.
 */
struct BatchDerivs {
  Mat val;
  std::vector<Mat> du;
  std::vector<Mat> d2;

  void resize(int n, Eigen::Index m, int order);
};

/**
 * A velocity field with whatever analytic structure the catalog can supply.
 * Optional members may be empty; accessors fall back to finite differences
 * (or to zero for `u_t` of steady fields). `nu` tags the viscosity the field
 * solves Navier-Stokes for (0 = Euler).
 */
struct VelocityField {
  std::string name;
  int dim = 0;
  double nu = 0.0;
  bool divergence_free = true;
  bool steady = false;

  std::function<Vec(const Vec&, double)> value;
  std::function<Mat(const Vec&, double)> jacobian;
  std::function<Vec(const Vec&, double)> time_derivative;
  std::function<Vec(const Vec&, double)> laplacian;
  std::function<Mat(const Vec&, double)> laplacian_jacobian;
  std::function<Vec(const Vec&, double)> pressure_gradient;
  std::function<double(const Vec&, double)> pressure;
  std::function<Mat(const Vec&, double)> pressure_hessian;
  /** hessian(x,t)[i](k,j) = d2 u_k / dx_i dx_j */
  std::function<std::vector<Mat>(const Vec&, double)> hessian;
  /** Vectorized evaluator; order 0 = values, 1 = +jacobian, 2 = +hessian. */
  std::function<void(const Mat&, double, BatchDerivs&, int)> batch;

  Vec operator()(const Vec& x, double t) const { return value(x, t); }

  Mat jac(const Vec& x, double t) const;
  Vec u_t(const Vec& x, double t) const;
  Vec lap(const Vec& x, double t) const;
  std::vector<Mat> hess(const Vec& x, double t) const;

  /** Curl of u for dim == 3, computed from the Jacobian. */
  Vec vorticity3(const Vec& x, double t) const;

  VectorField as_vector_field() const;

  /** Batch evaluation, using `batch` when present, else a per-column loop. */
  void eval_batch(const Mat& X, double t, BatchDerivs& out, int order) const;
};

/** Radial profiles for the axisymmetric family. g = b(r)/r must extend to r=0. */
struct AxisymmetricProfiles {
  std::string name;
  std::function<double(double)> g, dg;  // swirl ratio b(r)/r and its derivative
  std::function<double(double)> c, dc;  // axial profile and derivative
};

VelocityField taylor_green_2d(double nu);
VelocityField embed_2d_in_3d(const VelocityField& f);
VelocityField taylor_green_3d(double nu);
VelocityField axisymmetric_steady(const AxisymmetricProfiles& p);
VelocityField rigid_rotation_3d();
VelocityField sine_swirl_3d();
VelocityField overtwisted_3d();
VelocityField double_rotation_4d();
/** Taylor-Green scaled by 1.1 (keeps the true pressure): NOT a solution. */
VelocityField corrupted_taylor_green(double nu);

/** Multiplies the velocity (and its derivatives) by s, keeping the pressure. */
VelocityField scale_field(const VelocityField& u, double s);

/** w(q,t) = -u(q, T-t); carries the matching backward pressure. */
VelocityField time_reversed(const VelocityField& u, double horizon);

/** Catalog lookup by CLI identifier. Fields with no viscosity knob ignore nu. */
VelocityField by_id(const std::string& id, double nu);
std::vector<std::string> catalog_ids();

/** Hamiltonian ODE x' = J grad H as a (k=0) DiffusionSpec. */
DiffusionSpec hamiltonian_system(const ScalarField& H);

struct ResidualReport {
  bool validated = false;  // false when no pressure gradient is available
  double max_momentum = 0.0;
  double max_divergence = 0.0;
  int probes = 0;
};

ResidualReport residual_navier_stokes(const VelocityField& u,
                                      const std::vector<Vec>& probes,
                                      const std::vector<double>& times);
ResidualReport residual_backward_ns(const VelocityField& w,
                                    const std::vector<Vec>& probes,
                                    const std::vector<double>& times);

}  // namespace flowforms::fieldlib
