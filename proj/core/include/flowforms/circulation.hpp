#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flowforms/fieldlib.hpp"
#include "flowforms/geometry.hpp"
#include "flowforms/types.hpp"

namespace flowforms::circulation {

/** Closed curve [0,1] -> R^n with tangent; quadrature on m midpoints. */
struct Loop {
  int dim = 0;
  int nodes = 256;
  std::function<Vec(double)> gamma;
  std::function<Vec(double)> tangent;

  /** Throws ConfigError unless gamma(0) = gamma(1) within 1e-12. */
  void validate() const;

  /** Quadrature parameters (j + 1/2)/nodes. */
  std::vector<double> parameters() const;

  static Loop circle(const Vec& center, const Vec& e1, const Vec& e2,
                     double radius, int nodes = 256);
  static Loop polygon(const std::vector<Vec>& vertices, int nodes_per_edge);
  static Loop from_parametrization(int dim,
                                   std::function<Vec(double)> gamma,
                                   std::function<Vec(double)> tangent,
                                   int nodes = 256);
};

/** Parametrized surface [0,1]^2 -> R^n with tensor midpoint quadrature. */
struct Surface {
  int dim = 0;
  int grid1 = 32;
  int grid2 = 32;
  std::function<Vec(double, double)> tau;
  std::function<Vec(double, double)> d1, d2;  // partials in theta1, theta2

  static Surface planar_rectangle(const Vec& corner, const Vec& edge1,
                                  const Vec& edge2, int grid1 = 32,
                                  int grid2 = 32);
};

/** Composite-midpoint circulation of u over the loop at time t. */
double loop_circulation(const fieldlib::VelocityField& u, const Loop& loop,
                        double t);

struct KelvinReport {
  std::vector<double> times;   // 0 and the checkpoints
  std::vector<double> values;  // circulation at each time
  double drift = 0.0;          // max |I(t) - I(0)|
};

/**
 * Transports the loop (nodes and tangents) with the deterministic flow of a
 * steady Euler field and evaluates the circulation at quarter-horizon
 * checkpoints; reports the worst drift from the initial value.
 */
KelvinReport kelvin_check(const fieldlib::VelocityField& u, const Loop& loop,
                          double T, double h);

struct VorticityTransportReport {
  std::vector<double> errors;  // |Lambda xi0(x) - xi(Q_T(x), T)| per point
  double max_error = 0.0;
};

/** Cauchy vorticity transport for steady 3d Euler fields. */
VorticityTransportReport vorticity_transport_check(
    const fieldlib::VelocityField& u, const std::vector<Vec>& points, double T,
    double h);

/** Tensor-midpoint integral of a 2-form over the surface at time t. */
double surface_integral(const geometry::TwoForm& beta, const Surface& S,
                        double t);

/**
 * Integral of the pulled-back form: sum of w_ij (W(x_ij,t) J_ij a1)·(J_ij a2)
 * over surface nodes, where (x_ij, J_ij) is the transported state/Jacobian of
 * node (i,j) (row-major, theta1 major) and a1, a2 the surface partials.
 */
double pulled_back_surface_integral(const geometry::TwoForm& beta,
                                    const Surface& S,
                                    const std::vector<Vec>& node_states,
                                    const std::vector<Mat>& node_jacobians,
                                    double t);

struct CheckpointStat {
  double t = 0.0;
  double mean = 0.0;
  double se = 0.0;
  double z_vs_start = 0.0;
};

struct MartingaleReport {
  std::string field_id;
  double nu = 0.0, T = 0.0, h = 0.0;
  int samples = 0;
  int discarded = 0;
  std::uint64_t seed = 0;
  int grid1 = 0, grid2 = 0;

  double z0 = 0.0;                 // deterministic t=0 surface integral
  double resolution_change = 0.0;  // relative change under grid doubling
  std::vector<CheckpointStat> checkpoints;

  /** Paired z for E[z_t - z_s] over all recorded time pairs (incl. t=0). */
  std::vector<double> pair_times;
  Mat pair_z;
  double max_abs_pair_z = 0.0;

  double realized_qv_mean = 0.0, realized_qv_se = 0.0;
  double formula_qv_mean = 0.0, formula_qv_se = 0.0;
  double qv_ratio = 0.0;  // realized / formula (means)

  double energy_lhs = 0.0, energy_lhs_se = 0.0;  // E[formula QV]
  double energy_rhs = 0.0, energy_rhs_se = 0.0;  // E[z_T^2]
  double energy_diff_se = 0.0;  // SE of the paired difference z_T^2 - QV
  double ez2_identity_z = 0.0;  // z-score of E z_T^2 - z_0^2 - E QV

  double max_det_drift = 0.0;  // max |det Lambda - 1| over nodes/steps
};

struct Theorem11Config {
  double T = 1.0;
  double h = 2e-3;
  int samples = 20000;
  std::vector<double> checkpoints = {0.25, 0.5, 0.75, 1.0};
  Surface surface;  // default: unit square at the origin in the q-plane
  bool has_surface = false;
  std::uint64_t seed = 0x7f0f0a57u;
  int workers = 0;
  bool validate = true;           // backward residual gate
  double resolution_tol = 1e-4;   // audit threshold (relative)
  double discard_budget = 0.01;   // failed-sample tolerance
};

/**
 * Monte Carlo run of the reversed-flow surface-pullback process
 * z_t = integral over Theta of (Q-bar_t^* d-hat alpha-bar_t): per-checkpoint
 * means and paired z-statistics, realized and formula quadratic variation,
 * and the energy pair E[QV] vs E[z_T^2]. All surface nodes of one sample
 * share one Brownian path; samples are independent.
 */
MartingaleReport theorem11_experiment(const fieldlib::VelocityField& u,
                                      const Theorem11Config& cfg);

struct EnergyVerdict {
  bool bound_ok = false;     // LHS <= RHS + 3 SE (paired)
  bool identity_ok = false;  // |E z_T^2 - z_0^2 - E QV| <= 3 SE
  double bound_margin = 0.0; // RHS + 3 SE - LHS
  double identity_z = 0.0;
};

EnergyVerdict energy_bound_check(const MartingaleReport& report);

struct ConstantinIyerConfig {
  double T = 0.5;
  double h = 2.5e-3;
  int samples = 10000;
  std::vector<Vec> points;
  std::vector<double> checkpoints;  // empty = {T}
  std::uint64_t seed = 0xc11ce5edu;
  int workers = 0;
  double cond_limit = 1e8;  // Jacobian condition cutoff per sample
  double discard_budget = 0.01;
};

struct ConstantinIyerPoint {
  Vec x;
  Vec reference;                 // curl u at (x, T)
  std::vector<double> times;
  std::vector<Vec> mean;         // E[(D B-bar_t)^{-1} xi^{T-t}(B-bar_t)] per time
  std::vector<Vec> se;
  std::vector<Vec> z;            // componentwise (mean - reference)/se
  int discarded = 0;
};

struct ConstantinIyerReport {
  std::string field_id;
  double nu = 0.0, T = 0.0, h = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<ConstantinIyerPoint> points;
  double max_abs_z = 0.0;        // over points/components at t = T
  double max_error = 0.0;        // |mean - reference|_inf at t = T
};

/** Vorticity reconstruction E[Lambda^{-1} xi^0(x_t)] along the reversed flow. */
ConstantinIyerReport constantin_iyer_estimate(const fieldlib::VelocityField& u,
                                              const ConstantinIyerConfig& cfg);

}  // namespace flowforms::circulation
