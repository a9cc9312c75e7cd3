#pragma once

#include <limits>
#include <string>
#include <vector>

#include "flowforms/fieldlib.hpp"
#include "flowforms/geometry.hpp"
#include "flowforms/types.hpp"

namespace flowforms::contact {

/** Pointwise frame attached to alpha = u·dx at a contact point. */
struct ContactFrame {
  Vec u;              // form coefficient
  Vec xi;             // curl u (filled when n = 3)
  Vec reeb;           // R with alpha(R) = 1 and C(u) R = 0
  Mat kernel_basis;   // n x (n-1) orthonormal basis of ker alpha = u-perp
  double contact_scalar = 0.0;  // u·xi when n = 3
};

struct ContactConditionReport {
  std::vector<double> values;  // u·curl u per probe
  double min_abs = std::numeric_limits<double>::infinity();
  int degenerate = 0;  // probes failing the nondegeneracy threshold
};

/** Evaluates the 3d contact condition u·curl u != 0 over the probes. */
ContactConditionReport contact_condition_3d(const fieldlib::VelocityField& u,
                                            const std::vector<Vec>& probes,
                                            double t = 0.0);

/** Reeb field xi/(u·xi) of a 3d contact form. Throws on degeneracy. */
Vec reeb_3d(const fieldlib::VelocityField& u, const Vec& x, double t = 0.0);

/** Frame (u, xi, R, kernel basis) at a point; odd n, xi only for n = 3. */
ContactFrame frame_at(const fieldlib::VelocityField& u, const Vec& x,
                      double t = 0.0);

/**
 * Pseudo-inverse C'(x) of C(u): zero on span{R}, inverts C on complements of
 * the kernels, so that C' C = projection along R onto u-perp. Requires the
 * restricted system to be well conditioned (exactly one singular value of
 * C below threshold).
 */
Mat c_prime(const fieldlib::VelocityField& u, const Vec& x, double t = 0.0);

/**
 * Contact Hamiltonian field X_H = -C'(grad H - dH(R) u) + H R, the unique
 * field with alpha(X_H) = H and L_{X_H} alpha = dH(R) alpha. In 3d it
 * coincides with (u / u·xi) x grad H + H R.
 */
Vec contact_hamiltonian_field(const fieldlib::VelocityField& u,
                              const ScalarField& H, const Vec& x,
                              double t = 0.0);

/** The same as a VectorField closure (Jacobian by finite differences). */
VectorField contact_hamiltonian_vector_field(const fieldlib::VelocityField& u,
                                             const ScalarField& H);

struct ProportionalityReport {
  /** Fitted factor g with L_V alpha ~ g alpha, [field][probe]. */
  std::vector<std::vector<double>> g;
  /** Normalized residual |L_V alpha - g alpha| / |alpha|, [field][probe]. */
  std::vector<std::vector<double>> residual;
  double max_residual = 0.0;
  int skipped = 0;  // probes with |alpha| ~ 0, excluded from the fit
};

/**
 * Strong contact test: every field of the diffusion (drift included) must
 * satisfy L_V alpha = g_V alpha pointwise. The factor is fitted by
 * projection and the orthogonal remainder is reported.
 */
ProportionalityReport strong_contact_check(const DiffusionSpec& spec,
                                           const geometry::OneForm& alpha,
                                           const std::vector<Vec>& probes,
                                           double t = 0.0);

struct WeakContactReport {
  std::vector<double> f;  // fitted factor per probe
  std::vector<double> residual;
  double max_residual = 0.0;
  int skipped = 0;
};

/**
 * Weak contact test: the full generator applied to alpha must be pointwise
 * proportional to alpha; reports the fitted factor and normalized residual.
 */
WeakContactReport weak_contact_residual(const DiffusionSpec& spec,
                                        const geometry::OneForm& alpha,
                                        const std::vector<Vec>& probes,
                                        double t = 0.0);

}  // namespace flowforms::contact
