#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flowforms/fieldlib.hpp"
#include "flowforms/rng.hpp"
#include "flowforms/types.hpp"

namespace flowforms::flow {

/** Called at t0 (step 0) and after every accepted step with the step count. */
using StepObserver =
    std::function<void(int step, double t, const Vec& x, const Mat& jac)>;

struct IntegratorOptions {
  double h = 1e-3;
  /**
   * Times at which states/Jacobians are recorded. Strictly increasing, all
   * > t0, and each must sit on the step grid t0 + j*h (within 1e-9); the
   * final checkpoint is the integration horizon.
   */
  std::vector<double> checkpoints;
  double max_step_norm = 100.0;   // per-step displacement cap
  double max_state_norm = 1e6;    // blow-up guard
  StepObserver observer;
};

struct FlowSample {
  bool ok = true;
  std::string failure;          // empty when ok
  std::uint64_t sample_index = 0;
  std::vector<double> times;    // t0 followed by the recorded checkpoints
  std::vector<Vec> states;      // x at times[j]
  std::vector<Mat> jacobians;   // flow derivative at times[j]; identity at t0
};

/** Realized Brownian increments: increments(i, s) = dW^i over step s. */
struct BrownianPath {
  double h = 0.0;
  Mat increments;
};

/**
 * Draws the same increments integrate_sde consumes: component i of step s is
 * sqrt(h) * noise.normal(s, i).
 */
BrownianPath realize_brownian(const rng::NoiseStream& noise, int k, int nsteps,
                              double h);

/** Classical RK4 on the joint (x, Lambda) system; requires k = 0. */
FlowSample integrate_ode(const DiffusionSpec& spec, const Vec& x0, double t0,
                         const IntegratorOptions& opt);

/**
 * Stratonovich Heun predictor-corrector on the augmented (x, Lambda) system.
 * Weak order 1; for k = 0 it is the deterministic Heun (order 2) scheme, and
 * constant diffusion fields are integrated exactly per step.
 */
FlowSample integrate_sde(const DiffusionSpec& spec, const Vec& x0, double t0,
                         const IntegratorOptions& opt,
                         const rng::NoiseStream& noise);

/**
 * Diffusion whose flow is distributed like the inverse-flow composition
 * B_t = Q_{T-t} o Q_T^{-1} of the field's own flow Q: drift w(q,t) =
 * -u(q, T-t) plus k = dim additive noise fields sqrt(2 nu) e_i (k = 0 when
 * nu = 0). Fresh noise, i.e. the identification holds in distribution.
 */
DiffusionSpec reversed_flow_spec(const fieldlib::VelocityField& u,
                                 double horizon);

struct EnsembleResult {
  int requested = 0;
  int discarded = 0;                  // failed samples (blow-up / step cap)
  std::vector<std::uint8_t> ok;       // per sample
  Mat values;                         // observable per sample, one column each
  std::vector<std::string> failures;  // distinct failure reasons observed

  /** Mean over successful columns, summed in sample order. */
  Vec mean() const;
};

/**
 * Runs n_samples independent copies with sample_index 0..n-1 drawn from
 * master_seed, mapping each successful FlowSample through `observable` (fixed
 * output size). Sample values are bit-identical regardless of worker count.
 * Throws NumericalError when more than 1% of samples fail.
 */
EnsembleResult ensemble(const DiffusionSpec& spec, const Vec& x0,
                        int n_samples, double t0, const IntegratorOptions& opt,
                        std::uint64_t master_seed,
                        const std::function<Vec(const FlowSample&)>& observable);

}  // namespace flowforms::flow
