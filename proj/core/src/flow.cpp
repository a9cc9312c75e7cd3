#include "flowforms/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowforms/util.hpp"

namespace flowforms::flow {

namespace {

struct StepPlan {
  std::vector<int> record_at;    // step indices, strictly increasing
  std::vector<double> record_t;  // checkpoint times as requested
  int total = 0;
};

StepPlan plan_steps(double t0, const IntegratorOptions& opt) {
  if (!(opt.h > 0.0)) throw ConfigError("step size must be positive");
  if (opt.checkpoints.empty())
    throw ConfigError("at least one checkpoint is required");
  StepPlan plan;
  long long prev = 0;
  for (double c : opt.checkpoints) {
    const long long j = std::llround((c - t0) / opt.h);
    const double snapped = t0 + static_cast<double>(j) * opt.h;
    if (j < 1 || std::abs(snapped - c) > 1e-9 * std::max(1.0, std::abs(c)))
      throw ConfigError("checkpoint " + std::to_string(c) +
                        " is not on the step grid");
    if (j <= prev) throw ConfigError("checkpoints must be strictly increasing");
    plan.record_at.push_back(static_cast<int>(j));
    plan.record_t.push_back(c);
    prev = j;
  }
  plan.total = static_cast<int>(prev);
  return plan;
}

void validate_spec(const DiffusionSpec& spec, const Vec& x0) {
  if (spec.dim <= 0) throw ConfigError("diffusion dimension must be positive");
  if (!spec.drift.value) throw ConfigError("drift has no value function");
  if (spec.drift.dim != spec.dim)
    throw ConfigError("drift dimension mismatch");
  for (const auto& f : spec.fields)
    if (f.dim != spec.dim || !f.value)
      throw ConfigError("diffusion field dimension mismatch");
  if (x0.size() != spec.dim)
    throw ConfigError("initial state dimension mismatch");
}

// Shared driver: records checkpoints, applies the step/state guards, invokes
// the observer. `step(s, t, x, L, xn, Ln)` advances one step of size h.
template <class Stepper>
FlowSample run_integration(const DiffusionSpec& spec, const Vec& x0, double t0,
                           const IntegratorOptions& opt, Stepper&& step) {
  validate_spec(spec, x0);
  const StepPlan plan = plan_steps(t0, opt);
  const int n = spec.dim;

  FlowSample out;
  out.times.reserve(plan.record_at.size() + 1);
  out.states.reserve(plan.record_at.size() + 1);
  out.jacobians.reserve(plan.record_at.size() + 1);
  out.times.push_back(t0);
  out.states.push_back(x0);
  out.jacobians.push_back(Mat::Identity(n, n));

  Vec x = x0, xn(n);
  Mat L = Mat::Identity(n, n), Ln(n, n);
  if (opt.observer) opt.observer(0, t0, x, L);

  std::size_t next = 0;
  for (int s = 0; s < plan.total; ++s) {
    const double t = t0 + s * opt.h;
    step(s, t, x, L, xn, Ln);
    if (!xn.allFinite() || !Ln.allFinite()) {
      out.ok = false;
      out.failure = "non-finite state";
      return out;
    }
    if (inf_norm(xn - x) > opt.max_step_norm) {
      out.ok = false;
      out.failure = "step cap exceeded";
      return out;
    }
    if (inf_norm(xn) > opt.max_state_norm) {
      out.ok = false;
      out.failure = "state norm cap exceeded";
      return out;
    }
    x.swap(xn);
    L.swap(Ln);
    if (opt.observer) opt.observer(s + 1, t0 + (s + 1) * opt.h, x, L);
    if (next < plan.record_at.size() &&
        s + 1 == plan.record_at[next]) {
      out.times.push_back(plan.record_t[next]);
      out.states.push_back(x);
      out.jacobians.push_back(L);
      ++next;
    }
  }
  return out;
}

}  // namespace

BrownianPath realize_brownian(const rng::NoiseStream& noise, int k, int nsteps,
                              double h) {
  if (k < 1 || nsteps < 0) throw ConfigError("realize_brownian: bad shape");
  BrownianPath path;
  path.h = h;
  path.increments.resize(k, nsteps);
  const double root_h = std::sqrt(h);
  Vec buf(k);
  for (int s = 0; s < nsteps; ++s) {
    noise.normals(s, buf);
    path.increments.col(s) = root_h * buf;
  }
  return path;
}

FlowSample integrate_ode(const DiffusionSpec& spec, const Vec& x0, double t0,
                         const IntegratorOptions& opt) {
  if (spec.k() != 0)
    throw ConfigError("integrate_ode requires a driftless-noise (k=0) system");
  const double h = opt.h;
  const auto& V = spec.drift;
  Vec k1, k2, k3, k4;
  Mat K1, K2, K3, K4;
  return run_integration(
      spec, x0, t0, opt,
      [&](int, double t, const Vec& x, const Mat& L, Vec& xn, Mat& Ln) {
        k1 = V.value(x, t);
        K1 = V.jac(x, t) * L;
        const double tm = t + 0.5 * h;
        Vec xm = x + 0.5 * h * k1;
        k2 = V.value(xm, tm);
        K2 = V.jac(xm, tm) * (L + 0.5 * h * K1);
        xm = x + 0.5 * h * k2;
        k3 = V.value(xm, tm);
        K3 = V.jac(xm, tm) * (L + 0.5 * h * K2);
        xm = x + h * k3;
        k4 = V.value(xm, t + h);
        K4 = V.jac(xm, t + h) * (L + h * K3);
        xn = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        Ln = L + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
      });
}

FlowSample integrate_sde(const DiffusionSpec& spec, const Vec& x0, double t0,
                         const IntegratorOptions& opt,
                         const rng::NoiseStream& noise) {
  const double h = opt.h;
  const double root_h = std::sqrt(h);
  const int k = spec.k();
  const auto& V0 = spec.drift;

  Vec xi(std::max(k, 1)), xp, drift0, drift1;
  Mat Lp, slope0, slope1;
  FlowSample out = run_integration(
      spec, x0, t0, opt,
      [&](int s, double t, const Vec& x, const Mat& L, Vec& xn, Mat& Ln) {
        if (k > 0) noise.normals(s, xi);
        // Predictor (Euler on the augmented system).
        drift0 = h * V0.value(x, t);
        slope0 = h * V0.jac(x, t);
        for (int i = 0; i < k; ++i) {
          const double dw = root_h * xi(i);
          drift0 += dw * spec.fields[i].value(x, t);
          slope0 += dw * spec.fields[i].jac(x, t);
        }
        xp = x + drift0;
        Lp = L + slope0 * L;
        // Corrector: average the field evaluations at both endpoints.
        const double t1 = t + h;
        drift1 = h * V0.value(xp, t1);
        slope1 = h * V0.jac(xp, t1);
        for (int i = 0; i < k; ++i) {
          const double dw = root_h * xi(i);
          drift1 += dw * spec.fields[i].value(xp, t1);
          slope1 += dw * spec.fields[i].jac(xp, t1);
        }
        xn = x + 0.5 * (drift0 + drift1);
        Ln = L + 0.5 * (slope0 * L + slope1 * Lp);
      });
  out.sample_index = noise.sample_index();
  return out;
}

DiffusionSpec reversed_flow_spec(const fieldlib::VelocityField& u,
                                 double horizon) {
  if (!(horizon > 0.0))
    throw ConfigError("reversed_flow_spec: horizon must be positive");
  const auto w = fieldlib::time_reversed(u, horizon);
  DiffusionSpec spec;
  spec.dim = u.dim;
  spec.drift = w.as_vector_field();
  if (u.nu > 0.0) {
    const double amp = std::sqrt(2.0 * u.nu);
    const int n = u.dim;
    const Mat zero = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      Vec e = Vec::Zero(n);
      e(i) = amp;
      VectorField f;
      f.dim = n;
      f.value = [e](const Vec&, double) { return e; };
      f.jacobian = [zero](const Vec&, double) { return zero; };
      spec.fields.push_back(std::move(f));
    }
  }
  return spec;
}

Vec EnsembleResult::mean() const {
  int count = 0;
  Vec acc = Vec::Zero(values.rows());
  for (Eigen::Index i = 0; i < values.cols(); ++i) {
    if (!ok[static_cast<std::size_t>(i)]) continue;
    acc += values.col(i);
    ++count;
  }
  if (count == 0) throw NumericalError("ensemble has no successful samples");
  return acc / count;
}

EnsembleResult ensemble(
    const DiffusionSpec& spec, const Vec& x0, int n_samples, double t0,
    const IntegratorOptions& opt, std::uint64_t master_seed,
    const std::function<Vec(const FlowSample&)>& observable) {
  if (n_samples < 1) throw ConfigError("ensemble needs at least one sample");
  if (!observable) throw ConfigError("ensemble needs an observable");
  IntegratorOptions local = opt;
  local.observer = nullptr;  // a shared observer would race across workers

  std::vector<Vec> slots(n_samples);
  std::vector<std::uint8_t> ok(n_samples, 0);
  std::vector<std::string> reasons(n_samples);
  util::parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t lo,
                                                              std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      rng::NoiseStream noise(master_seed, i);
      FlowSample fs = integrate_sde(spec, x0, t0, local, noise);
      if (fs.ok) {
        slots[i] = observable(fs);
        ok[i] = 1;
      } else {
        reasons[i] = fs.failure;
      }
    }
  });

  EnsembleResult res;
  res.requested = n_samples;
  res.ok = std::move(ok);
  Eigen::Index m = -1;
  for (int i = 0; i < n_samples; ++i)
    if (res.ok[i]) {
      m = slots[i].size();
      break;
    }
  if (m < 0) throw NumericalError("ensemble: every sample failed");
  res.values.setConstant(m, n_samples,
                         std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < n_samples; ++i) {
    if (!res.ok[i]) {
      ++res.discarded;
      if (std::find(res.failures.begin(), res.failures.end(), reasons[i]) ==
          res.failures.end())
        res.failures.push_back(reasons[i]);
      continue;
    }
    if (slots[i].size() != m)
      throw ConfigError("observable returned inconsistent sizes");
    res.values.col(i) = slots[i];
  }
  if (100LL * res.discarded > static_cast<long long>(n_samples))
    throw NumericalError("ensemble blow-up fraction exceeds 1%: " +
                         std::to_string(res.discarded) + "/" +
                         std::to_string(n_samples));
  return res;
}

}  // namespace flowforms::flow
