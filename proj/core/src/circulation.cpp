#include "flowforms/circulation.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>

#include "flowforms/flow.hpp"
#include "flowforms/rng.hpp"
#include "flowforms/util.hpp"

namespace flowforms::circulation {

void Loop::validate() const {
  if (dim <= 0 || nodes <= 0 || !gamma || !tangent)
    throw ConfigError("loop: incomplete definition");
  if ((gamma(0.0) - gamma(1.0)).norm() > 1e-12)
    throw ConfigError("loop: parametrization is not closed");
}

std::vector<double> Loop::parameters() const {
  std::vector<double> s(nodes);
  for (int j = 0; j < nodes; ++j) s[j] = (j + 0.5) / nodes;
  return s;
}

Loop Loop::circle(const Vec& center, const Vec& e1, const Vec& e2,
                  double radius, int nodes) {
  Loop l;
  l.dim = static_cast<int>(center.size());
  l.nodes = nodes;
  const double tau = 2.0 * M_PI;
  l.gamma = [center, e1, e2, radius, tau](double s) {
    return (center + radius * (std::cos(tau * s) * e1 + std::sin(tau * s) * e2))
        .eval();
  };
  l.tangent = [e1, e2, radius, tau](double s) {
    return (radius * tau * (-std::sin(tau * s) * e1 + std::cos(tau * s) * e2))
        .eval();
  };
  return l;
}

Loop Loop::polygon(const std::vector<Vec>& vertices, int nodes_per_edge) {
  if (vertices.size() < 3) throw ConfigError("polygon: need >= 3 vertices");
  const int ne = static_cast<int>(vertices.size());
  Loop l;
  l.dim = static_cast<int>(vertices.front().size());
  l.nodes = ne * nodes_per_edge;
  l.gamma = [vertices, ne](double s) {
    const double e = s * ne;
    int i = std::min(static_cast<int>(e), ne - 1);
    const double f = e - i;
    const Vec& a = vertices[i];
    const Vec& b = vertices[(i + 1) % ne];
    return (a + f * (b - a)).eval();
  };
  l.tangent = [vertices, ne](double s) {
    const double e = s * ne;
    int i = std::min(static_cast<int>(e), ne - 1);
    const Vec& a = vertices[i];
    const Vec& b = vertices[(i + 1) % ne];
    return (static_cast<double>(ne) * (b - a)).eval();
  };
  return l;
}

Loop Loop::from_parametrization(int dim, std::function<Vec(double)> gamma,
                                std::function<Vec(double)> tangent, int nodes) {
  Loop l;
  l.dim = dim;
  l.nodes = nodes;
  l.gamma = std::move(gamma);
  l.tangent = std::move(tangent);
  l.validate();
  return l;
}

Surface Surface::planar_rectangle(const Vec& corner, const Vec& edge1,
                                  const Vec& edge2, int grid1, int grid2) {
  Surface s;
  s.dim = static_cast<int>(corner.size());
  s.grid1 = grid1;
  s.grid2 = grid2;
  s.tau = [corner, edge1, edge2](double a, double b) {
    return (corner + a * edge1 + b * edge2).eval();
  };
  s.d1 = [edge1](double, double) { return edge1; };
  s.d2 = [edge2](double, double) { return edge2; };
  return s;
}

double loop_circulation(const fieldlib::VelocityField& u, const Loop& loop,
                        double t) {
  if (u.dim != loop.dim) throw ConfigError("loop_circulation: dim mismatch");
  loop.validate();
  double acc = 0.0;
  for (double s : loop.parameters())
    acc += u.value(loop.gamma(s), t).dot(loop.tangent(s));
  return acc / loop.nodes;
}

KelvinReport kelvin_check(const fieldlib::VelocityField& u, const Loop& loop,
                          double T, double h) {
  loop.validate();
  KelvinReport rep;
  rep.times.push_back(0.0);
  rep.values.push_back(loop_circulation(u, loop, 0.0));
  if (T <= 0.0) return rep;

  DiffusionSpec spec;
  spec.dim = u.dim;
  spec.drift = u.as_vector_field();

  flow::IntegratorOptions opt;
  opt.h = h;
  for (int c = 1; c <= 4; ++c) opt.checkpoints.push_back(T * c / 4.0);

  const auto params = loop.parameters();
  std::vector<double> acc(4, 0.0);
  for (double s : params) {
    const flow::FlowSample fs =
        flow::integrate_ode(spec, loop.gamma(s), 0.0, opt);
    const Vec tau0 = loop.tangent(s);
    for (int c = 0; c < 4; ++c) {
      const Vec& x = fs.states[c + 1];
      acc[c] += u.value(x, fs.times[c + 1]).dot(fs.jacobians[c + 1] * tau0);
    }
  }
  for (int c = 0; c < 4; ++c) {
    rep.times.push_back(opt.checkpoints[c]);
    rep.values.push_back(acc[c] / loop.nodes);
    rep.drift = std::max(rep.drift, std::abs(rep.values.back() - rep.values[0]));
  }
  return rep;
}

VorticityTransportReport vorticity_transport_check(
    const fieldlib::VelocityField& u, const std::vector<Vec>& points, double T,
    double h) {
  if (u.dim != 3)
    throw ConfigError("vorticity_transport_check: dim must be 3");
  VorticityTransportReport rep;

  DiffusionSpec spec;
  spec.dim = 3;
  spec.drift = u.as_vector_field();
  flow::IntegratorOptions opt;
  opt.h = h;
  if (T > 0.0) opt.checkpoints = {T};

  for (const Vec& x : points) {
    double err = 0.0;
    if (T > 0.0) {
      const flow::FlowSample fs = flow::integrate_ode(spec, x, 0.0, opt);
      const Vec lhs = fs.jacobians.back() * u.vorticity3(x, 0.0);
      err = (lhs - u.vorticity3(fs.states.back(), T)).norm();
    }
    rep.errors.push_back(err);
    rep.max_error = std::max(rep.max_error, err);
  }
  return rep;
}

double surface_integral(const geometry::TwoForm& beta, const Surface& S,
                        double t) {
  double acc = 0.0;
  for (int i = 0; i < S.grid1; ++i)
    for (int j = 0; j < S.grid2; ++j) {
      const double a = (i + 0.5) / S.grid1, b = (j + 0.5) / S.grid2;
      acc += beta.eval(S.tau(a, b), t, S.d1(a, b), S.d2(a, b));
    }
  return acc / (S.grid1 * S.grid2);
}

double pulled_back_surface_integral(const geometry::TwoForm& beta,
                                    const Surface& S,
                                    const std::vector<Vec>& node_states,
                                    const std::vector<Mat>& node_jacobians,
                                    double t) {
  const std::size_t m =
      static_cast<std::size_t>(S.grid1) * static_cast<std::size_t>(S.grid2);
  if (node_states.size() != m || node_jacobians.size() != m)
    throw ConfigError("pulled_back_surface_integral: node count mismatch");
  double acc = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < S.grid1; ++i)
    for (int j = 0; j < S.grid2; ++j, ++idx) {
      const double a = (i + 0.5) / S.grid1, b = (j + 0.5) / S.grid2;
      const Mat& L = node_jacobians[idx];
      acc += beta.eval(node_states[idx], t, L * S.d1(a, b), L * S.d2(a, b));
    }
  return acc / (S.grid1 * S.grid2);
}

namespace {

using RowArr = Eigen::Array<double, 1, Eigen::Dynamic>;

/** Map checkpoints onto the step grid; the last one must equal the horizon. */
std::vector<long long> checkpoint_steps(double T, double h,
                                        const std::vector<double>& cps) {
  if (h <= 0.0 || T <= 0.0) throw ConfigError("experiment: need T > 0, h > 0");
  const long long S = std::llround(T / h);
  if (S < 1 || std::abs(S * h - T) > 1e-9 * std::max(1.0, std::abs(T)))
    throw ConfigError("experiment: horizon is not a multiple of the step");
  if (cps.empty()) throw ConfigError("experiment: no checkpoints");
  std::vector<long long> steps;
  long long prev = 0;
  for (double c : cps) {
    const long long j = std::llround(c / h);
    if (j <= prev || j > S ||
        std::abs(j * h - c) > 1e-9 * std::max(1.0, std::abs(c)))
      throw ConfigError("experiment: checkpoints must be increasing grid times");
    steps.push_back(j);
    prev = j;
  }
  if (steps.back() != S)
    throw ConfigError("experiment: final checkpoint must equal the horizon");
  return steps;
}

struct MeanSe {
  double mean = 0.0, se = 0.0;
  int n = 0;
};

MeanSe column_stats(const std::vector<double>& v) {
  MeanSe s;
  s.n = static_cast<int>(v.size());
  if (s.n == 0) return s;
  double acc = 0.0;
  for (double x : v) acc += x;
  s.mean = acc / s.n;
  double var = 0.0;
  for (double x : v) var += (x - s.mean) * (x - s.mean);
  if (s.n > 1) var /= (s.n - 1);
  s.se = std::sqrt(var / s.n);
  return s;
}

}  // namespace

MartingaleReport theorem11_experiment(const fieldlib::VelocityField& u,
                                      const Theorem11Config& cfg) {
  const int d = u.dim;
  if (d < 2) throw ConfigError("theorem11: field dimension must be >= 2");
  if (u.nu <= 0.0) throw ConfigError("theorem11: positive viscosity required");
  if (cfg.samples < 2) throw ConfigError("theorem11: need at least 2 samples");

  Surface S = cfg.has_surface
                  ? cfg.surface
                  : Surface::planar_rectangle(Vec::Zero(d), Vec::Unit(d, 0),
                                              Vec::Unit(d, 1), 26, 26);
  if (S.dim != d) throw ConfigError("theorem11: surface dim mismatch");

  const double T = cfg.T, h = cfg.h;
  const std::vector<long long> cp_steps = checkpoint_steps(T, h, cfg.checkpoints);
  const long long nsteps = cp_steps.back();
  const int nc = static_cast<int>(cp_steps.size());
  const double snu = std::sqrt(2.0 * u.nu);

  // Residual gate: the field must solve the equations it claims to solve.
  if (cfg.validate) {
    const auto probes =
        util::probe_box(Vec::Constant(d, 0.3), Vec::Constant(d, 5.9), 30);
    const auto res =
        fieldlib::residual_navier_stokes(u, probes, {0.0, T / 2.0, T});
    if (!res.validated || res.max_momentum > 1e-8 || res.max_divergence > 1e-8)
      throw NumericalError("theorem11: field fails the residual gate");
  }

  // Deterministic t=0 value of z (the w-side surface integral) on a grid.
  auto initial_integral = [&](const Surface& s) {
    geometry::TwoForm beta;
    beta.dim = d;
    beta.closed = true;
    beta.matrix = [&u, T](const Vec& x, double) {
      return (-geometry::c_matrix(u.jac(x, T))).eval();
    };
    return surface_integral(beta, s, 0.0);
  };
  const double z0 = initial_integral(S);
  Surface fine = S;
  fine.grid1 *= 2;
  fine.grid2 *= 2;
  const double z0_fine = initial_integral(fine);
  const double rel_change =
      std::abs(z0_fine - z0) / std::max(std::abs(z0_fine), 1e-12);
  if (rel_change > cfg.resolution_tol)
    throw ConfigError(
        "theorem11: surface quadrature failed the grid-doubling audit; "
        "increase the surface grid");

  // Surface nodes (theta1-major) and partials, one column per node.
  const Eigen::Index M =
      static_cast<Eigen::Index>(S.grid1) * static_cast<Eigen::Index>(S.grid2);
  Mat X0(d, M), A1(d, M), A2(d, M);
  {
    Eigen::Index col = 0;
    for (int i = 0; i < S.grid1; ++i)
      for (int j = 0; j < S.grid2; ++j, ++col) {
        const double a = (i + 0.5) / S.grid1, b = (j + 0.5) / S.grid2;
        X0.col(col) = S.tau(a, b);
        A1.col(col) = S.d1(a, b);
        A2.col(col) = S.d2(a, b);
      }
  }
  const double wq = 1.0 / static_cast<double>(M);

  const int nobs = nc + 3;  // z at checkpoints, realized QV, formula QV, det
  Mat values(nobs, cfg.samples);
  std::vector<std::uint8_t> ok(cfg.samples, 1);
  std::vector<std::string> failures;
  std::mutex fail_mutex;

  // One Monte Carlo sample: all surface nodes advected by the same Brownian
  // increments under dx = w dt + sqrt(2 nu) dW with w(x,t) = -u(x,T-t); the
  // sign of w is folded into the formulas so the forward field's batched
  // evaluator can be used directly.
  auto body = [&](std::size_t begin, std::size_t end) {
    fieldlib::BatchDerivs b0, b1;
    Mat X(d, M), XP(d, M);
    std::vector<RowArr> L(d * d), LP(d * d), JL(d * d);
    for (auto& r : L) r.resize(M);
    for (auto& r : LP) r.resize(M);
    for (auto& r : JL) r.resize(M);
    std::vector<RowArr> A1r(d), A2r(d), V1(d), V2(d);
    for (int r = 0; r < d; ++r) {
      A1r[r] = A1.row(r).array();
      A2r[r] = A2.row(r).array();
      V1[r].resize(M);
      V2[r].resize(M);
    }
    RowArr integ(M), yi(M);
    Vec dw(d);
    Mat lam(d, d);
    std::vector<double> zc(nc);

    for (std::size_t s = begin; s < end; ++s) {
      const rng::NoiseStream noise(cfg.seed, s);
      X = X0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) L[i * d + j].setConstant(i == j ? 1.0 : 0.0);

      double qv_realized = 0.0, qv_formula = 0.0, maxdet = 0.0;
      double z_prev = 0.0, y2_prev = 0.0;
      int cp_idx = 0;
      bool good = true;

      for (long long step = 0; step <= nsteps; ++step) {
        const double t = step * h;
        u.eval_batch(X, T - t, b0, 2);

        // Transported surface tangents V1 = Lambda a1, V2 = Lambda a2.
        for (int r = 0; r < d; ++r) {
          V1[r] = L[r * d] * A1r[0];
          V2[r] = L[r * d] * A2r[0];
          for (int c = 1; c < d; ++c) {
            V1[r] += L[r * d + c] * A1r[c];
            V2[r] += L[r * d + c] * A2r[c];
          }
        }

        // z integrand (W V1)·V2 with W = C(w) = -(Du - Du^T), so
        // W_kj = du[k](j) - du[j](k) in forward-field derivatives.
        integ.setZero();
        for (int k = 0; k < d; ++k)
          for (int j = 0; j < d; ++j) {
            if (j == k) continue;
            integ += (b0.du[k].row(j).array() - b0.du[j].row(k).array()) *
                     V1[j] * V2[k];
          }
        const double z = integ.sum() * wq;

        // QV integrand sum_i y_i(t)^2 from the second derivatives.
        double y2 = 0.0;
        for (int i = 0; i < d; ++i) {
          yi.setZero();
          for (int k = 0; k < d; ++k)
            for (int j = 0; j < d; ++j) {
              if (j == k) continue;
              yi += (b0.d2[i * d + k].row(j).array() -
                     b0.d2[i * d + j].row(k).array()) *
                    V1[j] * V2[k];
            }
          const double y = yi.sum() * wq;
          y2 += y * y;
        }

        if (step > 0) {
          const double dz = z - z_prev;
          qv_realized += dz * dz;
          qv_formula += 0.5 * h * (y2_prev + y2);  // trapezoid in s
        }
        z_prev = z;
        y2_prev = y2;

        if (cp_idx < nc && step == cp_steps[cp_idx]) {
          zc[cp_idx] = z;
          // Volume-preservation audit: |det Lambda - 1| at the checkpoints.
          for (Eigen::Index m = 0; m < M; ++m) {
            for (int i = 0; i < d; ++i)
              for (int j = 0; j < d; ++j) lam(i, j) = L[i * d + j](m);
            maxdet = std::max(maxdet, std::abs(lam.determinant() - 1.0));
          }
          ++cp_idx;
        }
        if (step == nsteps) break;

        // Heun step, noise shared across all nodes (additive, hence exact);
        // the drift is w = -u.
        noise.normals(static_cast<std::uint64_t>(step), dw);
        dw *= std::sqrt(h) * snu;
        for (int i = 0; i < d; ++i)
          XP.row(i).array() = X.row(i).array() - h * b0.val.row(i).array() +
                              dw(i);
        u.eval_batch(XP, T - t - h, b1, 1);
        for (int i = 0; i < d; ++i)
          X.row(i).array() +=
              -0.5 * h * (b0.val.row(i).array() + b1.val.row(i).array()) +
              dw(i);

        // Lambda update with the same scheme: J_w = -du.
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            JL[i * d + j].setZero();
            for (int r = 0; r < d; ++r)
              JL[i * d + j] -= b0.du[r].row(i).array() * L[r * d + j];
            LP[i * d + j] = L[i * d + j] + h * JL[i * d + j];
          }
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            yi.setZero();  // scratch: corrector-point J Lambda entry
            for (int r = 0; r < d; ++r)
              yi -= b1.du[r].row(i).array() * LP[r * d + j];
            L[i * d + j] += 0.5 * h * (JL[i * d + j] + yi);
          }

        if (!X.allFinite() || X.cwiseAbs().maxCoeff() > 1e6) {
          good = false;
          break;
        }
      }

      if (good) {
        for (int c = 0; c < nc; ++c) values(c, s) = zc[c];
        values(nc, s) = qv_realized;
        values(nc + 1, s) = 2.0 * u.nu * qv_formula;
        values(nc + 2, s) = maxdet;
      } else {
        ok[s] = 0;
        values.col(s).setConstant(std::numeric_limits<double>::quiet_NaN());
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (failures.empty())
          failures.push_back("sample diverged (non-finite or unbounded state)");
      }
    }
  };
  util::parallel_for(static_cast<std::size_t>(cfg.samples), body,
                     static_cast<unsigned>(cfg.workers));

  MartingaleReport rep;
  rep.field_id = u.name;
  rep.nu = u.nu;
  rep.T = T;
  rep.h = h;
  rep.samples = cfg.samples;
  rep.seed = cfg.seed;
  rep.grid1 = S.grid1;
  rep.grid2 = S.grid2;
  rep.z0 = z0;
  rep.resolution_change = rel_change;

  for (int s = 0; s < cfg.samples; ++s)
    if (!ok[s]) ++rep.discarded;
  if (rep.discarded > cfg.discard_budget * cfg.samples)
    throw NumericalError("theorem11: sample failure budget exceeded: " +
                         (failures.empty() ? std::string("unknown")
                                           : failures.front()));

  auto valid_row = [&](int r) {
    std::vector<double> v;
    v.reserve(cfg.samples);
    for (int s = 0; s < cfg.samples; ++s)
      if (ok[s]) v.push_back(values(r, s));
    return v;
  };

  // Per-checkpoint stats and all paired martingale z-statistics (incl. t=0).
  rep.pair_times.push_back(0.0);
  for (int c = 0; c < nc; ++c) rep.pair_times.push_back(cfg.checkpoints[c]);
  rep.pair_z = Mat::Zero(nc + 1, nc + 1);
  for (int a = 0; a <= nc; ++a)
    for (int b = a + 1; b <= nc; ++b) {
      std::vector<double> diff;
      diff.reserve(cfg.samples);
      for (int s = 0; s < cfg.samples; ++s) {
        if (!ok[s]) continue;
        const double za = (a == 0) ? z0 : values(a - 1, s);
        diff.push_back(values(b - 1, s) - za);
      }
      const MeanSe st = column_stats(diff);
      const double z = st.se > 0.0 ? st.mean / st.se : 0.0;
      rep.pair_z(a, b) = z;
      rep.max_abs_pair_z = std::max(rep.max_abs_pair_z, std::abs(z));
    }
  for (int c = 0; c < nc; ++c) {
    const MeanSe st = column_stats(valid_row(c));
    rep.checkpoints.push_back(
        {cfg.checkpoints[c], st.mean, st.se, rep.pair_z(0, c + 1)});
  }

  const MeanSe qr = column_stats(valid_row(nc));
  const MeanSe qf = column_stats(valid_row(nc + 1));
  rep.realized_qv_mean = qr.mean;
  rep.realized_qv_se = qr.se;
  rep.formula_qv_mean = qf.mean;
  rep.formula_qv_se = qf.se;
  rep.qv_ratio = qf.mean != 0.0 ? qr.mean / qf.mean : 0.0;

  std::vector<double> zt2, bound_diff, ident;
  for (int s = 0; s < cfg.samples; ++s) {
    if (!ok[s]) continue;
    const double zT = values(nc - 1, s);
    const double qv = values(nc + 1, s);
    zt2.push_back(zT * zT);
    bound_diff.push_back(zT * zT - qv);
    ident.push_back(zT * zT - z0 * z0 - qv);
  }
  const MeanSe s2 = column_stats(zt2);
  const MeanSe bd = column_stats(bound_diff);
  const MeanSe id = column_stats(ident);
  rep.energy_lhs = qf.mean;
  rep.energy_lhs_se = qf.se;
  rep.energy_rhs = s2.mean;
  rep.energy_rhs_se = s2.se;
  rep.energy_diff_se = bd.se;
  rep.ez2_identity_z = id.se > 0.0 ? id.mean / id.se : 0.0;

  double maxdet = 0.0;
  for (double v : valid_row(nc + 2)) maxdet = std::max(maxdet, v);
  rep.max_det_drift = maxdet;
  return rep;
}

EnergyVerdict energy_bound_check(const MartingaleReport& rep) {
  EnergyVerdict v;
  v.bound_margin =
      rep.energy_rhs + 3.0 * rep.energy_diff_se - rep.energy_lhs;
  v.bound_ok = v.bound_margin >= 0.0;
  v.identity_z = rep.ez2_identity_z;
  v.identity_ok = std::abs(v.identity_z) <= 3.0;
  return v;
}

ConstantinIyerReport constantin_iyer_estimate(
    const fieldlib::VelocityField& u, const ConstantinIyerConfig& cfg) {
  if (u.dim != 3) throw ConfigError("constantin_iyer: dim must be 3");
  if (u.nu <= 0.0) throw ConfigError("constantin_iyer: viscosity required");
  if (cfg.points.empty()) throw ConfigError("constantin_iyer: no probe points");

  const std::vector<double> cps =
      cfg.checkpoints.empty() ? std::vector<double>{cfg.T} : cfg.checkpoints;
  checkpoint_steps(cfg.T, cfg.h, cps);  // grid validation
  const int nc = static_cast<int>(cps.size());

  const DiffusionSpec spec = flow::reversed_flow_spec(u, cfg.T);
  flow::IntegratorOptions opt;
  opt.h = cfg.h;
  opt.checkpoints = cps;

  ConstantinIyerReport rep;
  rep.field_id = u.name;
  rep.nu = u.nu;
  rep.T = cfg.T;
  rep.h = cfg.h;
  rep.samples = cfg.samples;
  rep.seed = cfg.seed;

  for (std::size_t pi = 0; pi < cfg.points.size(); ++pi) {
    const Vec& x0 = cfg.points[pi];
    const std::uint64_t seed = cfg.seed + 0x9e3779b97f4a7c15ull * (pi + 1);

    Mat values(3 * nc, cfg.samples);
    std::vector<std::uint8_t> ok(cfg.samples, 1);

    auto body = [&](std::size_t begin, std::size_t end) {
      for (std::size_t s = begin; s < end; ++s) {
        const rng::NoiseStream noise(seed, s);
        flow::FlowSample fs;
        try {
          fs = flow::integrate_sde(spec, x0, 0.0, opt, noise);
        } catch (const NumericalError&) {
          fs.ok = false;
        }
        if (!fs.ok) {
          ok[s] = 0;
          continue;
        }
        bool good = true;
        for (int c = 0; c < nc && good; ++c) {
          const Mat& lam = fs.jacobians[c + 1];
          Eigen::JacobiSVD<Mat> svd(lam, Eigen::ComputeThinU |
                                             Eigen::ComputeThinV);
          const Vec sv = svd.singularValues();
          if (sv(2) <= 0.0 || sv(0) / sv(2) > cfg.cond_limit) {
            good = false;
            break;
          }
          // M_t = Lambda^{-1} xi^{T-t}(x_t) along the reversed flow.
          const Vec xi = u.vorticity3(fs.states[c + 1], cfg.T - cps[c]);
          values.col(s).segment(3 * c, 3) = svd.solve(xi);
        }
        if (!good) {
          ok[s] = 0;
          values.col(s).setConstant(std::numeric_limits<double>::quiet_NaN());
        }
      }
    };
    util::parallel_for(static_cast<std::size_t>(cfg.samples), body,
                       static_cast<unsigned>(cfg.workers));

    ConstantinIyerPoint pt;
    pt.x = x0;
    pt.reference = u.vorticity3(x0, cfg.T);
    for (int s = 0; s < cfg.samples; ++s)
      if (!ok[s]) ++pt.discarded;
    if (pt.discarded > cfg.discard_budget * cfg.samples)
      throw NumericalError("constantin_iyer: sample failure budget exceeded");

    for (int c = 0; c < nc; ++c) {
      Vec mean = Vec::Zero(3), se = Vec::Zero(3), z = Vec::Zero(3);
      for (int comp = 0; comp < 3; ++comp) {
        std::vector<double> v;
        v.reserve(cfg.samples);
        for (int s = 0; s < cfg.samples; ++s)
          if (ok[s]) v.push_back(values(3 * c + comp, s));
        const MeanSe st = column_stats(v);
        mean(comp) = st.mean;
        se(comp) = st.se;
        z(comp) = st.se > 0.0 ? (st.mean - pt.reference(comp)) / st.se : 0.0;
      }
      pt.times.push_back(cps[c]);
      pt.mean.push_back(mean);
      pt.se.push_back(se);
      pt.z.push_back(z);
    }
    const Vec& zf = pt.z.back();
    const Vec& mf = pt.mean.back();
    rep.max_abs_z = std::max(rep.max_abs_z, zf.cwiseAbs().maxCoeff());
    rep.max_error =
        std::max(rep.max_error, (mf - pt.reference).cwiseAbs().maxCoeff());
    rep.points.push_back(std::move(pt));
  }
  return rep;
}

}  // namespace flowforms::circulation
