#include "vlx/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "vlx/errors.hpp"

namespace vlx {

namespace {

// Raw values of the signed thickness integral between two layer nodes:
// (l_to - l_from) plus the trapezoid sum of w3 with half weights at both
// end nodes.  Additive over concatenated index ranges, exact on constants.
std::vector<double> thickness_values(const LayeredState& state, int from, int to) {
  const int n = state.grid.size();
  std::vector<double> g(static_cast<size_t>(n), 0.0);
  if (from == to) return g;
  const int a = std::min(from, to);
  const int b = std::max(from, to);
  for (int m = a; m <= b; ++m) {
    const double w = (m == a || m == b) ? 0.5 : 1.0;
    const auto& v = state.w3[static_cast<size_t>(m)].values();
    for (int j = 0; j < n; ++j) g[static_cast<size_t>(j)] += w * v[static_cast<size_t>(j)];
  }
  const double h = state.layer_spacing();
  const double flat = state.layer_node(b) - state.layer_node(a);
  for (auto& x : g) x = flat + h * x;
  if (from > to) {
    for (auto& x : g) x = -x;
  }
  return g;
}

void check_layer_index(const LayeredState& state, int k, const char* what) {
  if (k < 0 || k >= state.n_layers) {
    throw InvalidArgument(std::string(what) + " layer index out of range");
  }
}

double max_speed_of(const VecSamples& u) {
  double m = 0.0;
  for (const auto& v : u.v) m = std::max(m, norm(v));
  return m;
}

SpectralField filtered(const SpectralField& f, double threshold) {
  return krasny_filter(f, threshold);
}

// State advanced by a scalar multiple of a derivative (Runge-Kutta stage).
LayeredState advanced(const LayeredState& s, const std::vector<LayerDeriv>& d, double a) {
  LayeredState r = s;
  for (int l = 0; l < s.n_layers; ++l) {
    const auto k = static_cast<size_t>(l);
    r.w1[k] = s.w1[k] + a * d[k].dw1;
    r.w3[k] = s.w3[k] + a * d[k].dw3;
    r.w4[k] = s.w4[k] + a * d[k].dw4;
  }
  r.time = s.time + a;
  return r;
}

LayeredState rk4_from_k1(const LayeredState& state, const RhsResult& k1, const CurveCache& cache,
                         const EvolutionConfig& cfg, double dt) {
  const RhsResult k2 = layered_rhs(advanced(state, k1.deriv, 0.5 * dt), cache, cfg);
  const RhsResult k3 = layered_rhs(advanced(state, k2.deriv, 0.5 * dt), cache, cfg);
  const RhsResult k4 = layered_rhs(advanced(state, k3.deriv, dt), cache, cfg);
  LayeredState r = state;
  const double c = dt / 6.0;
  for (int l = 0; l < state.n_layers; ++l) {
    const auto k = static_cast<size_t>(l);
    r.w1[k] = filtered(state.w1[k] + c * (k1.deriv[k].dw1 + 2.0 * k2.deriv[k].dw1 +
                                          2.0 * k3.deriv[k].dw1 + k4.deriv[k].dw1),
                       cfg.filter_threshold);
    r.w3[k] = filtered(state.w3[k] + c * (k1.deriv[k].dw3 + 2.0 * k2.deriv[k].dw3 +
                                          2.0 * k3.deriv[k].dw3 + k4.deriv[k].dw3),
                       cfg.filter_threshold);
    r.w4[k] = filtered(state.w4[k] + c * (k1.deriv[k].dw4 + 2.0 * k2.deriv[k].dw4 +
                                          2.0 * k3.deriv[k].dw4 + k4.deriv[k].dw4),
                       cfg.filter_threshold);
  }
  r.time = state.time + dt;
  return r;
}

// Smallest determinate analyticity-radius fit over a collection of fields;
// falls back to the fitter's measurable ceiling when every field is too
// simple to fit (constant or near-constant spectra).
double min_radius_over(const std::vector<const SpectralField*>& fields) {
  const RadiusFitOptions opts{};
  double m = std::numeric_limits<double>::infinity();
  for (const SpectralField* f : fields) {
    const RadiusFit fit = estimate_analyticity_radius(*f, opts);
    if (!fit.indeterminate) m = std::min(m, fit.value);
  }
  return std::isfinite(m) ? m : opts.max_radius;
}

double choose_dt(const EvolutionConfig& cfg, double grid_spacing, double max_speed,
                 double remaining, bool& cfl_violated) {
  cfl_violated = false;
  const double cfl = max_speed > 0.0
                         ? cfg.cfl_safety * grid_spacing / max_speed
                         : std::numeric_limits<double>::infinity();
  if (cfg.dt > 0.0) {
    if (cfg.dt > cfl) cfl_violated = true;
    return std::min(cfg.dt, remaining);
  }
  return std::min(cfl, remaining);
}

}  // namespace

LayeredState build_initial_state(const CurveSpec& curve, double epsilon, int n_layers,
                                 const PeriodicGrid& grid, const SpectralField& eta0,
                                 const std::vector<SpectralField>& varpi0) {
  if (!(epsilon > 0.0)) throw InvalidArgument("layer thickness scale epsilon must be positive");
  if (n_layers < 2) throw InvalidArgument("at least two layers are required");
  if (static_cast<int>(varpi0.size()) != n_layers) {
    throw InvalidArgument("need exactly one initial density field per layer");
  }
  if (!(eta0.grid() == grid)) {
    throw InvalidArgument("initial offset perturbation must live on the state grid");
  }
  LayeredState st{curve, epsilon, n_layers, grid, {}, {}, {}, {}, 0.0};
  st.w1.reserve(static_cast<size_t>(n_layers));
  st.w3.reserve(static_cast<size_t>(n_layers));
  st.w4.reserve(static_cast<size_t>(n_layers));
  st.active.reserve(static_cast<size_t>(n_layers));
  for (int k = 0; k < n_layers; ++k) {
    const auto& vp = varpi0[static_cast<size_t>(k)];
    if (!(vp.grid() == grid)) {
      throw InvalidArgument("initial density fields must live on the state grid");
    }
    const double l = st.layer_node(k);
    if (std::abs(l) >= 0.5 && vp.max_abs() != 0.0) {
      throw InvalidArgument(
          "initial density must vanish identically on layers with |l| >= 1/2");
    }
    st.w1.push_back(epsilon * (eta0 + l));
    st.w3.push_back(SpectralField::zero(grid));
    st.w4.push_back(vp);
    st.active.push_back(vp.max_abs() != 0.0 ? 1 : 0);
  }
  return st;
}

SpectralField thickness_integral(const LayeredState& state, int from, int to) {
  check_layer_index(state, from, "thickness integral");
  check_layer_index(state, to, "thickness integral");
  return SpectralField(state.grid, thickness_values(state, from, to));
}

void project_onto_coupling(LayeredState& state) {
  const int levels = state.n_layers;
  const int n = state.grid.size();
  std::vector<std::vector<double>> anchor;
  anchor.reserve(static_cast<size_t>(levels));
  for (int k = 0; k < levels; ++k) anchor.push_back(thickness_values(state, 0, k));
  std::vector<double> base(static_cast<size_t>(n), 0.0);
  for (int k = 0; k < levels; ++k) {
    const auto& nu = state.w1[static_cast<size_t>(k)].values();
    const auto& g = anchor[static_cast<size_t>(k)];
    for (int j = 0; j < n; ++j) {
      const auto m = static_cast<size_t>(j);
      base[m] += nu[m] - state.epsilon * g[m];
    }
  }
  for (double& b : base) b /= levels;
  for (int k = 0; k < levels; ++k) {
    std::vector<double> nu(static_cast<size_t>(n));
    const auto& g = anchor[static_cast<size_t>(k)];
    for (int j = 0; j < n; ++j) {
      const auto m = static_cast<size_t>(j);
      nu[m] = base[m] + state.epsilon * g[m];
    }
    state.w1[static_cast<size_t>(k)] = SpectralField(state.grid, std::move(nu));
  }
}

double admissibility_residual(const LayeredState& state) {
  const int n = state.grid.size();
  double worst = 0.0;
  for (int i = 0; i < state.n_layers; ++i) {
    for (int j = i + 1; j < state.n_layers; ++j) {
      const std::vector<double> g = thickness_values(state, i, j);
      const auto& a = state.w1[static_cast<size_t>(i)].values();
      const auto& b = state.w1[static_cast<size_t>(j)].values();
      for (int m = 0; m < n; ++m) {
        const auto k = static_cast<size_t>(m);
        worst = std::max(worst, std::abs(b[k] - a[k] - state.epsilon * g[k]));
      }
    }
  }
  return worst;
}

CurveCache make_curve_cache(const CurveSpec& curve, const PeriodicGrid& grid) {
  CurveCache cache{sample_base_curve(curve, grid), {}, {}, {}};
  const int n = grid.size();
  cache.d1.resize(static_cast<size_t>(n));
  cache.d2.resize(static_cast<size_t>(n));
  cache.d3.resize(static_cast<size_t>(n));
  const CurveSamples s2 = curve.sample(grid, 2);
  const CurveSamples s3 = curve.sample(grid, 3);
  for (int j = 0; j < n; ++j) {
    const auto k = static_cast<size_t>(j);
    cache.d1[k] = cache.base.tangent[k];
    cache.d2[k] = Vec2{s2.x.value(j), s2.y.value(j)};
    cache.d3[k] = Vec2{s3.x.value(j), s3.y.value(j)};
  }
  return cache;
}

VecSamples assemble_velocity(const LayeredState& state, int layer, const CurveCache& cache,
                             const KernelEvalConfig& kernel_cfg) {
  check_layer_index(state, layer, "velocity assembly");
  const int n = state.grid.size();
  VecSamples total{state.grid, std::vector<Vec2>(static_cast<size_t>(n), Vec2{})};
  const double h = state.layer_spacing();
  for (int src = 0; src < state.n_layers; ++src) {
    const auto ks = static_cast<size_t>(src);
    if (state.w4[ks].max_abs() == 0.0) continue;  // no density, no induced velocity
    const bool same = (src == layer);
    // The target sits on the source layer's graph shifted back by the
    // integrated thickness: offset nu_src - eps * g(layer -> src).  For an
    // admissible state this is the target layer's own offset.
    const SpectralField nu_target =
        same ? state.w1[ks]
             : state.w1[ks] - state.epsilon * thickness_integral(state, layer, src);
    const VecSamples part =
        layer_kernel(cache.base, nu_target, state.w1[ks], state.w4[ks], same, kernel_cfg);
    for (int j = 0; j < n; ++j) total.v[static_cast<size_t>(j)] += h * part.v[static_cast<size_t>(j)];
  }
  return total;
}

FrameComponents project_components(const CurveCache& cache, const SpectralField& nu,
                                   const VecSamples& u) {
  const PeriodicGrid& grid = nu.grid();
  if (!(u.grid == grid) || cache.d1.size() != static_cast<size_t>(grid.size())) {
    throw InvalidArgument("frame projection requires matching grids");
  }
  const int n = grid.size();
  std::vector<double> un(static_cast<size_t>(n)), us(static_cast<size_t>(n)),
      md(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto k = static_cast<size_t>(j);
    const double off = nu.value(j);
    const Vec2 es = cache.d1[k] + off * perp(cache.d2[k]);
    const double es2 = norm_sq(es);
    if (es2 < 0.25) {
      throw NumericalFailure(
          "tubular frame degenerated: |e_s|^2 < 1/4 (layer left the tube where the "
          "chart is valid)");
    }
    const Vec2 en = perp(cache.d1[k]);
    const Vec2 des = cache.d2[k] + off * perp(cache.d3[k]);
    const Vec2 metric = (1.0 / es2) * des - (2.0 * dot(es, des) / (es2 * es2)) * es;
    const Vec2 uj = u.v[k];
    un[k] = dot(uj, en);
    us[k] = dot(uj, es) / es2;
    md[k] = dot(uj, metric);
  }
  return FrameComponents{SpectralField(grid, std::move(un)), SpectralField(grid, std::move(us)),
                         SpectralField(grid, std::move(md))};
}

RhsResult layered_rhs(const LayeredState& state, const CurveCache& cache,
                      const EvolutionConfig& cfg) {
  RhsResult out;
  out.deriv.reserve(static_cast<size_t>(state.n_layers));
  for (int l = 0; l < state.n_layers; ++l) {
    const auto k = static_cast<size_t>(l);
    const SpectralField one_plus_w3 = state.w3[k] + 1.0;
    double min_thickness = std::numeric_limits<double>::infinity();
    for (double v : one_plus_w3.values()) min_thickness = std::min(min_thickness, v);
    if (min_thickness <= 0.0) {
      throw NumericalFailure("layer thickness density became nonpositive (layers folded)");
    }
    const VecSamples u = assemble_velocity(state, l, cache, cfg.kernel);
    const double speed = max_speed_of(u);
    out.max_speed = std::max(out.max_speed, speed);
    if (speed > cfg.max_velocity_cap) {
      throw NumericalFailure("assembled layer velocity exceeded the configured cap");
    }
    const FrameComponents fc = project_components(cache, state.w1[k], u);
    const SpectralField w2 = state.derived_w2(l);
    LayerDeriv d{
        fc.normal - fc.tangential * w2,
        fc.metric_dot * one_plus_w3 -
            spectral_derivative(filtered(fc.tangential * one_plus_w3, cfg.filter_threshold)),
        -1.0 * spectral_derivative(filtered(fc.tangential * state.w4[k], cfg.filter_threshold)),
    };
    out.deriv.push_back(std::move(d));
  }
  return out;
}

LayeredState rk4_step(const LayeredState& state, const CurveCache& cache,
                      const EvolutionConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  const RhsResult k1 = layered_rhs(state, cache, cfg);
  return rk4_from_k1(state, k1, cache, cfg, dt);
}

double support_width(const LayeredState& state) {
  // Normal thickness of the supported stack at each node, sup over nodes.
  // Measuring per node keeps the bulk motion of the whole stack out of the
  // width; only the spread between density-carrying layers counts.
  const int n = state.grid.size();
  double widest = 0.0;
  bool any = false;
  for (int j = 0; j < n; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool row = false;
    for (int l = 0; l < state.n_layers; ++l) {
      const auto k = static_cast<size_t>(l);
      if (!state.active[k]) continue;
      row = true;
      const double v = state.w1[k].value(j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!row) return 0.0;
    any = true;
    widest = std::max(widest, hi - lo);
  }
  return any ? widest : 0.0;
}

Trajectory integrate(const LayeredState& initial, const EvolutionConfig& cfg) {
  if (!(cfg.t_end >= initial.time)) {
    throw InvalidArgument("t_end must not precede the initial state time");
  }
  const double gap = initial.epsilon * initial.layer_spacing();
  const int required = static_cast<int>(std::ceil(cfg.resolution_constant / gap));
  if (cfg.resolution_constant > 0.0 && initial.grid.size() < required) {
    throw InvalidArgument("grid too coarse to resolve the layer gap: need at least " +
                          std::to_string(required) + " points for this epsilon and layer count");
  }

  Trajectory traj;
  traj.snapshots.push_back(initial);
  const CurveCache cache = make_curve_cache(initial.curve, initial.grid);
  LayeredState cur = initial;
  const double time_tol = 1e-12 * std::max(1.0, std::abs(cfg.t_end));
  long step_index = 0;

  while (cur.time < cfg.t_end - time_tol) {
    try {
      const RhsResult k1 = layered_rhs(cur, cache, cfg);
      bool cfl_violated = false;
      const double dt =
          choose_dt(cfg, cur.grid.spacing(), k1.max_speed, cfg.t_end - cur.time, cfl_violated);
      if (cfl_violated) {
        traj.halt_reason = "explicit time step exceeds the CFL limit for the observed velocity";
        break;
      }
      if (!(dt > 0.0) || !std::isfinite(dt)) {
        traj.halt_reason = "time step underflowed";
        break;
      }
      LayeredState next = rk4_from_k1(cur, k1, cache, cfg, dt);
      if (cfg.project_admissibility) project_onto_coupling(next);

      StepDiagnostics diag;
      diag.time = next.time;
      diag.dt = dt;
      diag.max_speed = k1.max_speed;
      diag.admissibility = admissibility_residual(next);
      std::vector<const SpectralField*> fields;
      for (int l = 0; l < next.n_layers; ++l) {
        const auto k = static_cast<size_t>(l);
        fields.push_back(&next.w1[k]);
        fields.push_back(&next.w3[k]);
        fields.push_back(&next.w4[k]);
      }
      diag.min_radius = min_radius_over(fields);
      diag.support_width = support_width(next);
      diag.circulation.reserve(static_cast<size_t>(next.n_layers));
      for (int l = 0; l < next.n_layers; ++l) {
        diag.circulation.push_back(next.w4[static_cast<size_t>(l)].mean());
      }
      traj.steps.push_back(std::move(diag));

      cur = next;
      ++step_index;
      if (traj.steps.back().admissibility > cfg.residual_cap) {
        traj.halt_reason = "admissibility residual exceeded the configured cap";
        break;
      }
      if (cfg.checkpoint_stride > 0 && step_index % cfg.checkpoint_stride == 0 &&
          cur.time < cfg.t_end - time_tol) {
        traj.snapshots.push_back(cur);
      }
    } catch (const NumericalFailure& e) {
      traj.halt_reason = e.what();
      break;
    }
  }

  traj.snapshots.push_back(cur);
  traj.completed = traj.halt_reason.empty() && cur.time >= cfg.t_end - time_tol;
  return traj;
}

namespace {

struct GraphDeriv {
  SpectralField dnu, dvarpi;
};

struct GraphRhsResult {
  GraphDeriv deriv;
  double max_speed = 0.0;
};

GraphRhsResult graph_rhs(const CurveSpec& curve, const CurveCache& cache, const GraphState& st,
                         const EvolutionConfig& cfg) {
  const VecSamples u = k0(curve, st.nu, st.varpi, cfg.kernel);
  const double speed = max_speed_of(u);
  if (speed > cfg.max_velocity_cap) {
    throw NumericalFailure("sheet velocity exceeded the configured cap");
  }
  const FrameComponents fc = project_components(cache, st.nu, u);
  GraphRhsResult out{
      GraphDeriv{
          fc.normal - fc.tangential * spectral_derivative(st.nu),
          -1.0 * spectral_derivative(filtered(fc.tangential * st.varpi, cfg.filter_threshold)),
      },
      speed};
  return out;
}

GraphState graph_advanced(const GraphState& s, const GraphDeriv& d, double a) {
  return GraphState{s.nu + a * d.dnu, s.varpi + a * d.dvarpi, s.time + a};
}

GraphState graph_rk4(const CurveSpec& curve, const CurveCache& cache, const GraphState& s,
                     const GraphRhsResult& k1, const EvolutionConfig& cfg, double dt) {
  const GraphRhsResult k2 = graph_rhs(curve, cache, graph_advanced(s, k1.deriv, 0.5 * dt), cfg);
  const GraphRhsResult k3 = graph_rhs(curve, cache, graph_advanced(s, k2.deriv, 0.5 * dt), cfg);
  const GraphRhsResult k4 = graph_rhs(curve, cache, graph_advanced(s, k3.deriv, dt), cfg);
  const double c = dt / 6.0;
  GraphState r{
      filtered(s.nu + c * (k1.deriv.dnu + 2.0 * k2.deriv.dnu + 2.0 * k3.deriv.dnu + k4.deriv.dnu),
               cfg.filter_threshold),
      filtered(s.varpi + c * (k1.deriv.dvarpi + 2.0 * k2.deriv.dvarpi + 2.0 * k3.deriv.dvarpi +
                              k4.deriv.dvarpi),
               cfg.filter_threshold),
      s.time + dt};
  return r;
}

}  // namespace

GraphTrajectory integrate_reference(const CurveSpec& curve, const GraphState& initial,
                                    const EvolutionConfig& cfg) {
  if (!(cfg.t_end >= initial.time)) {
    throw InvalidArgument("t_end must not precede the initial state time");
  }
  if (!(initial.nu.grid() == initial.varpi.grid())) {
    throw InvalidArgument("reference fields must share one grid");
  }
  GraphTrajectory traj;
  traj.snapshots.push_back(initial);
  const CurveCache cache = make_curve_cache(curve, initial.nu.grid());
  GraphState cur = initial;
  const double time_tol = 1e-12 * std::max(1.0, std::abs(cfg.t_end));
  long step_index = 0;

  while (cur.time < cfg.t_end - time_tol) {
    try {
      const GraphRhsResult k1 = graph_rhs(curve, cache, cur, cfg);
      bool cfl_violated = false;
      const double dt = choose_dt(cfg, cur.nu.grid().spacing(), k1.max_speed,
                                  cfg.t_end - cur.time, cfl_violated);
      if (cfl_violated) {
        traj.halt_reason = "explicit time step exceeds the CFL limit for the observed velocity";
        break;
      }
      if (!(dt > 0.0) || !std::isfinite(dt)) {
        traj.halt_reason = "time step underflowed";
        break;
      }
      const GraphState next = graph_rk4(curve, cache, cur, k1, cfg, dt);

      StepDiagnostics diag;
      diag.time = next.time;
      diag.dt = dt;
      diag.max_speed = k1.max_speed;
      diag.admissibility = 0.0;
      diag.min_radius = min_radius_over({&next.nu, &next.varpi});
      diag.support_width = 0.0;
      diag.circulation = {next.varpi.mean()};
      traj.steps.push_back(std::move(diag));

      cur = next;
      ++step_index;
      if (cfg.checkpoint_stride > 0 && step_index % cfg.checkpoint_stride == 0 &&
          cur.time < cfg.t_end - time_tol) {
        traj.snapshots.push_back(cur);
      }
    } catch (const NumericalFailure& e) {
      traj.halt_reason = e.what();
      break;
    }
  }

  traj.snapshots.push_back(cur);
  traj.completed = traj.halt_reason.empty() && cur.time >= cfg.t_end - time_tol;
  return traj;
}

LowerBoundReport kernel_lower_bound_check(const LayeredState& state, double rho, int n_samples,
                                          unsigned long long seed) {
  if (rho < 0.0) throw InvalidArgument("strip half-width rho must be nonnegative");
  if (n_samples < 1) throw InvalidArgument("need at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> layers(0, state.n_layers - 1);

  LowerBoundReport report;
  report.min_ratio = std::numeric_limits<double>::infinity();
  report.n_samples = n_samples;
  for (int k = 0; k < n_samples; ++k) {
    const int li = layers(rng);
    const int lj = layers(rng);
    const double s = unif(rng);
    double sigma = unif(rng);
    if (li == lj) {
      // Same layer: keep the parameter offset away from the coincidence
      // point so the flat-metric denominator stays positive.
      while (std::min(sigma, 1.0 - sigma) < 1e-6) sigma = unif(rng);
    }
    const double beta = rho > 0.0 ? (2.0 * unif(rng) - 1.0) * rho : 0.0;
    const SpectralField g = thickness_integral(state, li, lj);
    const double flat_sep = state.layer_node(lj) - state.layer_node(li);
    const double ratio = layer_distance_ratio(state.curve, state.w1[static_cast<size_t>(lj)], g,
                                              state.epsilon, flat_sep, s, sigma, beta);
    if (ratio < report.min_ratio) {
      report.min_ratio = ratio;
      report.s = s;
      report.sigma = sigma;
      report.beta = beta;
      report.layer = li;
      report.source_layer = lj;
    }
  }
  return report;
}

}  // namespace vlx
