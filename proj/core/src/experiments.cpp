#include "vlx/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "vlx/errors.hpp"

namespace vlx {

namespace {

void check_epsilons(const std::vector<double>& epsilons) {
  if (epsilons.empty()) throw InvalidArgument("experiment needs at least one epsilon");
  double prev = std::numeric_limits<double>::infinity();
  for (double e : epsilons) {
    if (!(e > 0.0)) throw InvalidArgument("epsilons must be positive");
    if (!(e < prev)) throw InvalidArgument("epsilons must be strictly decreasing");
    prev = e;
  }
}

void check_spec(const ExperimentSpec& spec) {
  check_epsilons(spec.epsilons);
  if (!spec.aggregate) throw InvalidArgument("experiment needs an aggregate density profile");
  if (spec.n_layers < 2) throw InvalidArgument("experiment needs at least two layers");
}

void check_comparison_times(const std::vector<double>& times) {
  if (times.empty()) throw InvalidArgument("experiment needs at least one comparison time");
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev)) throw InvalidArgument("comparison times must be positive and increasing");
    prev = t;
  }
}

double default_profile(double l) {
  if (std::abs(l) >= 0.5) return 0.0;
  const double c = std::cos(std::numbers::pi * l);
  return c * c;
}

// Aggregated density under the layer quadrature.
SpectralField aggregate_density(const LayeredState& state) {
  const double h = state.layer_spacing();
  SpectralField total = SpectralField::zero(state.grid);
  for (int k = 0; k < state.n_layers; ++k) total = total + h * state.w4[static_cast<size_t>(k)];
  return total;
}

// Tangent samples of the curve at offset nu along the base normal.
std::vector<Vec2> offset_tangent(const CurveCache& cache, const SpectralField& nu) {
  const SpectralField dnu = spectral_derivative(nu);
  const int n = nu.grid().size();
  std::vector<Vec2> e(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto m = static_cast<size_t>(j);
    e[m] = cache.d1[m] + dnu.value(j) * perp(cache.d1[m]) + nu.value(j) * perp(cache.d2[m]);
  }
  return e;
}

}  // namespace

LayeredState build_experiment_state(const ExperimentSpec& spec, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!spec.aggregate) throw InvalidArgument("experiment needs an aggregate density profile");
  if (spec.n_layers < 2) throw InvalidArgument("experiment needs at least two layers");
  const PeriodicGrid grid(spec.n_points);
  const std::function<double(double)> profile =
      spec.profile ? spec.profile : std::function<double(double)>(default_profile);

  const int levels = spec.n_layers;
  const double h = 2.0 / levels;
  std::vector<double> chi(static_cast<size_t>(levels), 0.0);
  double quad = 0.0;
  for (int k = 0; k < levels; ++k) {
    const double l = -1.0 + (2.0 * k + 1.0) / levels;
    const double c = profile(l);
    if (std::abs(l) >= 0.5) {
      if (c != 0.0) throw InvalidArgument("layer density profile must vanish for |l| >= 1/2");
      continue;
    }
    chi[static_cast<size_t>(k)] = c;
    quad += h * c;
  }
  if (!(quad > 0.0)) {
    throw InvalidArgument("layer density profile vanishes at every supported layer node");
  }

  const SpectralField aggregate = SpectralField::sample(grid, spec.aggregate);
  std::vector<SpectralField> varpi;
  varpi.reserve(static_cast<size_t>(levels));
  for (int k = 0; k < levels; ++k) {
    const double c = chi[static_cast<size_t>(k)] / quad;
    varpi.push_back(c == 0.0 ? SpectralField::zero(grid) : c * aggregate);
  }
  const SpectralField eta0 =
      spec.eta0 ? SpectralField::sample(grid, spec.eta0) : SpectralField::zero(grid);
  return build_initial_state(spec.curve, epsilon, levels, grid, eta0, varpi);
}

GraphState build_reference_state(const ExperimentSpec& spec) {
  if (!spec.aggregate) throw InvalidArgument("experiment needs an aggregate density profile");
  const PeriodicGrid grid(spec.n_points);
  return GraphState{SpectralField::zero(grid), SpectralField::sample(grid, spec.aggregate), 0.0};
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw InvalidArgument("rate fit needs at least three pairs");
  const int n = static_cast<int>(pairs.size());
  std::vector<double> x, y;
  x.reserve(pairs.size());
  y.reserve(pairs.size());
  for (const auto& [eps, err] : pairs) {
    if (!(eps > 0.0) || !(err > 0.0)) throw InvalidArgument("rate fit requires positive entries");
    x.push_back(std::log(eps));
    y.push_back(std::log(err));
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[static_cast<size_t>(i)];
    my += y[static_cast<size_t>(i)];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dx = x[static_cast<size_t>(i)] - mx;
    sxx += dx * dx;
    sxy += dx * (y[static_cast<size_t>(i)] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("rate fit requires distinct epsilons");
  RateFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[static_cast<size_t>(i)] - (intercept + fit.slope * x[static_cast<size_t>(i)]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

ConvergenceReport run_convergence(const ExperimentSpec& spec) {
  check_spec(spec);
  check_comparison_times(spec.comparison_times);

  ConvergenceReport report;
  report.comparison_times = spec.comparison_times;

  // One reference evolution, checkpointed at every comparison time.
  std::vector<GraphState> reference;
  reference.reserve(spec.comparison_times.size());
  {
    GraphState ref = build_reference_state(spec);
    for (double t : spec.comparison_times) {
      EvolutionConfig cfg = spec.evolution;
      cfg.t_end = t;
      cfg.checkpoint_stride = 0;
      const GraphTrajectory leg = integrate_reference(spec.curve, ref, cfg);
      if (!leg.completed) {
        report.warnings.push_back("reference halted at t=" +
                                  std::to_string(leg.snapshots.back().time) + ": " +
                                  leg.halt_reason);
        break;
      }
      ref = leg.snapshots.back();
      reference.push_back(ref);
    }
  }

  for (double eps : spec.epsilons) {
    LayeredState state = build_experiment_state(spec, eps);
    double ratio = support_width(state) / eps;
    for (size_t it = 0; it < reference.size(); ++it) {
      EvolutionConfig cfg = spec.evolution;
      cfg.t_end = spec.comparison_times[it];
      cfg.checkpoint_stride = 0;
      const Trajectory leg = integrate(state, cfg);
      for (const auto& step : leg.steps) ratio = std::max(ratio, step.support_width / eps);
      if (!leg.completed) {
        report.warnings.push_back(
            "epsilon=" + std::to_string(eps) + " halted at t=" +
            std::to_string(leg.snapshots.back().time) + ": " + leg.halt_reason +
            "; later comparison times skipped");
        break;
      }
      state = leg.snapshots.back();

      const GraphState& ref = reference[it];
      ConvergencePoint point;
      point.epsilon = eps;
      point.time = spec.comparison_times[it];
      for (int k = 0; k < state.n_layers; ++k) {
        point.e_nu =
            std::max(point.e_nu, (state.w1[static_cast<size_t>(k)] - ref.nu).max_abs());
      }
      point.e_varpi = (aggregate_density(state) - ref.varpi).max_abs();
      report.points.push_back(point);
    }
    report.width_ratio.push_back(ratio);
  }

  for (size_t it = 0; it < spec.comparison_times.size(); ++it) {
    const double t = spec.comparison_times[it];
    std::vector<std::pair<double, double>> pairs;
    for (const auto& p : report.points) {
      if (p.time == t) pairs.emplace_back(p.epsilon, p.e_nu + p.e_varpi);
    }
    RateFit fit;
    fit.n = static_cast<int>(pairs.size());
    if (pairs.size() >= 3) {
      fit = rate_fit(pairs);
    } else {
      report.warnings.push_back("only " + std::to_string(pairs.size()) +
                                " runs reached t=" + std::to_string(t) + "; no rate fit");
    }
    report.rates.push_back(fit);
  }
  return report;
}

JumpObservation jump_observation(const LayeredState& state, const KernelEvalConfig& cfg) {
  if (state.n_layers < 2) throw InvalidArgument("jump diagnostics need at least two layers");
  const CurveCache cache = make_curve_cache(state.curve, state.grid);
  const int n = state.grid.size();
  const int levels = state.n_layers;
  const double h = state.layer_spacing();

  const SpectralField total = aggregate_density(state);
  SpectralField nu_bar = SpectralField::zero(state.grid);
  for (int k = 0; k < levels; ++k) nu_bar = nu_bar + (0.5 * h) * state.w1[static_cast<size_t>(k)];
  const std::vector<Vec2> limit = k0(state.curve, nu_bar, total, cfg).v;
  const std::vector<Vec2> mid_tangent = offset_tangent(cache, nu_bar);

  std::vector<std::vector<Vec2>> u;
  u.reserve(static_cast<size_t>(levels));
  for (int k = 0; k < levels; ++k) u.push_back(assemble_velocity(state, k, cache, cfg).v);
  const std::vector<Vec2>& outer = u.front();
  const std::vector<Vec2>& inner = u.back();

  JumpObservation obs;
  obs.epsilon = state.epsilon;
  for (int j = 0; j < n; ++j) {
    const auto m = static_cast<size_t>(j);
    obs.mean_vs_limit = std::max(obs.mean_vs_limit, norm(0.5 * (outer[m] + inner[m]) - limit[m]));
    const Vec2 e = mid_tangent[m];
    const double jump = dot(outer[m] - inner[m], e) / norm_sq(e);
    obs.jump_vs_density = std::max(obs.jump_vs_density, std::abs(jump - total.value(j)));
  }

  // Signed aggregate on the far side of each layer: positive layer indices
  // sit deeper along the normal, so their density is enclosed by layer l.
  for (int l = 0; l < levels; ++l) {
    SpectralField signed_far = SpectralField::zero(state.grid);
    for (int mu = 0; mu < levels; ++mu) {
      if (mu == l) continue;
      const double sign = mu > l ? 1.0 : -1.0;
      signed_far = signed_far + (sign * h) * state.w4[static_cast<size_t>(mu)];
    }
    double worst = 0.0;
    const std::vector<Vec2>& ul = u[static_cast<size_t>(l)];
    for (int j = 0; j < n; ++j) {
      const auto m = static_cast<size_t>(j);
      const Vec2 e = mid_tangent[m];
      const Vec2 correction = (signed_far.value(j) / (2.0 * norm_sq(e))) * e;
      worst = std::max(worst, norm(ul[m] - limit[m] - correction));
    }
    obs.corrected_worst = std::max(obs.corrected_worst, worst);
  }
  return obs;
}

JumpTestReport jump_relation_test(const ExperimentSpec& spec) {
  check_spec(spec);
  JumpTestReport report;
  std::vector<std::pair<double, double>> mean_pairs, corrected_pairs;
  for (double eps : spec.epsilons) {
    const LayeredState state = build_experiment_state(spec, eps);
    const JumpObservation obs = jump_observation(state, spec.evolution.kernel);
    report.points.push_back(obs);
    mean_pairs.emplace_back(eps, obs.mean_vs_limit);
    corrected_pairs.emplace_back(eps, obs.corrected_worst);
  }
  // A fit needs three family members and strictly positive discrepancies;
  // degenerate families (everything zero, e.g. a zero aggregate) keep the
  // default empty fit so the observations alone tell the story.
  const auto fit_if_possible = [&](const std::vector<std::pair<double, double>>& pairs,
                                   RateFit& fit) {
    bool positive = pairs.size() >= 3;
    for (const auto& [eps, err] : pairs) positive = positive && err > 0.0;
    if (positive) fit = rate_fit(pairs);
  };
  fit_if_possible(mean_pairs, report.mean_rate);
  fit_if_possible(corrected_pairs, report.corrected_rate);
  return report;
}

ConservationReport conservation_monitor(const Trajectory& traj) {
  ConservationReport report;
  if (traj.snapshots.empty()) return report;
  const LayeredState& first = traj.snapshots.front();
  const int levels = first.n_layers;
  const double h = first.layer_spacing();
  std::vector<double> base(static_cast<size_t>(levels));
  double base_total = 0.0;
  for (int k = 0; k < levels; ++k) {
    base[static_cast<size_t>(k)] = first.w4[static_cast<size_t>(k)].mean();
    base_total += h * base[static_cast<size_t>(k)];
  }
  for (const auto& step : traj.steps) {
    report.times.push_back(step.time);
    std::vector<double> drift(static_cast<size_t>(levels), 0.0);
    double total = 0.0;
    for (int k = 0; k < levels; ++k) {
      const auto m = static_cast<size_t>(k);
      drift[m] = std::abs(step.circulation[m] - base[m]);
      total += h * step.circulation[m];
      report.max_layer_drift = std::max(report.max_layer_drift, drift[m]);
    }
    report.total_drift.push_back(std::abs(total - base_total));
    report.max_total_drift = std::max(report.max_total_drift, report.total_drift.back());
    report.layer_drift.push_back(std::move(drift));
  }
  return report;
}

WidthSeries support_width_monitor(const Trajectory& traj) {
  WidthSeries series;
  if (traj.snapshots.empty()) return series;
  const LayeredState& first = traj.snapshots.front();
  series.epsilon = first.epsilon;
  series.times.push_back(first.time);
  series.width.push_back(support_width(first));
  for (const auto& step : traj.steps) {
    series.times.push_back(step.time);
    series.width.push_back(step.support_width);
  }
  for (double w : series.width) series.max_ratio = std::max(series.max_ratio, w / series.epsilon);
  return series;
}

}  // namespace vlx
