// Desk-scale experiments that turn the model's limit statements into
// measured numbers:
//
//  - convergence: run the layered family at a decreasing list of tube
//    thicknesses against the single-sheet reference evolved once, measure
//    sup-norm errors of the layer offsets and of the aggregated density at
//    fixed comparison times, and fit log-log rates in epsilon;
//
//  - jump relations: on a static layered state, compare the two-sided mean
//    of the assembled velocity across the stack with the limit kernel of
//    the aggregated sheet, the per-layer velocity with the limit kernel
//    plus the classical single-layer jump correction, and the outer-minus-
//    inner tangential jump with the aggregated density itself;
//
//  - monitors: per-layer circulation drift and supported tube width along
//    recorded trajectories.

#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vlx/dynamics.hpp"
#include "vlx/geometry.hpp"
#include "vlx/kernels.hpp"
#include "vlx/spectral.hpp"

namespace vlx {

// One family of runs sharing the curve, grids, and profiles across the
// epsilon list.
struct ExperimentSpec {
  CurveSpec curve;
  int n_points = 256;  // shared s-grid for every run and the reference
  int n_layers = 8;
  std::vector<double> epsilons;          // strictly decreasing, all positive
  std::vector<double> comparison_times;  // strictly increasing, all positive
  std::function<double(double)> eta0;       // initial offset profile; null = 0
  std::function<double(double)> aggregate;  // total sheet density as a function of s
  // Density profile across layers chi(l).  Must vanish for |l| >= 1/2; the
  // builder normalizes it so the layer quadrature of chi is exactly 1 and
  // the layered densities aggregate to `aggregate` exactly.  Null selects
  // the smooth bump cos^2(pi l) on |l| < 1/2.
  std::function<double(double)> profile;
  EvolutionConfig evolution;  // per-run settings; t_end is taken per leg
};

// Layered initial state of the family member at the given epsilon.
LayeredState build_experiment_state(const ExperimentSpec& spec, double epsilon);

// Single-sheet initial state the family converges to: zero offset carrying
// the aggregate density.
GraphState build_reference_state(const ExperimentSpec& spec);

// Least-squares slope of log(error) against log(epsilon).
struct RateFit {
  double slope = 0.0;
  double residual = 0.0;  // root-mean-square residual of the log-log fit
  int n = 0;
};
// Requires at least three pairs with positive entries.
RateFit rate_fit(const std::vector<std::pair<double, double>>& pairs);

struct ConvergencePoint {
  double epsilon = 0.0;
  double time = 0.0;
  double e_nu = 0.0;     // sup over layers of the offset error vs the reference
  double e_varpi = 0.0;  // aggregated-density error vs the reference
};
struct ConvergenceReport {
  std::vector<ConvergencePoint> points;
  std::vector<double> comparison_times;
  // One fit per comparison time reached by at least three runs: e_nu+e_varpi
  // against epsilon.  Entries for unreachable or under-populated times keep
  // n < 3 and carry a warning.
  std::vector<RateFit> rates;
  std::vector<double> width_ratio;  // per epsilon: max over time of width/epsilon
  std::vector<std::string> warnings;
};
// Runs the layered dynamics once per epsilon and the reference once,
// comparing at the requested times.  Early halts truncate that run's
// comparisons and are recorded as warnings, never as errors.
ConvergenceReport run_convergence(const ExperimentSpec& spec);

// Velocity jump diagnostics of one layered state.
struct JumpObservation {
  double epsilon = 0.0;
  // Two-sided mean across the stack against the limit kernel of the
  // aggregated sheet at the mean offset.
  double mean_vs_limit = 0.0;
  // Worst per-layer discrepancy after removing the classical single-layer
  // jump: velocity at layer l, minus the limit kernel, minus the mid-curve
  // tangent times half the signed aggregate on the far side of l.
  double corrected_worst = 0.0;
  // Outer-minus-inner tangential velocity jump against the aggregate.
  double jump_vs_density = 0.0;
};
JumpObservation jump_observation(const LayeredState& state, const KernelEvalConfig& cfg = {});

struct JumpTestReport {
  std::vector<JumpObservation> points;  // one per epsilon, in spec order
  // Rate fits over the family; left empty (n = 0) when fewer than three
  // members exist or a discrepancy vanishes (nothing to fit in log scale).
  RateFit mean_rate;       // mean_vs_limit against epsilon
  RateFit corrected_rate;  // corrected_worst against epsilon
};
// Evaluates jump_observation on the static initial state of each family
// member and fits both discrepancies against epsilon.
JumpTestReport jump_relation_test(const ExperimentSpec& spec);

struct ConservationReport {
  std::vector<double> times;                     // recorded step times
  std::vector<std::vector<double>> layer_drift;  // [time][layer] vs the initial state
  std::vector<double> total_drift;               // layer-quadrature total per time
  double max_layer_drift = 0.0;
  double max_total_drift = 0.0;
};
ConservationReport conservation_monitor(const Trajectory& traj);

struct WidthSeries {
  double epsilon = 0.0;
  std::vector<double> times;  // initial time followed by recorded steps
  std::vector<double> width;  // supported tube width at those times
  double max_ratio = 0.0;     // max over times of width/epsilon
};
WidthSeries support_width_monitor(const Trajectory& traj);

}  // namespace vlx
