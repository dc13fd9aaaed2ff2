// Layered sheet dynamics over a fixed base curve.
//
// State: L layers indexed by midpoint nodes l_k = -1 + (2k+1)/L on [-1, 1],
// each carrying three periodic fields over the base parameter s:
//   w1 = nu      normal offset of the layer from the base curve,
//   w3           deviation of the layer thickness density (d eta / d l),
//   w4 = varpi   vortex-sheet density of the layer (per unit parameter).
// The offset slope w2 = d(w1)/ds is never stored: it is re-derived
// spectrally wherever needed, which keeps the pair (w1, w2) consistent by
// construction.
//
// The layer at l moves with the assembled velocity U(l) = sum over source
// layers of (2/L) * layer_kernel(source -> l), where the target offset of
// the pair (l, source) is nu_source - eps * g and g integrates (1 + w3)
// from l to the source layer (midpoint-trapezoid in l, exact on
// constants).  Evolution:
//   d w1 / dt = U.n - U.s w2
//   d w3 / dt = (metric . U)(1 + w3) - d/ds [ U.s (1 + w3) ]
//   d w4 / dt = - d/ds [ U.s w4 ]
// with U.n, U.s the tubular-frame components at depth n = w1 and
// metric = d/ds (e_s/|e_s|^2).  The d/ds-form of the transport terms makes
// every layer circulation (the s-mean of w4) a discrete invariant.
//
// Time stepping is classic fourth-order Runge-Kutta with a CFL-limited
// step, followed by small-mode filtering of every field.

#pragma once

#include <string>
#include <vector>

#include "vlx/geometry.hpp"
#include "vlx/kernels.hpp"
#include "vlx/spectral.hpp"
#include "vlx/vec2.hpp"

namespace vlx {

struct LayeredState {
  CurveSpec curve;
  double epsilon;
  int n_layers;
  PeriodicGrid grid;
  std::vector<SpectralField> w1, w3, w4;  // one field per layer
  std::vector<char> active;               // layers whose density was nonzero initially
  double time = 0.0;

  double layer_node(int k) const { return -1.0 + (2.0 * k + 1.0) / n_layers; }
  double layer_spacing() const { return 2.0 / n_layers; }
  SpectralField derived_w2(int k) const { return spectral_derivative(w1[static_cast<size_t>(k)]); }
};

// Initial data: layer offsets eps * (l_k + eta0(s)), flat thickness
// (w3 = 0), densities varpi0[k].  Layers with |l_k| >= 1/2 must carry zero
// density (the regularization is supported in the inner half of the tube).
LayeredState build_initial_state(const CurveSpec& curve, double epsilon, int n_layers,
                                 const PeriodicGrid& grid, const SpectralField& eta0,
                                 const std::vector<SpectralField>& varpi0);

// Integrated thickness field g(s) = integral of (1 + w3) in the layer
// variable from node i to node j (signed; midpoint-trapezoid with half
// weights at both ends, exact for constant integrands and additive over
// concatenated index ranges).
SpectralField thickness_integral(const LayeredState& state, int from, int to);

// Largest violation of the layer coupling nu_j - nu_i = eps * g(i -> j)
// over all layer pairs and nodes.  Zero for perfectly admissible states.
double admissibility_residual(const LayeredState& state);

// Re-anchors every layer's nu onto the layer coupling, keeping the per-node
// mean of nu across layers fixed.  Afterwards the admissibility residual is
// at round-off level.  Thickness slopes and sheet densities are untouched,
// so circulation and the transported profiles are unaffected.
void project_onto_coupling(LayeredState& state);

// Base-curve samples reused across every kernel evaluation of a run (the
// base curve never changes during evolution).
struct CurveCache {
  BaseCurveSamples base;
  std::vector<Vec2> d1, d2, d3;  // curve derivatives at the grid nodes
};
CurveCache make_curve_cache(const CurveSpec& curve, const PeriodicGrid& grid);

struct EvolutionConfig {
  double t_end = 0.0;
  double dt = 0.0;                   // 0: automatic CFL step
  double cfl_safety = 0.8;
  double filter_threshold = 1e-12;   // absolute Krasny filter level (<= 0: off)
  double resolution_constant = 1.0;  // require N >= c / (eps * layer spacing)
  double max_velocity_cap = 100.0;   // halt when any |U| exceeds this
  double residual_cap = 1e-3;        // halt when admissibility drifts this far
  int checkpoint_stride = 0;         // snapshot every k accepted steps (0: ends only)
  // Re-anchor nu onto the layer coupling after every accepted step.  The
  // default only monitors the coupling, whose residual otherwise grows like
  // t * (layer spacing)^2 through the layer-direction quadrature.
  bool project_admissibility = false;
  KernelEvalConfig kernel;
};

// Velocity of the layer with index `layer` under the full layered kernel.
VecSamples assemble_velocity(const LayeredState& state, int layer, const CurveCache& cache,
                             const KernelEvalConfig& kernel_cfg);

// Tubular-frame components of a velocity sample along a layer at offset nu:
// normal component, metric-normalized tangential component, and the
// curvature correction (metric derivative dotted with U).
struct FrameComponents {
  SpectralField normal;
  SpectralField tangential;
  SpectralField metric_dot;
};
FrameComponents project_components(const CurveCache& cache, const SpectralField& nu,
                                   const VecSamples& u);

// Time derivative of one layer's fields.
struct LayerDeriv {
  SpectralField dw1, dw3, dw4;
};

// Full right-hand side; also reports the largest velocity magnitude met
// (for CFL control).  Throws NumericalFailure when the frame degenerates,
// the thickness turns nonpositive, or the velocity cap is exceeded.
struct RhsResult {
  std::vector<LayerDeriv> deriv;
  double max_speed = 0.0;
};
RhsResult layered_rhs(const LayeredState& state, const CurveCache& cache,
                      const EvolutionConfig& cfg);

// One classic Runge-Kutta step of size dt, followed by mode filtering.
LayeredState rk4_step(const LayeredState& state, const CurveCache& cache,
                      const EvolutionConfig& cfg, double dt);

struct StepDiagnostics {
  double time = 0.0;        // state time after the step
  double dt = 0.0;
  double max_speed = 0.0;   // over all layers, at the step start
  double admissibility = 0.0;
  double min_radius = 0.0;  // smallest fitted analyticity radius over fields
  double support_width = 0.0;
  std::vector<double> circulation;  // per-layer mean of w4
};

struct Trajectory {
  std::vector<LayeredState> snapshots;  // initial, per-stride checkpoints, final
  std::vector<StepDiagnostics> steps;
  bool completed = false;
  std::string halt_reason;  // empty when completed
};

// Integrate to cfg.t_end.  A guard tripping mid-step truncates the
// trajectory to the completed prefix and records the reason instead of
// propagating the failure.  Throws InvalidArgument up front when the grid
// cannot resolve the layer gaps (resolution_constant).
Trajectory integrate(const LayeredState& initial, const EvolutionConfig& cfg);

// Single-sheet reference in graph form over the same base curve: offset
// field nu and density varpi with
//   d nu / dt    = u.n - u.s d(nu)/ds,
//   d varpi / dt = - d/ds (u.s varpi),
// where u is the principal-value sheet velocity of the graph curve.
struct GraphState {
  SpectralField nu, varpi;
  double time = 0.0;
};

struct GraphTrajectory {
  std::vector<GraphState> snapshots;
  std::vector<StepDiagnostics> steps;  // admissibility unused (zero)
  bool completed = false;
  std::string halt_reason;
};

GraphTrajectory integrate_reference(const CurveSpec& curve, const GraphState& initial,
                                    const EvolutionConfig& cfg);

// Diagnostics for the support of the regularization: the largest normal
// thickness of the band covered by the density-carrying layers, measured
// node by node so the stack's bulk motion does not count as width.
double support_width(const LayeredState& state);

// Monte-Carlo certificate for the layer kernel: minimum complexified
// distance ratio over random (s, sigma, beta, layer pair) samples within
// the strip |beta| <= rho.  Positive minima certify integrability.
struct LowerBoundReport {
  double min_ratio = 0.0;
  double s = 0.0, sigma = 0.0, beta = 0.0;
  int layer = 0, source_layer = 0;
  int n_samples = 0;
};
LowerBoundReport kernel_lower_bound_check(const LayeredState& state, double rho, int n_samples,
                                          unsigned long long seed);

}  // namespace vlx
