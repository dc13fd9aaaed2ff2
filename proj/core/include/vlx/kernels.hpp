// Singular integral kernels on closed curves: the point-vortex kernel, the
// principal-value velocity of a vortex sheet, and the pairwise interaction
// of offset layers over a common base curve.
//
// Quadrature rules
//   * AlternatePoint (default): targets at grid nodes, sources at half-
//     shifted nodes.  The symmetric principal value of the sheet kernel is
//     then integrated with spectral accuracy (the odd singular part cancels
//     pairwise, the rest is a smooth periodic trapezoid sum).
//   * SkipDiagonal: plain trapezoid over grid nodes with the diagonal term
//     omitted.  Low-order; kept as an independent cross-check.
//   * Distinct layers (and off-sheet targets) see a smooth but nearly
//     singular kernel whose trapezoid tail decays like exp(-2 pi M d) in
//     the source-node count M and the separation d.  Because every field
//     involved is band-limited, the source grid can be refined exactly by
//     spectral upsampling; these paths pick M from the observed minimum
//     separation so the tail lands at round-off, and refuse (throwing
//     NumericalFailure) when that would take more than 64x the base grid.
//
// Densities are per unit parameter: velocity(x) = integral of
// biot_savart(x - y(s)) * density(s) ds over one period.

#pragma once

#include <complex>
#include <vector>

#include "vlx/geometry.hpp"
#include "vlx/spectral.hpp"
#include "vlx/vec2.hpp"

namespace vlx {

enum class PvRule { AlternatePoint, SkipDiagonal };

struct KernelEvalConfig {
  PvRule pv_rule = PvRule::AlternatePoint;
  // A source closer to a target than this fraction of the grid spacing
  // means the discretization has collapsed; evaluation throws
  // NumericalFailure instead of returning garbage.
  double near_coincidence_factor = 1e-3;
  int threads = 1;
};

// Velocity induced at x by a unit point vortex at the origin:
// perp(x) / (2 pi |x|^2).  Throws InvalidArgument at the origin.
Vec2 biot_savart(Vec2 x);

// Bilinear (non-Hermitian) dot product of complexified vectors.
std::complex<double> complex_dot(ComplexVec2 a, ComplexVec2 b);

// Principal square root of complex_dot(z, z): the analytic continuation of
// the Euclidean length.  Throws NumericalFailure when Re(z . z) <= 0 (the
// continued distance has left the regime comparable to a real distance).
std::complex<double> complexified_modulus(ComplexVec2 z);

struct VecSamples {
  PeriodicGrid grid;
  std::vector<Vec2> v;
};

// Principal-value sheet velocity on the curve itself: for each node j,
//   U_j = p.v. integral of biot_savart(curve(s_j) - curve(s)) density(s) ds,
// with the rule chosen in cfg.  The curve samples and the density must
// share one grid.
VecSamples br_operator(const CurveSamples& curve, const SpectralField& density,
                       const KernelEvalConfig& cfg = {});

// Velocity induced by a sheet at arbitrary points off the sheet.  The
// source grid is refined (see the header note) until the trapezoid tail
// for the closest target is negligible; throws NumericalFailure if a
// target sits too close to the sheet for that to succeed.
std::vector<Vec2> induced_velocity(const CurveSamples& source, const SpectralField& density,
                                   const std::vector<Vec2>& targets,
                                   const KernelEvalConfig& cfg = {});

// Base-curve samples shared by all layer-kernel evaluations of one right-
// hand side: positions and tangents at grid nodes and at half-shifted
// nodes (the latter feed the alternate-point rule).
struct BaseCurveSamples {
  PeriodicGrid grid;
  std::vector<Vec2> gamma, tangent;      // at nodes
  std::vector<Vec2> gamma_h, tangent_h;  // at half-shifted nodes
};
BaseCurveSamples sample_base_curve(const CurveSpec& curve, const PeriodicGrid& grid);

// Interaction of one source layer with one target layer over a common base
// curve.  Target points sit at offset nu_target(s) along the base normal;
// source points at offset nu_source(s) carry density varpi_source.  With
// same_layer = true the principal value is taken (nu_target and nu_source
// must then describe the same layer); otherwise the layers must be
// disjoint and the trapezoid runs on a source grid refined to match their
// minimum normal gap (touching layers throw NumericalFailure).
VecSamples layer_kernel(const BaseCurveSamples& base, const SpectralField& nu_target,
                        const SpectralField& nu_source, const SpectralField& varpi_source,
                        bool same_layer, const KernelEvalConfig& cfg = {});

// Sheet velocity of a single layer in graph form over the base curve:
// the curve Gamma + nu * perp(Gamma') carrying density varpi.
VecSamples k0(const CurveSpec& curve, const SpectralField& nu, const SpectralField& varpi,
              const KernelEvalConfig& cfg = {});

// Complexified squared displacement between a target point on the layer at
// flat separation flat_sep from the source layer (offset field nu_source,
// integrated thickness field g) relative to the flat tube metric:
//   ratio = Re <d, d> / (dist_T(sigma)^2 + eps^2 flat_sep^2),
// evaluated at z = s + i beta, source parameter z + sigma.  A uniform
// positive lower bound on this ratio over samples certifies the layer
// kernel stays integrable throughout the analyticity strip.
double layer_distance_ratio(const CurveSpec& curve, const SpectralField& nu_source,
                            const SpectralField& g_thickness, double epsilon,
                            double flat_sep, double s, double sigma, double beta);

}  // namespace vlx
