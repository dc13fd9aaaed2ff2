// Closed analytic curves on the periodic parameter circle and the tubular
// coordinate machinery built on top of them.
//
// Conventions
//   * A fitted curve (CurveSpec) is always positively oriented (encloses
//     positive signed area), parametrized by arclength at unit speed, and
//     scaled to total length 1, so the parameter s in [0,1) *is* arc
//     length and |curve'(s)| == 1 identically.
//   * The unit normal is e_n(s) = perp(curve'(s)), which points into the
//     enclosed region for a positively oriented curve.  Tubular charts map
//     (s, n) to curve(s) + n * e_n(s).
//   * Fourier coefficients are stored in FFT index order (see
//     spectral.hpp); the Nyquist slot is zeroed when fitting so that
//     derivatives stay unambiguous.

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "vlx/spectral.hpp"
#include "vlx/vec2.hpp"

namespace vlx {

// Raw closed-curve input: real cosine/sine coefficient tables, indexed by
// wavenumber from 0, for each component:
//   x(t) = sum_k x_cos[k] cos(2 pi k t) + x_sin[k] sin(2 pi k t).
// Arrays may have different lengths; missing entries are zero.  Entry 0 of
// a sine table must be zero if present.
struct CurveCoefficients {
  std::vector<double> x_cos, x_sin, y_cos, y_sin;
};

// Built-in shapes (all get normalized by reparametrize_arclength, so only
// shape ratios matter, not overall scale).
CurveCoefficients circle_coefficients();
CurveCoefficients ellipse_coefficients(double semi_axis_x, double semi_axis_y);
// Radial perturbation r(t) = 1 + amplitude * cos(2 pi wavenumber t) of the
// unit circle; requires wavenumber >= 2 and |amplitude| < 1.
CurveCoefficients perturbed_circle_coefficients(double amplitude, int wavenumber);

struct CurveSamples {
  SpectralField x, y;
};

// A fitted closed curve: unit-speed, unit-length, positively oriented.
class CurveSpec {
 public:
  // Number of retained Fourier modes (even, >= 8).
  int n_modes() const { return n_modes_; }
  // Analyticity radius associated with the parametrization (either supplied
  // by the caller at fit time or estimated from coefficient decay).
  double rho0() const { return rho0_; }
  const std::vector<std::complex<double>>& modes_x() const { return cx_; }
  const std::vector<std::complex<double>>& modes_y() const { return cy_; }

  // Point or derivative at parameter s: deriv = 0 is the point, 1 the
  // tangent, 2 and 3 higher derivatives.
  Vec2 point(double s, int deriv = 0) const;
  // Analytic continuation to complex parameter z = s + i*beta.
  ComplexVec2 point(std::complex<double> z, int deriv = 0) const;

  // Resample the curve (or a derivative) onto a grid with size >= n_modes(),
  // optionally at nodes shifted by a constant parameter offset.
  CurveSamples sample(const PeriodicGrid& grid, int deriv = 0, double shift = 0.0) const;

  double signed_area() const;

  // Used by the fitter; not meant for direct construction.
  CurveSpec(std::vector<std::complex<double>> cx, std::vector<std::complex<double>> cy,
            double rho0);

 private:
  int n_modes_;
  std::vector<std::complex<double>> cx_, cy_;
  double rho0_;
};

// Fit a unit-speed parametrization with n_modes Fourier modes to the raw
// curve: flips orientation if needed, rescales to total length 1, inverts
// the arclength function by Newton iteration, and verifies the fitted speed
// is 1 within 1e-8 (throws InvalidArgument otherwise -- raise n_modes for
// strongly non-circular shapes).  rho0 > 0 overrides the estimated
// analyticity radius carried by the result.
CurveSpec reparametrize_arclength(const CurveCoefficients& raw, int n_modes,
                                  double rho0 = 0.0);

// Local frame of the tubular chart at (s, n):
//   e_n               unit normal (independent of n),
//   e_s               tangent of the level line n = const,
//   e_s_norm_sq       |e_s|^2,
//   d_metric          derivative in s of e_s / |e_s|^2 at fixed n.
// Throws InvalidArgument when |e_s|^2 < 1/4 (chart too distorted: |n| is
// beyond the curvature-limited tube).
struct FrameSample {
  Vec2 e_s;
  Vec2 e_n;
  Vec2 d_metric;
  double e_s_norm_sq;
};
FrameSample frame(const CurveSpec& curve, double s, double n);

// Chart map (s, n) -> curve(s) + n * e_n(s).
Vec2 chart_point(const CurveSpec& curve, double s, double n);

// Inverse chart: nearest-point coordinates of p, solved by Newton iteration
// seeded from the closest dense-grid node.  Throws NumericalFailure if the
// iteration does not reach |residual| <= 1e-12 within 50 steps (p too far
// from the tube or chart folded).
struct TubularCoordinates {
  double s;
  double n;
};
TubularCoordinates tubular_coordinates(const CurveSpec& curve, Vec2 p);

// Largest tube half-width the chart supports: 0.9 * min(1/max|curve''|,
// half the minimum distance between parameter-separated points).  Points
// with |n| below this bound have a well-defined inverse chart.
double max_tube_radius(const CurveSpec& curve);

// Minimum of the complexified squared chord Re[(dx)^2 + (dy)^2] over node
// pairs at parameter distance >= delta and strip lines |beta| <= rho.  A
// positive margin certifies the curve stays embedded (no self-intersection
// or pinching) throughout the strip; the argmin is reported for diagnosis.
struct SelfIntersectionReport {
  double margin;
  double s;
  double alpha;
  double beta;
};
SelfIntersectionReport check_no_self_intersection(const CurveSpec& curve, double rho,
                                                  double delta, int n_beta = 7);

}  // namespace vlx
