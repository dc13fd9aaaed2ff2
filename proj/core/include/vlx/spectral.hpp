#pragma once

// Periodic pseudo-spectral toolbox on the unit-period torus.
//
// Conventions used across the library:
//   * Grid nodes are s_j = j/N for j = 0..N-1 with N even and >= 8.
//   * Modes follow f(s) = sum_k fhat_k exp(2*pi*i*k*s) with the discrete
//     coefficients fhat_k = (1/N) sum_j f(s_j) exp(-2*pi*i*k*s_j).  Mode
//     arrays are stored in FFT index order: slot j holds wavenumber j for
//     j < N/2 and wavenumber j - N for j >= N/2 (so slot N/2 is the
//     Nyquist wavenumber -N/2).
//   * Differentiation multiplies mode k by (2*pi*i*k); the Nyquist mode is
//     zeroed because its derivative has no consistent real representation.
//   * Analytic continuation to s + i*beta scales mode k by exp(-2*pi*k*beta).

#include <complex>
#include <functional>
#include <vector>

#include "vlx/errors.hpp"

namespace vlx {

/// Uniform grid on the unit-period torus: nodes s_j = j/N.
class PeriodicGrid {
 public:
  /// Throws InvalidArgument unless n is even and at least 8.
  explicit PeriodicGrid(int n);

  int size() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  double node(int j) const { return static_cast<double>(j) / n_; }

  /// Wavenumber stored in mode slot j (see file header).
  int wavenumber(int j) const { return j < n_ / 2 ? j : j - n_; }

  /// Torus distance between nodes j and k, always in [0, 1/2].
  double node_distance(int j, int k) const;

  friend bool operator==(const PeriodicGrid&, const PeriodicGrid&) = default;

 private:
  int n_;
};

/// Real periodic field sampled on a PeriodicGrid, with its discrete Fourier
/// modes computed eagerly at construction.  Values and modes always agree;
/// the mode array of a real field is conjugate-symmetric.  Instances are
/// immutable: operations return new fields.
class SpectralField {
 public:
  SpectralField(PeriodicGrid grid, std::vector<double> values);

  static SpectralField zero(PeriodicGrid grid);
  static SpectralField constant(PeriodicGrid grid, double c);
  /// Sample fn at every grid node.
  static SpectralField sample(PeriodicGrid grid, const std::function<double(double)>& fn);
  /// Build a field from a conjugate-symmetric mode array in FFT index
  /// order.  Throws InvalidArgument if the array length differs from the
  /// grid size or the symmetry defect exceeds 1e-12 of the largest mode.
  static SpectralField from_modes(PeriodicGrid grid, const std::vector<std::complex<double>>& modes);

  const PeriodicGrid& grid() const { return grid_; }
  int size() const { return grid_.size(); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::complex<double>>& modes() const { return modes_; }
  double value(int j) const { return values_[j]; }

  double mean() const { return modes_[0].real(); }
  double max_abs() const;

  /// Trigonometric interpolation at an arbitrary parameter (O(N) sum).
  double eval(double s) const;
  /// Analytic continuation to a complex parameter (O(N) sum).
  std::complex<double> eval(std::complex<double> z) const;

  /// Field of samples f(s_j + delta), computed by a spectral phase shift.
  /// The Nyquist mode is dropped unless delta is a whole number of nodes.
  SpectralField shifted(double delta) const;

 private:
  SpectralField(PeriodicGrid grid, std::vector<double> values,
                std::vector<std::complex<double>> modes);

  PeriodicGrid grid_;
  std::vector<double> values_;
  std::vector<std::complex<double>> modes_;
};

// Pointwise arithmetic in value space (modes recomputed eagerly).
SpectralField operator+(const SpectralField& a, const SpectralField& b);
SpectralField operator-(const SpectralField& a, const SpectralField& b);
SpectralField operator*(const SpectralField& a, const SpectralField& b);
SpectralField operator*(double c, const SpectralField& a);
SpectralField operator+(const SpectralField& a, double c);

/// Spectral derivative of the given order: mode k multiplied by
/// (2*pi*i*k)^order, Nyquist zeroed.  order >= 1.
SpectralField spectral_derivative(const SpectralField& f, int order = 1);

/// The same band-limited function sampled on a finer grid (zero-padded
/// modes; the source Nyquist mode is split symmetrically between +N/2 and
/// -N/2, the standard real-valued interpolant).  Values at the original
/// nodes are preserved exactly.  The target grid must not be smaller.
SpectralField resample(const SpectralField& f, const PeriodicGrid& target);

/// Complex samples of a field continued to the horizontal line
/// Im(s) = beta of the analyticity strip.
struct StripSample {
  PeriodicGrid grid;
  double beta;
  std::vector<std::complex<double>> values;  // f(s_j + i*beta)
};

struct StripOptions {
  /// Continuation aborts (NumericalFailure) when any scaled mode magnitude
  /// |fhat_k| * exp(2*pi*|k*beta|) exceeds this cap.
  double mode_cap = 1e8;
};

/// Evaluate the field on the line Im(s) = beta by mode scaling.
StripSample shift_to_strip(const SpectralField& f, double beta, const StripOptions& opts = {});

/// Zero every mode with magnitude below the threshold (and only those), the
/// standard guard against round-off noise feeding spurious growth in
/// interface computations.  Idempotent.  threshold <= 0 returns f unchanged.
SpectralField krasny_filter(const SpectralField& f, double threshold);

struct RadiusFitOptions {
  /// Modes below noise_floor_rel * max |fhat| are excluded from the fit.
  double noise_floor_rel = 1e-12;
  /// Reported when the spectrum ends in a cliff too steep to measure, and
  /// upper bound for the fitted value.
  double max_radius = 1.0;
  /// Fewer usable wavenumbers than this makes the fit indeterminate.
  int min_usable = 4;
  /// Cliff rule: if the fit over-predicts the first below-floor mode by
  /// more than this factor times the floor, decay is immeasurably fast.
  double cliff_factor = 1e3;
};

struct RadiusFit {
  double value = 0.0;        ///< estimated strip half-width (max_radius if capped)
  bool indeterminate = false;///< too few usable modes to fit
  bool capped = false;       ///< decay exceeded the measurable range
  int usable_modes = 0;      ///< wavenumbers that entered the fit
  double residual = 0.0;     ///< rms residual of the least-squares line
};

/// Estimate the analyticity-strip half-width from the decay of the mode
/// magnitudes: least-squares slope of log|fhat_k| against k over usable
/// wavenumbers, divided by -2*pi.
RadiusFit estimate_analyticity_radius(const SpectralField& f, const RadiusFitOptions& opts = {});

/// sup over a uniform n_beta-point grid of beta in [-rho, rho] of
///   max_j |f(s_j + i*beta)|
///   + max over node pairs of |f(s_j+i*beta) - f(s_k+i*beta)| / dist^(1/2),
/// dist the torus distance between the nodes (always <= 1/2).  n_beta = 1
/// evaluates the real line only.  Nondecreasing in rho for fixed n_beta.
double strip_holder_norm(const SpectralField& f, double rho, int n_beta = 7,
                         const StripOptions& opts = {});

}  // namespace vlx
