#include "vlx/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "fft_backend.hpp"

namespace vlx {
namespace detail {

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// FFTW planning is process-global state; serialize it and reuse plans.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanPair get(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch_in(n), scratch_out(n);
    auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
    auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
    PlanPair p;
    p.forward = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.inverse = fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(n, p);
    return p;
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::unordered_map<int, PlanPair> plans_;
};

}  // namespace

void fft_forward(int n, const std::complex<double>* in, std::complex<double>* out) {
  PlanPair p = PlanCache::instance().get(n);
  fftw_execute_dft(p.forward,
                   reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void fft_inverse(int n, const std::complex<double>* in, std::complex<double>* out) {
  PlanPair p = PlanCache::instance().get(n);
  fftw_execute_dft(p.inverse,
                   reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace detail

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<std::complex<double>> modes_from_values(const PeriodicGrid& grid,
                                                    const std::vector<double>& values) {
  const int n = grid.size();
  std::vector<std::complex<double>> in(n), out(n);
  for (int j = 0; j < n; ++j) in[j] = values[j];
  detail::fft_forward(n, in.data(), out.data());
  const double scale = 1.0 / n;
  for (auto& m : out) m *= scale;
  return out;
}

/// Inverse transform of a mode array; returns the real parts.  The caller
/// guarantees the modes are (numerically) conjugate-symmetric.
std::vector<double> values_from_modes(const PeriodicGrid& grid,
                                      const std::vector<std::complex<double>>& modes) {
  const int n = grid.size();
  std::vector<std::complex<double>> out(n);
  detail::fft_inverse(n, modes.data(), out.data());
  std::vector<double> values(n);
  for (int j = 0; j < n; ++j) values[j] = out[j].real();
  return values;
}

}  // namespace

// ---------------------------------------------------------------------------
// PeriodicGrid
// ---------------------------------------------------------------------------

PeriodicGrid::PeriodicGrid(int n) : n_(n) {
  if (n < 8 || n % 2 != 0) {
    std::ostringstream msg;
    msg << "PeriodicGrid: size must be even and >= 8, got " << n;
    throw InvalidArgument(msg.str());
  }
}

double PeriodicGrid::node_distance(int j, int k) const {
  int d = std::abs(j - k) % n_;
  d = std::min(d, n_ - d);
  return static_cast<double>(d) / n_;
}

// ---------------------------------------------------------------------------
// SpectralField
// ---------------------------------------------------------------------------

SpectralField::SpectralField(PeriodicGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != grid_.size()) {
    throw InvalidArgument("SpectralField: value count does not match grid size");
  }
  modes_ = modes_from_values(grid_, values_);
}

SpectralField::SpectralField(PeriodicGrid grid, std::vector<double> values,
                             std::vector<std::complex<double>> modes)
    : grid_(grid), values_(std::move(values)), modes_(std::move(modes)) {}

SpectralField SpectralField::zero(PeriodicGrid grid) {
  return {grid, std::vector<double>(grid.size(), 0.0),
          std::vector<std::complex<double>>(grid.size(), {0.0, 0.0})};
}

SpectralField SpectralField::constant(PeriodicGrid grid, double c) {
  std::vector<std::complex<double>> modes(grid.size(), {0.0, 0.0});
  modes[0] = c;
  return {grid, std::vector<double>(grid.size(), c), std::move(modes)};
}

SpectralField SpectralField::sample(PeriodicGrid grid, const std::function<double(double)>& fn) {
  std::vector<double> v(grid.size());
  for (int j = 0; j < grid.size(); ++j) v[j] = fn(grid.node(j));
  return SpectralField(grid, std::move(v));
}

SpectralField SpectralField::from_modes(PeriodicGrid grid,
                                        const std::vector<std::complex<double>>& modes) {
  const int n = grid.size();
  if (static_cast<int>(modes.size()) != n) {
    throw InvalidArgument("SpectralField::from_modes: mode count does not match grid size");
  }
  double max_mag = 0.0;
  for (const auto& m : modes) max_mag = std::max(max_mag, std::abs(m));
  // Conjugate symmetry: mode(-k) == conj(mode(k)); slots 0 and N/2 real.
  double defect = std::abs(modes[0].imag()) + std::abs(modes[n / 2].imag());
  for (int k = 1; k < n / 2; ++k) {
    defect = std::max(defect, std::abs(modes[k] - std::conj(modes[n - k])));
  }
  if (defect > 1e-12 * std::max(max_mag, 1e-300)) {
    throw InvalidArgument("SpectralField::from_modes: mode array is not conjugate-symmetric");
  }
  std::vector<std::complex<double>> sym(modes);
  sym[0] = sym[0].real();
  sym[n / 2] = sym[n / 2].real();
  for (int k = 1; k < n / 2; ++k) {
    auto avg = 0.5 * (sym[k] + std::conj(sym[n - k]));
    sym[k] = avg;
    sym[n - k] = std::conj(avg);
  }
  auto values = values_from_modes(grid, sym);
  return {grid, std::move(values), std::move(sym)};
}

double SpectralField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SpectralField::eval(double s) const {
  const int n = grid_.size();
  double acc = modes_[0].real();
  for (int k = 1; k < n / 2; ++k) {
    // Conjugate pair k and -k combine into twice the real part.
    std::complex<double> ph = std::polar(1.0, kTwoPi * k * s);
    acc += 2.0 * (modes_[k] * ph).real();
  }
  // Nyquist slot interpolated symmetrically as cos(pi*N*s).
  acc += modes_[n / 2].real() * std::cos(std::numbers::pi * n * s);
  return acc;
}

std::complex<double> SpectralField::eval(std::complex<double> z) const {
  const int n = grid_.size();
  const std::complex<double> i2pi(0.0, kTwoPi);
  std::complex<double> acc = modes_[0];
  for (int k = 1; k < n / 2; ++k) {
    acc += modes_[k] * std::exp(i2pi * (static_cast<double>(k) * z));
    acc += modes_[n - k] * std::exp(i2pi * (static_cast<double>(-k) * z));
  }
  acc += modes_[n / 2] * std::cos(std::numbers::pi * static_cast<double>(n) * z);
  return acc;
}

SpectralField SpectralField::shifted(double delta) const {
  const int n = grid_.size();
  const double steps = delta * n;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) < 1e-12) {
    // Whole-node shift: rotate the sample array, exactly.
    int r = static_cast<int>(rounded) % n;
    if (r < 0) r += n;
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = values_[(j + r) % n];
    return SpectralField(grid_, std::move(v));
  }
  std::vector<std::complex<double>> m(n);
  for (int k = 0; k < n; ++k) {
    if (k == n / 2) {
      m[k] = 0.0;  // Nyquist has no consistent real phase shift
      continue;
    }
    m[k] = modes_[k] * std::polar(1.0, kTwoPi * grid_.wavenumber(k) * delta);
  }
  auto values = values_from_modes(grid_, m);
  return {grid_, std::move(values), std::move(m)};
}

SpectralField operator+(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("field addition: grid mismatch");
  std::vector<double> v(a.size());
  for (int j = 0; j < a.size(); ++j) v[j] = a.value(j) + b.value(j);
  return SpectralField(a.grid(), std::move(v));
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("field subtraction: grid mismatch");
  std::vector<double> v(a.size());
  for (int j = 0; j < a.size(); ++j) v[j] = a.value(j) - b.value(j);
  return SpectralField(a.grid(), std::move(v));
}

SpectralField operator*(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("field product: grid mismatch");
  std::vector<double> v(a.size());
  for (int j = 0; j < a.size(); ++j) v[j] = a.value(j) * b.value(j);
  return SpectralField(a.grid(), std::move(v));
}

SpectralField operator*(double c, const SpectralField& a) {
  std::vector<double> v(a.size());
  for (int j = 0; j < a.size(); ++j) v[j] = c * a.value(j);
  return SpectralField(a.grid(), std::move(v));
}

SpectralField operator+(const SpectralField& a, double c) {
  std::vector<double> v(a.size());
  for (int j = 0; j < a.size(); ++j) v[j] = a.value(j) + c;
  return SpectralField(a.grid(), std::move(v));
}

// ---------------------------------------------------------------------------
// Operators on mode arrays
// ---------------------------------------------------------------------------

SpectralField spectral_derivative(const SpectralField& f, int order) {
  if (order < 1) throw InvalidArgument("spectral_derivative: order must be >= 1");
  const int n = f.size();
  std::vector<std::complex<double>> m(f.modes());
  for (int k = 0; k < n; ++k) {
    if (k == n / 2) {
      m[k] = 0.0;
      continue;
    }
    std::complex<double> factor(0.0, kTwoPi * f.grid().wavenumber(k));
    std::complex<double> p = 1.0;
    for (int d = 0; d < order; ++d) p *= factor;
    m[k] *= p;
  }
  return SpectralField::from_modes(f.grid(), m);
}

SpectralField resample(const SpectralField& f, const PeriodicGrid& target) {
  const int n = f.size();
  const int m = target.size();
  if (m < n) throw InvalidArgument("resample only refines: target grid is smaller than source");
  if (m == n) return f;
  std::vector<std::complex<double>> fine(static_cast<size_t>(m), 0.0);
  const auto& coarse = f.modes();
  for (int k = 1; k < n / 2; ++k) {
    fine[static_cast<size_t>(k)] = coarse[static_cast<size_t>(k)];
    fine[static_cast<size_t>(m - k)] = coarse[static_cast<size_t>(n - k)];
  }
  fine[0] = coarse[0];
  const std::complex<double> nyq = 0.5 * coarse[static_cast<size_t>(n / 2)];
  fine[static_cast<size_t>(n / 2)] += nyq;
  fine[static_cast<size_t>(m - n / 2)] += nyq;
  return SpectralField::from_modes(target, fine);
}

StripSample shift_to_strip(const SpectralField& f, double beta, const StripOptions& opts) {
  const int n = f.size();
  std::vector<std::complex<double>> m(n);
  for (int k = 0; k < n; ++k) {
    if (k == n / 2) continue;  // handled separately below
    const double scale = std::exp(-kTwoPi * f.grid().wavenumber(k) * beta);
    const double mag = std::abs(f.modes()[k]) * scale;
    if (mag > opts.mode_cap) {
      std::ostringstream msg;
      msg << "shift_to_strip: scaled mode " << f.grid().wavenumber(k) << " has magnitude "
          << mag << " above the cap " << opts.mode_cap << " at beta = " << beta;
      throw NumericalFailure(msg.str());
    }
    m[k] = f.modes()[k] * scale;
  }
  StripSample out{f.grid(), beta, {}};
  out.values.resize(n);
  detail::fft_inverse(n, m.data(), out.values.data());
  // Nyquist continues as cos(pi*N*(s + i*beta)); at the nodes the sine part
  // vanishes and the cosine alternates sign.
  const double ny = f.modes()[n / 2].real() * std::cosh(std::numbers::pi * n * beta);
  if (std::abs(ny) > opts.mode_cap) {
    throw NumericalFailure("shift_to_strip: scaled Nyquist mode above the cap");
  }
  for (int j = 0; j < n; ++j) {
    out.values[j] += (j % 2 == 0 ? ny : -ny);
  }
  return out;
}

SpectralField krasny_filter(const SpectralField& f, double threshold) {
  if (threshold <= 0.0) return f;
  std::vector<std::complex<double>> m(f.modes());
  bool changed = false;
  for (auto& c : m) {
    if (c != std::complex<double>(0.0, 0.0) && std::abs(c) < threshold) {
      c = 0.0;
      changed = true;
    }
  }
  if (!changed) return f;
  return SpectralField::from_modes(f.grid(), m);
}

RadiusFit estimate_analyticity_radius(const SpectralField& f, const RadiusFitOptions& opts) {
  const int n = f.size();
  const int kmax = n / 2 - 1;
  // Magnitude per wavenumber, conjugate pairs collapsed.
  std::vector<double> mag(kmax + 1, 0.0);
  double peak = 0.0;
  for (int k = 1; k <= kmax; ++k) {
    mag[k] = std::max(std::abs(f.modes()[k]), std::abs(f.modes()[n - k]));
    peak = std::max(peak, mag[k]);
  }
  peak = std::max(peak, std::abs(f.modes()[0]));

  RadiusFit fit;
  if (peak == 0.0) {
    fit.indeterminate = true;
    return fit;
  }
  const double floor = opts.noise_floor_rel * peak;

  // Symmetric shapes have structural zeros at interior wavenumbers, so the
  // tail start is the first *persistent* crossing: the smallest k after
  // which every mode stays below the floor.
  std::vector<double> xs, ys;
  int first_below = 0;
  for (int k = 1; k <= kmax; ++k) {
    if (mag[k] >= floor && mag[k] > 0.0) {
      xs.push_back(k);
      ys.push_back(std::log(mag[k]));
      first_below = 0;
    } else if (first_below == 0) {
      first_below = k;
    }
  }
  fit.usable_modes = static_cast<int>(xs.size());
  if (fit.usable_modes < opts.min_usable) {
    fit.indeterminate = true;
    return fit;
  }

  // Least-squares line y = a + b x.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = m * sxx - sx * sx;
  const double b = (m * sxy - sx * sy) / denom;
  const double a = (sy - b * sx) / m;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (a + b * xs[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  fit.value = -b / kTwoPi;

  // Cliff rule: a spectrum that falls below the floor right after modes the
  // fit still predicts far above it decays faster than the grid can measure.
  if (first_below > 0) {
    const double predicted = a + b * first_below;
    if (predicted > std::log(floor * opts.cliff_factor)) {
      fit.capped = true;
      fit.value = opts.max_radius;
      return fit;
    }
  }
  if (fit.value > opts.max_radius) {
    fit.capped = true;
    fit.value = opts.max_radius;
  }
  return fit;
}

double strip_holder_norm(const SpectralField& f, double rho, int n_beta,
                         const StripOptions& opts) {
  if (rho < 0.0) throw InvalidArgument("strip_holder_norm: rho must be >= 0");
  if (n_beta < 1) throw InvalidArgument("strip_holder_norm: n_beta must be >= 1");
  const int n = f.size();

  // Torus distances depend only on the index offset; precompute 1/sqrt(d).
  std::vector<double> inv_sqrt_d(n / 2 + 1, 0.0);
  for (int off = 1; off <= n / 2; ++off) {
    inv_sqrt_d[off] = 1.0 / std::sqrt(static_cast<double>(off) / n);
  }

  double result = 0.0;
  for (int b = 0; b < n_beta; ++b) {
    const double beta = n_beta == 1 ? 0.0 : -rho + 2.0 * rho * b / (n_beta - 1);
    StripSample line = shift_to_strip(f, beta, opts);
    double sup = 0.0;
    for (const auto& v : line.values) sup = std::max(sup, std::abs(v));
    double quot = 0.0;
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        int off = std::min(k - j, n - (k - j));
        const double q = std::abs(line.values[j] - line.values[k]) * inv_sqrt_d[off];
        quot = std::max(quot, q);
      }
    }
    result = std::max(result, sup + quot);
  }
  return result;
}

}  // namespace vlx
