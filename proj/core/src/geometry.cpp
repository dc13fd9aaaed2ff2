#include "vlx/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fft_backend.hpp"
#include "vlx/errors.hpp"

namespace vlx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int next_pow2(int n) {
  int p = 8;
  while (p < n) p *= 2;
  return p;
}

// i^d for derivative order d.
std::complex<double> i_power(int d) {
  switch (((d % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

int highest_index(const std::vector<double>& a) {
  for (int k = static_cast<int>(a.size()) - 1; k >= 0; --k) {
    if (a[static_cast<size_t>(k)] != 0.0) return k;
  }
  return -1;
}

double table_at(const std::vector<double>& a, int k) {
  return k < static_cast<int>(a.size()) ? a[static_cast<size_t>(k)] : 0.0;
}

// Complex Fourier modes (FFT index order, length n) of one real component
// given by cosine/sine tables.
std::vector<std::complex<double>> modes_from_tables(const std::vector<double>& cos_tab,
                                                    const std::vector<double>& sin_tab,
                                                    int k_max, int n) {
  std::vector<std::complex<double>> m(static_cast<size_t>(n), {0.0, 0.0});
  m[0] = table_at(cos_tab, 0);
  for (int k = 1; k <= k_max; ++k) {
    const std::complex<double> c(0.5 * table_at(cos_tab, k), -0.5 * table_at(sin_tab, k));
    m[static_cast<size_t>(k)] = c;
    m[static_cast<size_t>(n - k)] = std::conj(c);
  }
  return m;
}

double signed_area_from_modes(const std::vector<std::complex<double>>& cx,
                              const std::vector<std::complex<double>>& cy) {
  // area = integral of x * y' = Re sum_k cx_k * conj(2 pi i k cy_k).
  const int n = static_cast<int>(cx.size());
  double area = 0.0;
  for (int j = 0; j < n; ++j) {
    const int k = j <= n / 2 ? j : j - n;
    area += std::real(cx[static_cast<size_t>(j)] *
                      std::complex<double>(0.0, -kTwoPi * k) *
                      std::conj(cy[static_cast<size_t>(j)]));
  }
  return area;
}

// Reverse orientation: s -> -s permutes mode slot k to slot n-k.
void flip_orientation(std::vector<std::complex<double>>& m) {
  const int n = static_cast<int>(m.size());
  for (int k = 1; k < n - k; ++k) std::swap(m[static_cast<size_t>(k)], m[static_cast<size_t>(n - k)]);
}

SpectralField field_from_modes(const PeriodicGrid& g, std::vector<std::complex<double>> m) {
  return SpectralField::from_modes(g, std::move(m));
}

}  // namespace

// ---------------------------------------------------------------------------
// Built-in shapes
// ---------------------------------------------------------------------------

CurveCoefficients circle_coefficients() {
  CurveCoefficients c;
  c.x_cos = {0.0, 1.0};
  c.y_sin = {0.0, 1.0};
  return c;
}

CurveCoefficients ellipse_coefficients(double semi_axis_x, double semi_axis_y) {
  if (!(semi_axis_x > 0.0) || !(semi_axis_y > 0.0)) {
    throw InvalidArgument("ellipse semi-axes must be positive");
  }
  CurveCoefficients c;
  c.x_cos = {0.0, semi_axis_x};
  c.y_sin = {0.0, semi_axis_y};
  return c;
}

CurveCoefficients perturbed_circle_coefficients(double amplitude, int wavenumber) {
  if (wavenumber < 2) throw InvalidArgument("perturbation wavenumber must be >= 2");
  if (!(std::abs(amplitude) < 1.0)) throw InvalidArgument("perturbation amplitude must satisfy |a| < 1");
  // (x, y) = r(t) (cos 2 pi t, sin 2 pi t) with r = 1 + a cos(2 pi m t):
  // product-to-sum formulas give exact coefficient tables.
  const int m = wavenumber;
  const double a = amplitude;
  CurveCoefficients c;
  c.x_cos.assign(static_cast<size_t>(m + 2), 0.0);
  c.x_sin.assign(static_cast<size_t>(m + 2), 0.0);
  c.y_cos.assign(static_cast<size_t>(m + 2), 0.0);
  c.y_sin.assign(static_cast<size_t>(m + 2), 0.0);
  c.x_cos[1] = 1.0;
  c.x_cos[static_cast<size_t>(m + 1)] += 0.5 * a;
  c.x_cos[static_cast<size_t>(m - 1)] += 0.5 * a;
  c.y_sin[1] = 1.0;
  c.y_sin[static_cast<size_t>(m + 1)] += 0.5 * a;
  c.y_sin[static_cast<size_t>(m - 1)] -= 0.5 * a;
  return c;
}

// ---------------------------------------------------------------------------
// CurveSpec
// ---------------------------------------------------------------------------

CurveSpec::CurveSpec(std::vector<std::complex<double>> cx, std::vector<std::complex<double>> cy,
                     double rho0)
    : n_modes_(static_cast<int>(cx.size())), cx_(std::move(cx)), cy_(std::move(cy)), rho0_(rho0) {
  if (cx_.size() != cy_.size()) throw InvalidArgument("curve mode arrays differ in length");
  if (n_modes_ < 8 || n_modes_ % 2 != 0) {
    throw InvalidArgument("curve needs an even number of modes, at least 8");
  }
  cx_[static_cast<size_t>(n_modes_ / 2)] = 0.0;
  cy_[static_cast<size_t>(n_modes_ / 2)] = 0.0;
  double peak = 0.0, defect = 0.0;
  for (int k = 0; k < n_modes_; ++k) {
    peak = std::max({peak, std::abs(cx_[static_cast<size_t>(k)]), std::abs(cy_[static_cast<size_t>(k)])});
  }
  for (int k = 1; k < n_modes_ / 2; ++k) {
    defect = std::max(defect, std::abs(cx_[static_cast<size_t>(k)] - std::conj(cx_[static_cast<size_t>(n_modes_ - k)])));
    defect = std::max(defect, std::abs(cy_[static_cast<size_t>(k)] - std::conj(cy_[static_cast<size_t>(n_modes_ - k)])));
  }
  defect = std::max({defect, std::abs(cx_[0].imag()), std::abs(cy_[0].imag())});
  if (defect > 1e-12 * std::max(peak, 1e-300)) {
    throw InvalidArgument("curve mode arrays are not conjugate-symmetric (curve not real)");
  }
}

Vec2 CurveSpec::point(double s, int deriv) const {
  const std::complex<double> ip = i_power(deriv);
  double x = 0.0, y = 0.0;
  if (deriv == 0) {
    x = cx_[0].real();
    y = cy_[0].real();
  }
  for (int k = 1; k < n_modes_ / 2; ++k) {
    const std::complex<double> w = std::polar(1.0, kTwoPi * k * s);
    const std::complex<double> f = std::pow(kTwoPi * k, deriv) * ip * w;
    x += 2.0 * std::real(cx_[static_cast<size_t>(k)] * f);
    y += 2.0 * std::real(cy_[static_cast<size_t>(k)] * f);
  }
  return {x, y};
}

ComplexVec2 CurveSpec::point(std::complex<double> z, int deriv) const {
  const std::complex<double> ip = i_power(deriv);
  std::complex<double> x = 0.0, y = 0.0;
  if (deriv == 0) {
    x = cx_[0];
    y = cy_[0];
  }
  const std::complex<double> i2pi(0.0, kTwoPi);
  for (int k = 1; k < n_modes_ / 2; ++k) {
    const std::complex<double> wp = std::exp(i2pi * (static_cast<double>(k) * z));
    const std::complex<double> wm = std::exp(i2pi * (-static_cast<double>(k) * z));
    // (2 pi i k)^d for +k and (-2 pi i k)^d = (2 pi k)^d conj(i^d) for -k.
    const std::complex<double> f = std::pow(kTwoPi * k, deriv) * ip;
    const std::complex<double> fm = std::pow(kTwoPi * k, deriv) * std::conj(ip);
    x += cx_[static_cast<size_t>(k)] * f * wp + cx_[static_cast<size_t>(n_modes_ - k)] * fm * wm;
    y += cy_[static_cast<size_t>(k)] * f * wp + cy_[static_cast<size_t>(n_modes_ - k)] * fm * wm;
  }
  return {x, y};
}

CurveSamples CurveSpec::sample(const PeriodicGrid& grid, int deriv, double shift) const {
  if (grid.size() < n_modes_) {
    throw InvalidArgument("sampling grid must have at least as many nodes as the curve has modes");
  }
  const int n = grid.size();
  std::vector<std::complex<double>> mx(static_cast<size_t>(n), {0.0, 0.0});
  std::vector<std::complex<double>> my(static_cast<size_t>(n), {0.0, 0.0});
  for (int j = 0; j < n_modes_; ++j) {
    const int k = j <= n_modes_ / 2 ? j : j - n_modes_;
    if (k == n_modes_ / 2 || k == -n_modes_ / 2) continue;  // Nyquist already zero
    std::complex<double> f(1.0, 0.0);
    const std::complex<double> ik(0.0, kTwoPi * k);
    for (int d = 0; d < deriv; ++d) f *= ik;
    f *= std::polar(1.0, kTwoPi * k * shift);
    const int slot = k >= 0 ? k : n + k;
    mx[static_cast<size_t>(slot)] = cx_[static_cast<size_t>(j)] * f;
    my[static_cast<size_t>(slot)] = cy_[static_cast<size_t>(j)] * f;
  }
  return {field_from_modes(grid, std::move(mx)), field_from_modes(grid, std::move(my))};
}

double CurveSpec::signed_area() const { return signed_area_from_modes(cx_, cy_); }

// ---------------------------------------------------------------------------
// Arclength fitting
// ---------------------------------------------------------------------------

CurveSpec reparametrize_arclength(const CurveCoefficients& raw, int n_modes, double rho0) {
  if (n_modes < 8 || n_modes % 2 != 0) {
    throw InvalidArgument("curve needs an even number of modes, at least 8");
  }
  if (table_at(raw.x_sin, 0) != 0.0 || table_at(raw.y_sin, 0) != 0.0) {
    throw InvalidArgument("sine coefficient tables must have zero entry at index 0");
  }
  const int k_max = std::max({highest_index(raw.x_cos), highest_index(raw.x_sin),
                              highest_index(raw.y_cos), highest_index(raw.y_sin)});
  if (k_max < 1) throw InvalidArgument("curve coefficients describe a single point");

  const int n_work = next_pow2(std::max({8 * (k_max + 1), 4 * n_modes, 256}));
  PeriodicGrid work(n_work);

  auto mx = modes_from_tables(raw.x_cos, raw.x_sin, k_max, n_work);
  auto my = modes_from_tables(raw.y_cos, raw.y_sin, k_max, n_work);

  const double area = signed_area_from_modes(mx, my);
  if (area == 0.0) throw InvalidArgument("curve encloses zero signed area");
  if (area < 0.0) {
    flip_orientation(mx);
    flip_orientation(my);
  }

  const auto fx = field_from_modes(work, std::move(mx));
  const auto fy = field_from_modes(work, std::move(my));
  const auto dfx = spectral_derivative(fx);
  const auto dfy = spectral_derivative(fy);

  std::vector<double> speed(static_cast<size_t>(n_work));
  double smin = 1e300, smax = 0.0;
  int arg_smin = 0;
  for (int j = 0; j < n_work; ++j) {
    speed[static_cast<size_t>(j)] = std::hypot(dfx.value(j), dfy.value(j));
    if (speed[static_cast<size_t>(j)] < smin) {
      smin = speed[static_cast<size_t>(j)];
      arg_smin = j;
    }
    smax = std::max(smax, speed[static_cast<size_t>(j)]);
  }
  if (smin < 1e-8 * smax) {
    throw InvalidArgument("curve tangent vanishes near parameter " +
                          std::to_string(work.node(arg_smin)));
  }

  // Total length and normalized arclength a(s) = s + P(s), P periodic.
  const SpectralField sf(work, speed);
  const double total_len = sf.mean();
  std::vector<double> dev(static_cast<size_t>(n_work));
  for (int j = 0; j < n_work; ++j) dev[static_cast<size_t>(j)] = speed[static_cast<size_t>(j)] / total_len - 1.0;
  const SpectralField devf(work, dev);
  auto pmodes = devf.modes();
  for (int j = 1; j < n_work; ++j) {
    const int k = j <= n_work / 2 ? j : j - n_work;
    if (k == n_work / 2) {
      pmodes[static_cast<size_t>(j)] = 0.0;
      continue;
    }
    pmodes[static_cast<size_t>(j)] /= std::complex<double>(0.0, kTwoPi * k);
  }
  pmodes[0] = 0.0;
  auto pf = field_from_modes(work, std::move(pmodes));
  const double p_at_zero = pf.value(0);
  pf = pf + (-p_at_zero);  // so that a(0) = 0

  // Invert a(s) = u at the output nodes by Newton continuation.
  PeriodicGrid out(n_modes);
  std::vector<double> gx(static_cast<size_t>(n_modes)), gy(static_cast<size_t>(n_modes));
  double s = 0.0;
  for (int j = 0; j < n_modes; ++j) {
    const double u = out.node(j);
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
      const double f = s + pf.eval(s) - u;
      if (std::abs(f) <= 1e-14) {
        converged = true;
        break;
      }
      const double ds = std::hypot(dfx.eval(s), dfy.eval(s)) / total_len;
      s -= f / ds;
    }
    if (!converged) {
      throw NumericalFailure("arclength inversion failed to converge at output node " +
                             std::to_string(j));
    }
    gx[static_cast<size_t>(j)] = fx.eval(s) / total_len;
    gy[static_cast<size_t>(j)] = fy.eval(s) / total_len;
    s += 1.0 / n_modes;  // continuation seed for the next node
  }

  const SpectralField ox(out, gx), oy(out, gy);
  auto cmx = ox.modes();
  auto cmy = oy.modes();
  cmx[static_cast<size_t>(n_modes / 2)] = 0.0;
  cmy[static_cast<size_t>(n_modes / 2)] = 0.0;

  double fitted_rho = rho0;
  if (!(fitted_rho > 0.0)) {
    const auto rx = estimate_analyticity_radius(ox);
    const auto ry = estimate_analyticity_radius(oy);
    const RadiusFitOptions defaults;
    double est = defaults.max_radius;
    if (!rx.indeterminate) est = std::min(est, rx.value);
    if (!ry.indeterminate) est = std::min(est, ry.value);
    fitted_rho = est;
  }

  CurveSpec curve(std::move(cmx), std::move(cmy), fitted_rho);

  // The fit must reproduce unit speed on its own grid; otherwise n_modes is
  // too small to resolve this shape.
  const auto tangent = curve.sample(out, 1);
  double worst = 0.0;
  for (int j = 0; j < n_modes; ++j) {
    worst = std::max(worst, std::abs(std::hypot(tangent.x.value(j), tangent.y.value(j)) - 1.0));
  }
  if (worst > 1e-8) {
    throw InvalidArgument("arclength fit with " + std::to_string(n_modes) +
                          " modes misses unit speed by " + std::to_string(worst) +
                          "; increase the mode count");
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Tubular frame and charts
// ---------------------------------------------------------------------------

FrameSample frame(const CurveSpec& curve, double s, double n) {
  const Vec2 d1 = curve.point(s, 1);
  const Vec2 d2 = curve.point(s, 2);
  const Vec2 d3 = curve.point(s, 3);
  FrameSample out;
  out.e_n = perp(d1);
  out.e_s = d1 + n * perp(d2);
  out.e_s_norm_sq = norm_sq(out.e_s);
  if (out.e_s_norm_sq < 0.25) {
    throw InvalidArgument("tubular frame degenerates at s = " + std::to_string(s) +
                          ", n = " + std::to_string(n));
  }
  const Vec2 de_s = d2 + n * perp(d3);
  out.d_metric = de_s / out.e_s_norm_sq -
                 out.e_s * (2.0 * dot(out.e_s, de_s) / (out.e_s_norm_sq * out.e_s_norm_sq));
  return out;
}

Vec2 chart_point(const CurveSpec& curve, double s, double n) {
  return curve.point(s) + n * perp(curve.point(s, 1));
}

TubularCoordinates tubular_coordinates(const CurveSpec& curve, Vec2 p) {
  const int n_dense = std::max(2 * curve.n_modes(), 128);
  PeriodicGrid dense(n_dense);
  const auto pts = curve.sample(dense);
  int best = 0;
  double best_d = 1e300;
  for (int j = 0; j < n_dense; ++j) {
    const double d = norm_sq(Vec2{pts.x.value(j), pts.y.value(j)} - p);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  double s = dense.node(best);
  double n = dot(p - Vec2{pts.x.value(best), pts.y.value(best)}, perp(curve.point(s, 1)));

  for (int it = 0; it < 50; ++it) {
    const Vec2 g = curve.point(s);
    const Vec2 d1 = curve.point(s, 1);
    const Vec2 d2 = curve.point(s, 2);
    const Vec2 res = g + n * perp(d1) - p;
    if (norm(res) <= 1e-12) return {s - std::floor(s), n};
    const Vec2 cs = d1 + n * perp(d2);  // d residual / d s
    const Vec2 cn = perp(d1);           // d residual / d n
    const double det = cs.x * cn.y - cn.x * cs.y;
    if (std::abs(det) < 1e-14) {
      throw NumericalFailure("inverse chart Jacobian is singular near s = " + std::to_string(s));
    }
    s -= (res.x * cn.y - cn.x * res.y) / det;
    n -= (cs.x * res.y - res.x * cs.y) / det;
  }
  throw NumericalFailure("inverse chart iteration did not converge (point outside the tube?)");
}

double max_tube_radius(const CurveSpec& curve) {
  const int n_dense = std::max(4 * curve.n_modes(), 256);
  PeriodicGrid dense(n_dense);
  const auto pts = curve.sample(dense);
  const auto acc = curve.sample(dense, 2);
  double max_acc = 0.0;
  for (int j = 0; j < n_dense; ++j) {
    max_acc = std::max(max_acc, std::hypot(acc.x.value(j), acc.y.value(j)));
  }
  const double focal = max_acc > 1e-12 ? 1.0 / max_acc : 1e12;
  const double delta0 = std::min(std::numbers::pi * focal, 0.5);
  const int m_min = std::max(1, static_cast<int>(std::ceil(delta0 * n_dense)));
  double min_d2 = 1e300;
  for (int m = m_min; m <= n_dense / 2; ++m) {
    for (int j = 0; j < n_dense; ++j) {
      const int l = (j + m) % n_dense;
      const double dx = pts.x.value(j) - pts.x.value(l);
      const double dy = pts.y.value(j) - pts.y.value(l);
      min_d2 = std::min(min_d2, dx * dx + dy * dy);
    }
  }
  const double far_gap = min_d2 < 1e300 ? 0.5 * std::sqrt(min_d2) : 1e12;
  return 0.9 * std::min(focal, far_gap);
}

SelfIntersectionReport check_no_self_intersection(const CurveSpec& curve, double rho,
                                                  double delta, int n_beta) {
  if (!(delta > 0.0) || delta > 0.5) throw InvalidArgument("separation delta must lie in (0, 1/2]");
  if (rho < 0.0) throw InvalidArgument("strip half-width must be nonnegative");
  if (n_beta < 1) throw InvalidArgument("need at least one strip line");
  if (rho == 0.0) n_beta = 1;

  const int n_g = std::max(curve.n_modes(), 128);
  const int m_min = std::max(1, static_cast<int>(std::ceil(delta * n_g)));
  SelfIntersectionReport rep{1e300, 0.0, 0.0, 0.0};

  std::vector<std::complex<double>> sx(static_cast<size_t>(n_g)), sy(static_cast<size_t>(n_g));
  std::vector<std::complex<double>> mx(static_cast<size_t>(n_g)), my(static_cast<size_t>(n_g));
  for (int ib = 0; ib < n_beta; ++ib) {
    const double beta = n_beta == 1 ? 0.0 : -rho + 2.0 * rho * ib / (n_beta - 1);
    // Continue both components to the strip line Im = beta.
    std::fill(mx.begin(), mx.end(), std::complex<double>(0.0, 0.0));
    std::fill(my.begin(), my.end(), std::complex<double>(0.0, 0.0));
    for (int j = 0; j < curve.n_modes(); ++j) {
      const int k = j <= curve.n_modes() / 2 ? j : j - curve.n_modes();
      if (std::abs(k) == curve.n_modes() / 2) continue;
      const double scale = std::exp(-kTwoPi * k * beta);
      if (scale * std::max(std::abs(curve.modes_x()[static_cast<size_t>(j)]),
                           std::abs(curve.modes_y()[static_cast<size_t>(j)])) > 1e8) {
        throw NumericalFailure("strip continuation of the curve overflows at wavenumber " +
                               std::to_string(k) + " for beta = " + std::to_string(beta));
      }
      const int slot = k >= 0 ? k : n_g + k;
      mx[static_cast<size_t>(slot)] = curve.modes_x()[static_cast<size_t>(j)] * scale;
      my[static_cast<size_t>(slot)] = curve.modes_y()[static_cast<size_t>(j)] * scale;
    }
    detail::fft_inverse(n_g, mx.data(), sx.data());
    detail::fft_inverse(n_g, my.data(), sy.data());

    for (int m = m_min; m <= n_g / 2; ++m) {
      for (int j = 0; j < n_g; ++j) {
        const int l = (j + m) % n_g;
        const std::complex<double> dx = sx[static_cast<size_t>(j)] - sx[static_cast<size_t>(l)];
        const std::complex<double> dy = sy[static_cast<size_t>(j)] - sy[static_cast<size_t>(l)];
        const double val = std::real(dx * dx + dy * dy);
        if (val < rep.margin) {
          rep = {val, static_cast<double>(j) / n_g, static_cast<double>(m) / n_g, beta};
        }
      }
    }
  }
  return rep;
}

}  // namespace vlx
