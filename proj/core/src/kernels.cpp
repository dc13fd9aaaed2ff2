#include "vlx/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "vlx/errors.hpp"
#include "vlx/parallel.hpp"

namespace vlx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Core accumulation: sum over sources of w[m] * perp(t - p_m) / |t - p_m|^2
// on [begin, end), tracking the smallest squared distance met.  Kept simple
// and branch-free so the compiler can vectorize it.
struct KernelSum {
  double ux = 0.0, uy = 0.0, min_r2 = 1e300;
};

void accumulate(KernelSum& acc, double tx, double ty, const double* px, const double* py,
                const double* w, int begin, int end) {
  double ux = 0.0, uy = 0.0, min_r2 = acc.min_r2;
  for (int m = begin; m < end; ++m) {
    const double dx = tx - px[m];
    const double dy = ty - py[m];
    const double r2 = dx * dx + dy * dy;
    min_r2 = std::min(min_r2, r2);
    const double f = w[m] / r2;
    ux -= dy * f;
    uy += dx * f;
  }
  acc.ux += ux;
  acc.uy += uy;
  acc.min_r2 = min_r2;
}

struct SourceArrays {
  std::vector<double> px, py, w;
};

void check_min_distance(double min_r2, double spacing, double factor) {
  const double limit = factor * spacing;
  if (min_r2 < limit * limit) {
    throw NumericalFailure("kernel evaluation found a source within " + std::to_string(factor) +
                           " grid spacings of a target: sheet geometry has collapsed");
  }
}

// Source-node count that pushes the trapezoid tail exp(-2 pi M d) below
// round-off for a target at separation d from the source sheet.  The
// safety factor absorbs the metric distortion of near-unit-speed source
// parametrizations (the pole distance is d / |source'|).  Throws when no
// refinement within the cap can resolve the separation.
int refined_source_count(double separation, int n_base, const char* what) {
  constexpr double kTailLog = 36.0;  // exp(-36) ~ 2e-16
  constexpr double kSafety = 0.6;
  constexpr int kMaxRefineFactor = 64;
  if (!(separation > 0.0)) {
    throw NumericalFailure(std::string(what) +
                           ": separation between target and source sheet vanished");
  }
  const double required = kTailLog / (kTwoPi * kSafety * separation);
  if (required <= static_cast<double>(n_base)) return n_base;
  if (required > static_cast<double>(kMaxRefineFactor) * n_base) {
    throw NumericalFailure(std::string(what) +
                           ": target separation too small to resolve within the source "
                           "refinement cap");
  }
  int m = static_cast<int>(std::ceil(required));
  m += m % 2;
  return m;
}

std::vector<double> component_values(const std::vector<Vec2>& v, bool y) {
  std::vector<double> out(v.size());
  for (size_t j = 0; j < v.size(); ++j) out[j] = y ? v[j].y : v[j].x;
  return out;
}

// Shared driver: velocities at (tx, ty) targets from SoA sources, optional
// per-target diagonal skip (skip_diag: source index == target index).
void drive(const SourceArrays& src, const std::vector<double>& tx, const std::vector<double>& ty,
           bool skip_diag, double spacing, const KernelEvalConfig& cfg, std::vector<Vec2>& out) {
  const int n_t = static_cast<int>(tx.size());
  const int n_s = static_cast<int>(src.px.size());
  out.resize(static_cast<size_t>(n_t));
  std::vector<double> min_r2(static_cast<size_t>(n_t));
  parallel_for(n_t, cfg.threads, [&](int j) {
    KernelSum acc;
    if (skip_diag) {
      accumulate(acc, tx[static_cast<size_t>(j)], ty[static_cast<size_t>(j)], src.px.data(),
                 src.py.data(), src.w.data(), 0, j);
      accumulate(acc, tx[static_cast<size_t>(j)], ty[static_cast<size_t>(j)], src.px.data(),
                 src.py.data(), src.w.data(), j + 1, n_s);
    } else {
      accumulate(acc, tx[static_cast<size_t>(j)], ty[static_cast<size_t>(j)], src.px.data(),
                 src.py.data(), src.w.data(), 0, n_s);
    }
    out[static_cast<size_t>(j)] = {acc.ux, acc.uy};
    min_r2[static_cast<size_t>(j)] = acc.min_r2;
  });
  double worst = 1e300;
  for (double r2 : min_r2) worst = std::min(worst, r2);
  check_min_distance(worst, spacing, cfg.near_coincidence_factor);
}

}  // namespace

Vec2 biot_savart(Vec2 x) {
  const double r2 = norm_sq(x);
  if (r2 == 0.0) throw InvalidArgument("point-vortex kernel evaluated at its singularity");
  return perp(x) / (kTwoPi * r2);
}

std::complex<double> complex_dot(ComplexVec2 a, ComplexVec2 b) { return a.x * b.x + a.y * b.y; }

std::complex<double> complexified_modulus(ComplexVec2 z) {
  const std::complex<double> d = complex_dot(z, z);
  if (d.real() <= 0.0) {
    throw NumericalFailure("complexified distance left the positive-real regime");
  }
  return std::sqrt(d);
}

VecSamples br_operator(const CurveSamples& curve, const SpectralField& density,
                       const KernelEvalConfig& cfg) {
  const PeriodicGrid grid = curve.x.grid();
  if (!(curve.y.grid() == grid) || !(density.grid() == grid)) {
    throw InvalidArgument("curve samples and density must share one grid");
  }
  const int n = grid.size();
  const double h = grid.spacing();

  SourceArrays src;
  src.w.resize(static_cast<size_t>(n));
  std::vector<double> tx(curve.x.values()), ty(curve.y.values());
  bool skip_diag = false;

  if (cfg.pv_rule == PvRule::AlternatePoint) {
    const auto xh = curve.x.shifted(0.5 * h);
    const auto yh = curve.y.shifted(0.5 * h);
    const auto dh = density.shifted(0.5 * h);
    src.px = xh.values();
    src.py = yh.values();
    for (int m = 0; m < n; ++m) src.w[static_cast<size_t>(m)] = dh.value(m) * h / kTwoPi;
  } else {
    src.px = curve.x.values();
    src.py = curve.y.values();
    for (int m = 0; m < n; ++m) src.w[static_cast<size_t>(m)] = density.value(m) * h / kTwoPi;
    skip_diag = true;
  }

  VecSamples out{grid, {}};
  drive(src, tx, ty, skip_diag, h, cfg, out.v);
  return out;
}

std::vector<Vec2> induced_velocity(const CurveSamples& source, const SpectralField& density,
                                   const std::vector<Vec2>& targets, const KernelEvalConfig& cfg) {
  const PeriodicGrid grid = source.x.grid();
  if (!(source.y.grid() == grid) || !(density.grid() == grid)) {
    throw InvalidArgument("curve samples and density must share one grid");
  }
  const int n = grid.size();
  std::vector<double> tx(targets.size()), ty(targets.size());
  for (size_t j = 0; j < targets.size(); ++j) {
    tx[j] = targets[j].x;
    ty[j] = targets[j].y;
  }

  // Separation estimate: closest node distance, reduced by half the longest
  // chord (the sheet can bulge toward a target between nodes).
  const auto& sx = source.x.values();
  const auto& sy = source.y.values();
  double d0 = 1e300;
  for (size_t j = 0; j < targets.size(); ++j) {
    for (int m = 0; m < n; ++m) {
      const double dx = tx[j] - sx[static_cast<size_t>(m)];
      const double dy = ty[j] - sy[static_cast<size_t>(m)];
      d0 = std::min(d0, dx * dx + dy * dy);
    }
  }
  d0 = std::sqrt(d0);
  double chord = 0.0;
  for (int m = 0; m < n; ++m) {
    const int next = (m + 1) % n;
    const double dx = sx[static_cast<size_t>(next)] - sx[static_cast<size_t>(m)];
    const double dy = sy[static_cast<size_t>(next)] - sy[static_cast<size_t>(m)];
    chord = std::max(chord, std::hypot(dx, dy));
  }
  const double d_est = std::max(d0 - 0.5 * chord, 0.5 * d0);
  const int m_fine = targets.empty() ? n : refined_source_count(d_est, n, "off-sheet evaluation");

  const PeriodicGrid fine(m_fine);
  const SpectralField fx = resample(source.x, fine);
  const SpectralField fy = resample(source.y, fine);
  const SpectralField fw = resample(density, fine);
  SourceArrays src;
  src.px = fx.values();
  src.py = fy.values();
  src.w.resize(static_cast<size_t>(m_fine));
  const double h_f = fine.spacing();
  for (int m = 0; m < m_fine; ++m) src.w[static_cast<size_t>(m)] = fw.value(m) * h_f / kTwoPi;

  std::vector<Vec2> out;
  drive(src, tx, ty, false, h_f, cfg, out);
  return out;
}

BaseCurveSamples sample_base_curve(const CurveSpec& curve, const PeriodicGrid& grid) {
  BaseCurveSamples out{grid, {}, {}, {}, {}};
  const auto g0 = curve.sample(grid);
  const auto g1 = curve.sample(grid, 1);
  const double half = 0.5 * grid.spacing();
  const auto g0h = curve.sample(grid, 0, half);
  const auto g1h = curve.sample(grid, 1, half);
  const int n = grid.size();
  out.gamma.resize(static_cast<size_t>(n));
  out.tangent.resize(static_cast<size_t>(n));
  out.gamma_h.resize(static_cast<size_t>(n));
  out.tangent_h.resize(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    out.gamma[static_cast<size_t>(j)] = {g0.x.value(j), g0.y.value(j)};
    out.tangent[static_cast<size_t>(j)] = {g1.x.value(j), g1.y.value(j)};
    out.gamma_h[static_cast<size_t>(j)] = {g0h.x.value(j), g0h.y.value(j)};
    out.tangent_h[static_cast<size_t>(j)] = {g1h.x.value(j), g1h.y.value(j)};
  }
  return out;
}

VecSamples layer_kernel(const BaseCurveSamples& base, const SpectralField& nu_target,
                        const SpectralField& nu_source, const SpectralField& varpi_source,
                        bool same_layer, const KernelEvalConfig& cfg) {
  const PeriodicGrid grid = base.grid;
  if (!(nu_target.grid() == grid) || !(nu_source.grid() == grid) ||
      !(varpi_source.grid() == grid)) {
    throw InvalidArgument("layer fields must live on the base sampling grid");
  }
  const int n = grid.size();
  const double h = grid.spacing();

  // Target points: base + nu_target * perp(tangent) at the nodes.
  std::vector<double> tx(static_cast<size_t>(n)), ty(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    const Vec2 p = base.gamma[static_cast<size_t>(j)] +
                   nu_target.value(j) * perp(base.tangent[static_cast<size_t>(j)]);
    tx[static_cast<size_t>(j)] = p.x;
    ty[static_cast<size_t>(j)] = p.y;
  }

  SourceArrays src;
  bool skip_diag = false;
  double spacing = h;

  if (same_layer && cfg.pv_rule == PvRule::AlternatePoint) {
    src.px.resize(static_cast<size_t>(n));
    src.py.resize(static_cast<size_t>(n));
    src.w.resize(static_cast<size_t>(n));
    const auto nu_h = nu_source.shifted(0.5 * h);
    const auto w_h = varpi_source.shifted(0.5 * h);
    for (int m = 0; m < n; ++m) {
      const Vec2 p = base.gamma_h[static_cast<size_t>(m)] +
                     nu_h.value(m) * perp(base.tangent_h[static_cast<size_t>(m)]);
      src.px[static_cast<size_t>(m)] = p.x;
      src.py[static_cast<size_t>(m)] = p.y;
      src.w[static_cast<size_t>(m)] = w_h.value(m) * h / kTwoPi;
    }
  } else if (same_layer) {
    src.px.resize(static_cast<size_t>(n));
    src.py.resize(static_cast<size_t>(n));
    src.w.resize(static_cast<size_t>(n));
    for (int m = 0; m < n; ++m) {
      const Vec2 p = base.gamma[static_cast<size_t>(m)] +
                     nu_source.value(m) * perp(base.tangent[static_cast<size_t>(m)]);
      src.px[static_cast<size_t>(m)] = p.x;
      src.py[static_cast<size_t>(m)] = p.y;
      src.w[static_cast<size_t>(m)] = varpi_source.value(m) * h / kTwoPi;
    }
    skip_diag = true;  // SkipDiagonal principal value
  } else {
    // Distinct layers: refine the source grid until the trapezoid tail for
    // the observed minimum normal gap is negligible.  Both points of a pair
    // share the base normal, so |nu_source - nu_target| is the exact
    // pointwise separation of the two graphs.
    double gap = 1e300;
    for (int j = 0; j < n; ++j) {
      gap = std::min(gap, std::abs(nu_source.value(j) - nu_target.value(j)));
    }
    const int m_fine = refined_source_count(gap, n, "cross-layer kernel");
    if (m_fine == n) {
      src.px.resize(static_cast<size_t>(n));
      src.py.resize(static_cast<size_t>(n));
      src.w.resize(static_cast<size_t>(n));
      for (int m = 0; m < n; ++m) {
        const Vec2 p = base.gamma[static_cast<size_t>(m)] +
                       nu_source.value(m) * perp(base.tangent[static_cast<size_t>(m)]);
        src.px[static_cast<size_t>(m)] = p.x;
        src.py[static_cast<size_t>(m)] = p.y;
        src.w[static_cast<size_t>(m)] = varpi_source.value(m) * h / kTwoPi;
      }
    } else {
      const PeriodicGrid fine(m_fine);
      const SpectralField gx = resample(SpectralField(grid, component_values(base.gamma, false)), fine);
      const SpectralField gy = resample(SpectralField(grid, component_values(base.gamma, true)), fine);
      const SpectralField tx_f = resample(SpectralField(grid, component_values(base.tangent, false)), fine);
      const SpectralField ty_f = resample(SpectralField(grid, component_values(base.tangent, true)), fine);
      const SpectralField nu_f = resample(nu_source, fine);
      const SpectralField w_f = resample(varpi_source, fine);
      src.px.resize(static_cast<size_t>(m_fine));
      src.py.resize(static_cast<size_t>(m_fine));
      src.w.resize(static_cast<size_t>(m_fine));
      const double h_f = fine.spacing();
      for (int m = 0; m < m_fine; ++m) {
        const Vec2 p = Vec2{gx.value(m), gy.value(m)} +
                       nu_f.value(m) * perp(Vec2{tx_f.value(m), ty_f.value(m)});
        src.px[static_cast<size_t>(m)] = p.x;
        src.py[static_cast<size_t>(m)] = p.y;
        src.w[static_cast<size_t>(m)] = w_f.value(m) * h_f / kTwoPi;
      }
      spacing = h_f;
    }
  }

  VecSamples out{grid, {}};
  drive(src, tx, ty, skip_diag, spacing, cfg, out.v);
  return out;
}

VecSamples k0(const CurveSpec& curve, const SpectralField& nu, const SpectralField& varpi,
              const KernelEvalConfig& cfg) {
  const PeriodicGrid grid = nu.grid();
  if (!(varpi.grid() == grid)) throw InvalidArgument("offset and density must share one grid");
  const auto g0 = curve.sample(grid);
  const auto g1 = curve.sample(grid, 1);
  const int n = grid.size();
  std::vector<double> gx(static_cast<size_t>(n)), gy(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    const Vec2 p = Vec2{g0.x.value(j), g0.y.value(j)} +
                   nu.value(j) * perp(Vec2{g1.x.value(j), g1.y.value(j)});
    gx[static_cast<size_t>(j)] = p.x;
    gy[static_cast<size_t>(j)] = p.y;
  }
  const CurveSamples graph{SpectralField(grid, gx), SpectralField(grid, gy)};
  return br_operator(graph, varpi, cfg);
}

double layer_distance_ratio(const CurveSpec& curve, const SpectralField& nu_source,
                            const SpectralField& g_thickness, double epsilon,
                            double flat_sep, double s, double sigma, double beta) {
  const double dist_t = std::abs(sigma - std::round(sigma));
  const double denom = dist_t * dist_t + epsilon * epsilon * flat_sep * flat_sep;
  if (denom == 0.0) {
    throw InvalidArgument("distance ratio is undefined at coincident layer points");
  }
  const std::complex<double> z(s, beta);
  const std::complex<double> zs = z + sigma;

  const auto offset_point = [&](std::complex<double> w) {
    const ComplexVec2 gamma = curve.point(w);
    const ComplexVec2 tang = curve.point(w, 1);
    const std::complex<double> nu = nu_source.eval(w);
    return ComplexVec2{gamma.x + nu * (-tang.y), gamma.y + nu * tang.x};
  };

  const ComplexVec2 target = offset_point(z);
  const ComplexVec2 source = offset_point(zs);
  const ComplexVec2 tang_z = curve.point(z, 1);
  const std::complex<double> shift = -epsilon * g_thickness.eval(z);
  const ComplexVec2 d{target.x + shift * (-tang_z.y) - source.x,
                      target.y + shift * tang_z.x - source.y};
  return std::real(complex_dot(d, d)) / denom;
}

}  // namespace vlx
