#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "vlx/dynamics.hpp"
#include "vlx/errors.hpp"
#include "vlx/geometry.hpp"
#include "vlx/kernels.hpp"
#include "vlx/spectral.hpp"

using namespace vlx;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;
const double kRadius = 1.0 / kTwoPi;  // radius of the unit-length circle

CurveSpec unit_circle() { return reparametrize_arclength(circle_coefficients(), 32); }

// Flat annulus stack: 8 layers, the inner four carrying constant densities.
LayeredState flat_stack(const PeriodicGrid& grid, double epsilon,
                        const std::vector<double>& densities) {
  auto curve = unit_circle();
  const int n_layers = static_cast<int>(densities.size());
  std::vector<SpectralField> varpi;
  varpi.reserve(densities.size());
  for (double c : densities) varpi.push_back(SpectralField::constant(grid, c));
  return build_initial_state(curve, epsilon, n_layers, grid, SpectralField::zero(grid), varpi);
}

const std::vector<double> kStackDensities{0.0, 0.0, 0.8, 1.2, 1.0, 0.6, 0.0, 0.0};

double max_field_abs(const LayeredState& a) {
  double m = 0.0;
  for (int l = 0; l < a.n_layers; ++l) {
    const auto k = static_cast<size_t>(l);
    m = std::max({m, a.w1[k].max_abs(), a.w3[k].max_abs(), a.w4[k].max_abs()});
  }
  return m;
}

double state_distance(const LayeredState& a, const LayeredState& b) {
  double m = 0.0;
  for (int l = 0; l < a.n_layers; ++l) {
    const auto k = static_cast<size_t>(l);
    m = std::max({m, (a.w1[k] - b.w1[k]).max_abs(), (a.w3[k] - b.w3[k]).max_abs(),
                  (a.w4[k] - b.w4[k]).max_abs()});
  }
  return m;
}

}  // namespace

TEST_CASE("initial state construction: fields, layer nodes, activity flags") {
  PeriodicGrid g(128);
  auto curve = unit_circle();
  const double eps = 0.05;
  auto eta0 = SpectralField::sample(g, [](double s) { return 0.02 * std::cos(kTwoPi * s); });
  std::vector<SpectralField> varpi;
  for (int k = 0; k < 8; ++k) {
    const double l = -1.0 + (2.0 * k + 1.0) / 8.0;
    varpi.push_back(std::abs(l) < 0.5 ? SpectralField::constant(g, 1.0)
                                      : SpectralField::zero(g));
  }
  auto st = build_initial_state(curve, eps, 8, g, eta0, varpi);

  CHECK(st.n_layers == 8);
  CHECK(st.layer_spacing() == doctest::Approx(0.25));
  CHECK(st.layer_node(0) == doctest::Approx(-0.875));
  CHECK(st.layer_node(7) == doctest::Approx(0.875));
  for (int k = 0; k < 8; ++k) {
    const auto i = static_cast<size_t>(k);
    const double l = st.layer_node(k);
    for (int j = 0; j < g.size(); ++j) {
      CHECK(st.w1[i].value(j) ==
            doctest::Approx(eps * (l + eta0.value(j))).epsilon(1e-14));
    }
    CHECK(st.w3[i].max_abs() == 0.0);
    CHECK((st.active[i] != 0) == (std::abs(l) < 0.5));
  }
  // The derived slope field is the spectral derivative of the offset.
  const auto w2 = st.derived_w2(3);
  for (int j = 0; j < g.size(); ++j) {
    CHECK(w2.value(j) ==
          doctest::Approx(-eps * 0.02 * kTwoPi * std::sin(kTwoPi * g.node(j))).epsilon(1e-11));
  }

  // Density on an outer layer is rejected.
  auto bad = varpi;
  bad[0] = SpectralField::constant(g, 0.1);
  CHECK_THROWS_AS((void)build_initial_state(curve, eps, 8, g, eta0, bad), InvalidArgument);
  // Field count must match the layer count.
  CHECK_THROWS_AS((void)build_initial_state(curve, eps, 4, g, eta0, varpi), InvalidArgument);
  // Nonpositive thickness scale.
  CHECK_THROWS_AS((void)build_initial_state(curve, 0.0, 8, g, eta0, varpi), InvalidArgument);
  // Mismatched grid.
  PeriodicGrid g2(64);
  CHECK_THROWS_AS(
      (void)build_initial_state(curve, eps, 8, g, SpectralField::zero(g2), varpi),
      InvalidArgument);
}

TEST_CASE("thickness integral: flat exactness, additivity, antisymmetry") {
  PeriodicGrid g(64);
  auto st = flat_stack(g, 0.1, kStackDensities);

  SUBCASE("flat stack integrates to the node separation exactly") {
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        const auto gij = thickness_integral(st, i, j);
        const double expect = st.layer_node(j) - st.layer_node(i);
        for (int m = 0; m < g.size(); m += 7) {
          CHECK(gij.value(m) == doctest::Approx(expect).epsilon(1e-15));
        }
      }
    }
  }

  SUBCASE("constant thickness deviations follow the half/full/half rule") {
    for (int k = 0; k < 8; ++k) {
      st.w3[static_cast<size_t>(k)] = SpectralField::constant(g, 0.1 * (k + 1));
    }
    // From node 1 to node 4: h * (w3_1/2 + w3_2 + w3_3 + w3_4/2).
    const double h = st.layer_spacing();
    const double expect = (st.layer_node(4) - st.layer_node(1)) +
                          h * (0.5 * 0.2 + 0.3 + 0.4 + 0.5 * 0.5);
    const auto g14 = thickness_integral(st, 1, 4);
    CHECK(g14.value(0) == doctest::Approx(expect).epsilon(1e-14));
    // Antisymmetric under swapping the endpoints.
    const auto g41 = thickness_integral(st, 4, 1);
    CHECK(g41.value(0) == doctest::Approx(-expect).epsilon(1e-14));
    // Additive over concatenation.
    const auto g12 = thickness_integral(st, 1, 2);
    const auto g24 = thickness_integral(st, 2, 4);
    CHECK(g12.value(0) + g24.value(0) == doctest::Approx(g14.value(0)).epsilon(1e-14));
    // Zero for equal endpoints.
    CHECK(thickness_integral(st, 3, 3).max_abs() == 0.0);
  }

  SUBCASE("layer indices are validated") {
    CHECK_THROWS_AS((void)thickness_integral(st, 0, 8), InvalidArgument);
    CHECK_THROWS_AS((void)thickness_integral(st, -1, 0), InvalidArgument);
  }
}

TEST_CASE("admissibility residual: zero on construction, detects decoupling") {
  PeriodicGrid g(96);
  auto curve = unit_circle();
  auto eta0 = SpectralField::sample(g, [](double s) { return 0.05 * std::sin(kTwoPi * s); });
  std::vector<SpectralField> varpi(8, SpectralField::zero(g));
  varpi[3] = SpectralField::constant(g, 1.0);
  varpi[4] = SpectralField::constant(g, 1.0);
  auto st = build_initial_state(curve, 0.03, 8, g, eta0, varpi);

  CHECK(admissibility_residual(st) < 1e-14);

  st.w1[5] = st.w1[5] + 2e-6;
  const double resid = admissibility_residual(st);
  CHECK(resid > 1.99e-6);
  CHECK(resid < 2.01e-6);
}

TEST_CASE("coupling projection restores admissibility without touching transport") {
  PeriodicGrid g(96);
  auto curve = unit_circle();
  auto eta0 = SpectralField::sample(g, [](double s) { return 0.04 * std::cos(kTwoPi * s); });
  std::vector<SpectralField> varpi(8, SpectralField::zero(g));
  varpi[3] = SpectralField::sample(g, [](double s) { return 1.0 + 0.2 * std::sin(kTwoPi * s); });
  varpi[4] = SpectralField::constant(g, 0.7);
  auto st = build_initial_state(curve, 0.03, 8, g, eta0, varpi);
  // Give the stack a non-flat thickness profile so the anchors are nontrivial.
  for (int k = 0; k < 8; ++k) {
    const double a = 0.02 * (k - 3.5);
    st.w3[static_cast<size_t>(k)] =
        SpectralField::sample(g, [a](double s) { return a * std::cos(kTwoPi * s); });
  }
  project_onto_coupling(st);  // re-anchor onto the new thickness profile
  REQUIRE(admissibility_residual(st) < 1e-16);

  auto broken = st;
  broken.w1[2] = broken.w1[2] + 3e-5;
  broken.w1[6] = broken.w1[6] + (-1e-5);
  REQUIRE(admissibility_residual(broken) > 1e-5);

  // Per-node layer sum of nu before projection (the projection invariant).
  std::vector<double> sum_before(static_cast<size_t>(g.size()), 0.0);
  for (int k = 0; k < 8; ++k)
    for (int j = 0; j < g.size(); ++j)
      sum_before[static_cast<size_t>(j)] += broken.w1[static_cast<size_t>(k)].value(j);

  auto fixed = broken;
  project_onto_coupling(fixed);
  CHECK(admissibility_residual(fixed) < 1e-16);
  for (int k = 0; k < 8; ++k) {
    const auto m = static_cast<size_t>(k);
    CHECK((fixed.w3[m] - broken.w3[m]).max_abs() == 0.0);
    CHECK((fixed.w4[m] - broken.w4[m]).max_abs() == 0.0);
    // The projection is the nearest admissible family: displacement stays on
    // the order of the defect it removes.
    CHECK((fixed.w1[m] - broken.w1[m]).max_abs() < 5e-5);
  }
  for (int j = 0; j < g.size(); ++j) {
    double sum_after = 0.0;
    for (int k = 0; k < 8; ++k) sum_after += fixed.w1[static_cast<size_t>(k)].value(j);
    CHECK(std::abs(sum_after - sum_before[static_cast<size_t>(j)]) < 1e-15);
  }

  // Projecting an already admissible state is the identity up to round-off.
  auto again = fixed;
  project_onto_coupling(again);
  CHECK(state_distance(again, fixed) < 1e-16);
}

TEST_CASE("projected evolution pins the residual at round-off") {
  PeriodicGrid g(128);
  const double eps = 0.04;
  auto curve = unit_circle();
  std::vector<SpectralField> varpi(8, SpectralField::zero(g));
  for (int k = 2; k <= 5; ++k) {
    const double c = 0.8 + 0.1 * k;
    varpi[static_cast<size_t>(k)] =
        SpectralField::sample(g, [c](double s) { return c * (1.0 + 0.1 * std::cos(kTwoPi * s)); });
  }
  auto st = build_initial_state(curve, eps, 8, g, SpectralField::zero(g), varpi);

  EvolutionConfig cfg;
  cfg.t_end = 0.03;
  cfg.checkpoint_stride = 1;
  cfg.project_admissibility = true;
  const auto traj = integrate(st, cfg);
  REQUIRE(traj.completed);
  REQUIRE(!traj.steps.empty());
  const auto c0 = traj.steps.front().circulation;
  for (const auto& step : traj.steps) {
    CHECK(step.admissibility < 1e-14);
    for (size_t k = 0; k < c0.size(); ++k) CHECK(std::abs(step.circulation[k] - c0[k]) < 1e-14);
  }

  // The same run without projection drifts measurably, so the switch is load-bearing.
  EvolutionConfig raw = cfg;
  raw.project_admissibility = false;
  const auto drift = integrate(st, raw);
  REQUIRE(drift.completed);
  CHECK(drift.steps.back().admissibility > 1e-6);
  // The projection is a small correction: both runs land on nearby states.
  CHECK(state_distance(traj.snapshots.back(), drift.snapshots.back()) < 1e-4);
}

TEST_CASE("assembled velocity reproduces the exact field of a ring stack") {
  PeriodicGrid g(128);
  const double eps = 0.05;
  auto st = flat_stack(g, eps, kStackDensities);
  const auto cache = make_curve_cache(st.curve, g);
  const double h = st.layer_spacing();

  for (int i : {0, 2, 3, 5, 7}) {
    const auto u = assemble_velocity(st, i, cache, KernelEvalConfig{});
    // Rings strictly inside the target (larger layer node = smaller radius)
    // contribute like point vortices; the target's own ring contributes
    // half its jump; rings outside contribute nothing.
    double enclosed = 0.5 * kStackDensities[static_cast<size_t>(i)];
    for (int j = i + 1; j < 8; ++j) enclosed += kStackDensities[static_cast<size_t>(j)];
    const double rho_i = kRadius - eps * st.layer_node(i);
    const double expect = h * enclosed / (kTwoPi * rho_i);
    for (int j = 0; j < g.size(); j += 13) {
      const double s = g.node(j);
      const Vec2 tang{-std::sin(kTwoPi * s), std::cos(kTwoPi * s)};
      CHECK(dot(u.v[static_cast<size_t>(j)], tang) == doctest::Approx(expect).epsilon(1e-11));
      CHECK(std::abs(dot(u.v[static_cast<size_t>(j)], perp(tang))) < 1e-12);
    }
  }
}

TEST_CASE("frame projection has circle closed forms") {
  PeriodicGrid g(64);
  auto curve = unit_circle();
  const auto cache = make_curve_cache(curve, g);
  const double nu_val = 0.01;
  const auto nu = SpectralField::constant(g, nu_val);
  const double scale = 1.0 - kTwoPi * nu_val;  // |e_s| on the offset circle

  VecSamples tangential{g, {}}, normal{g, {}};
  tangential.v.resize(static_cast<size_t>(g.size()));
  normal.v.resize(static_cast<size_t>(g.size()));
  for (int j = 0; j < g.size(); ++j) {
    const double s = g.node(j);
    tangential.v[static_cast<size_t>(j)] = {-std::sin(kTwoPi * s), std::cos(kTwoPi * s)};
    normal.v[static_cast<size_t>(j)] = {-std::cos(kTwoPi * s), -std::sin(kTwoPi * s)};
  }

  const auto ft = project_components(cache, nu, tangential);
  const auto fn = project_components(cache, nu, normal);
  for (int j = 0; j < g.size(); j += 5) {
    CHECK(ft.normal.value(j) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ft.tangential.value(j) == doctest::Approx(1.0 / scale).epsilon(1e-12));
    CHECK(ft.metric_dot.value(j) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fn.normal.value(j) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fn.tangential.value(j) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fn.metric_dot.value(j) == doctest::Approx(kTwoPi / scale).epsilon(1e-12));
  }

  // Offsets outside the chart make the frame degenerate.
  const auto huge = SpectralField::constant(g, 0.12);  // 1 - 2 pi nu < 1/4
  CHECK_THROWS_AS((void)project_components(cache, huge, tangential), NumericalFailure);
}

TEST_CASE("uniform annulus is a steady state of the layered equations") {
  PeriodicGrid g(128);
  auto st = flat_stack(g, 0.05, kStackDensities);
  const auto cache = make_curve_cache(st.curve, g);
  const EvolutionConfig cfg{};

  const auto r = layered_rhs(st, cache, cfg);
  double worst = 0.0;
  for (const auto& d : r.deriv) {
    worst = std::max({worst, d.dw1.max_abs(), d.dw3.max_abs(), d.dw4.max_abs()});
  }
  CHECK(worst < 1e-10);
  CHECK(r.max_speed > 0.1);
  CHECK(r.max_speed < 1.0);

  // Integrating leaves every field unchanged.
  EvolutionConfig run = cfg;
  run.t_end = 0.02;
  const auto traj = integrate(st, run);
  CHECK(traj.completed);
  CHECK(state_distance(traj.snapshots.back(), st) < 1e-9);
}

TEST_CASE("layer circulations are conserved to round-off by the transport form") {
  PeriodicGrid g(128);
  auto curve = unit_circle();
  auto eta0 = SpectralField::sample(g, [](double s) { return 0.03 * std::cos(kTwoPi * s); });
  std::vector<SpectralField> varpi;
  for (int k = 0; k < 8; ++k) {
    const double l = -1.0 + (2.0 * k + 1.0) / 8.0;
    if (std::abs(l) < 0.5) {
      varpi.push_back(SpectralField::sample(
          g, [&](double s) { return (1.0 + 0.2 * std::cos(kTwoPi * s)) * (1.0 + 0.1 * l); }));
    } else {
      varpi.push_back(SpectralField::zero(g));
    }
  }
  auto st = build_initial_state(curve, 0.05, 8, g, eta0, varpi);

  std::vector<double> c0;
  for (int k = 0; k < 8; ++k) c0.push_back(st.w4[static_cast<size_t>(k)].mean());

  EvolutionConfig cfg;
  cfg.t_end = 0.03;
  const auto traj = integrate(st, cfg);
  REQUIRE(traj.completed);
  for (const auto& step : traj.steps) {
    for (int k = 0; k < 8; ++k) {
      CHECK(std::abs(step.circulation[static_cast<size_t>(k)] - c0[static_cast<size_t>(k)]) <
            1e-14);
    }
  }
  // Inactive layers stay identically zero, not merely small.
  const auto& fin = traj.snapshots.back();
  for (int k : {0, 1, 6, 7}) CHECK(fin.w4[static_cast<size_t>(k)].max_abs() == 0.0);
  // The dynamics is nontrivial: the density fields genuinely deform.
  CHECK((fin.w4[3] - st.w4[3]).max_abs() > 1e-6);
}

TEST_CASE("time stepping: explicit CFL violations and coarse grids are refused") {
  PeriodicGrid g(128);
  auto st = flat_stack(g, 0.05, kStackDensities);

  EvolutionConfig cfg;
  cfg.t_end = 0.1;
  cfg.dt = 1.0;  // far beyond the CFL limit
  const auto traj = integrate(st, cfg);
  CHECK_FALSE(traj.completed);
  CHECK(traj.halt_reason.find("CFL") != std::string::npos);

  PeriodicGrid coarse(64);  // resolution guard needs >= 80 points here
  auto st2 = flat_stack(coarse, 0.05, kStackDensities);
  EvolutionConfig cfg2;
  cfg2.t_end = 0.01;
  CHECK_THROWS_AS((void)integrate(st2, cfg2), InvalidArgument);

  EvolutionConfig cfg3;
  cfg3.t_end = -1.0;
  CHECK_THROWS_AS((void)integrate(st, cfg3), InvalidArgument);
}

TEST_CASE("velocity cap halts the run with a recorded reason") {
  PeriodicGrid g(128);
  auto st = flat_stack(g, 0.05, kStackDensities);
  EvolutionConfig cfg;
  cfg.t_end = 0.1;
  cfg.max_velocity_cap = 1e-6;
  const auto traj = integrate(st, cfg);
  CHECK_FALSE(traj.completed);
  CHECK(traj.halt_reason.find("cap") != std::string::npos);
  CHECK(traj.snapshots.back().time == 0.0);
}

TEST_CASE("kernel lower-bound certificate is positive and seed-deterministic") {
  PeriodicGrid g(128);
  auto st = flat_stack(g, 0.05, kStackDensities);
  const auto a = kernel_lower_bound_check(st, 0.05, 400, 7);
  const auto b = kernel_lower_bound_check(st, 0.05, 400, 7);
  CHECK(a.min_ratio == b.min_ratio);
  CHECK(a.s == b.s);
  // On circular layers the ratio is beta-independent and minimized at
  // parameter offset 1/2 between the two innermost rings, where it equals
  // 16 * rho_min^2 = 16 (kRadius - 0.875 eps)^2 ~ 0.213: every sampled
  // value must sit above that floor, and sampling should get close to it.
  const double floor = 16.0 * std::pow(kRadius - 0.875 * 0.05, 2);
  CHECK(a.min_ratio > floor * 0.999);
  CHECK(a.min_ratio < 0.6);
  CHECK(a.n_samples == 400);
  CHECK_THROWS_AS((void)kernel_lower_bound_check(st, -0.1, 10, 1), InvalidArgument);
}

TEST_CASE("reference graph evolution: uniform sheet is steady, circulation conserved") {
  PeriodicGrid g(128);
  auto curve = unit_circle();

  GraphState steady{SpectralField::zero(g), SpectralField::constant(g, 1.0), 0.0};
  EvolutionConfig cfg;
  cfg.t_end = 0.1;
  const auto traj = integrate_reference(curve, steady, cfg);
  CHECK(traj.completed);
  CHECK(traj.snapshots.back().nu.max_abs() < 1e-12);
  CHECK((traj.snapshots.back().varpi + (-1.0) * SpectralField::constant(g, 1.0)).max_abs() <
        1e-12);

  GraphState wavy{SpectralField::zero(g),
                  SpectralField::sample(
                      g, [](double s) { return 1.0 + 0.3 * std::cos(kTwoPi * s); }),
                  0.0};
  const auto traj2 = integrate_reference(curve, wavy, cfg);
  CHECK(traj2.completed);
  CHECK(traj2.snapshots.back().varpi.mean() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(traj2.snapshots.back().nu.max_abs() > 1e-8);  // the sheet genuinely moves
  for (const auto& step : traj2.steps) {
    CHECK(step.circulation[0] == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("classic Runge-Kutta converges at fourth order on the layered system") {
  PeriodicGrid g(128);
  auto curve = unit_circle();
  auto eta0 = SpectralField::sample(g, [](double s) { return 0.04 * std::cos(kTwoPi * s); });
  std::vector<SpectralField> varpi;
  for (int k = 0; k < 8; ++k) {
    const double l = -1.0 + (2.0 * k + 1.0) / 8.0;
    if (std::abs(l) < 0.5) {
      const double chi = std::cos(kPi * l) * std::cos(kPi * l);
      varpi.push_back(SpectralField::sample(
          g, [&](double s) { return chi * (1.0 + 0.3 * std::cos(kTwoPi * s)); }));
    } else {
      varpi.push_back(SpectralField::zero(g));
    }
  }
  auto st = build_initial_state(curve, 0.05, 8, g, eta0, varpi);

  auto run_fixed = [&](double dt) {
    EvolutionConfig cfg;
    cfg.t_end = 0.02;
    cfg.dt = dt;
    cfg.filter_threshold = 0.0;  // filtering would mask the smooth error
    const auto traj = integrate(st, cfg);
    REQUIRE(traj.completed);
    return traj.snapshots.back();
  };
  const auto y1 = run_fixed(0.005);
  const auto y2 = run_fixed(0.0025);
  const auto y4 = run_fixed(0.00125);
  const double e1 = state_distance(y1, y2);
  const double e2 = state_distance(y2, y4);
  const double order = std::log2(e1 / e2);
  CHECK(order == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("integration diagnostics: times, support width, admissibility drift") {
  PeriodicGrid g(128);
  const double eps = 0.05;
  auto st = flat_stack(g, eps, kStackDensities);
  EvolutionConfig cfg;
  cfg.t_end = 0.03;
  cfg.checkpoint_stride = 1;
  const auto traj = integrate(st, cfg);
  REQUIRE(traj.completed);
  REQUIRE(!traj.steps.empty());

  double prev = 0.0;
  for (const auto& step : traj.steps) {
    CHECK(step.time > prev);
    prev = step.time;
    CHECK(step.max_speed > 0.0);
    CHECK(step.admissibility < 1e-10);
    CHECK(static_cast<int>(step.circulation.size()) == 8);
    // Active layers span l in [-0.375, 0.375]: width = 0.75 * eps.
    CHECK(step.support_width == doctest::Approx(0.75 * eps).epsilon(1e-6));
  }
  CHECK(traj.steps.back().time == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(traj.snapshots.back().time == doctest::Approx(0.03).epsilon(1e-12));
  // Stride 1 checkpoints: initial + one per step except the last + final.
  CHECK(traj.snapshots.size() == traj.steps.size() + 1);
}
