#include <catch2/catch_amalgamated.hpp>

#include "baefm/analytics.hpp"
#include "baefm/params.hpp"

using namespace baefm;
using namespace baefm::analytics;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
SystemParams default_params() {
  SystemParams p;
  p.gamma = 1.0;
  p.gamma_m = 1e-3;
  p.omega_m = 100.0;
  p.eta_c0 = 0.5;
  return p;
}
}  // namespace

TEST_CASE("raw spectrum and the standard quantum limit") {
  SystemParams p = default_params();

  SECTION("balanced point: S = 2 gamma_m + 2 sqrt(gamma_m^2 + Omega^2)") {
    p.n_thermal = 0.0;
    for (double omega : {0.0, 1e-3, 0.05}) {
      const double k_star = std::sqrt(p.gamma_m * p.gamma_m + omega * omega);
      CHECK_THAT(sql_spectrum_raw(p, omega, k_star),
                 WithinRel(2.0 * p.gamma_m + 2.0 * k_star, 1e-14));
    }
  }
  SECTION("numeric minimum over K equals thermal floor plus the bound") {
    p.n_thermal = 1.3;
    for (double omega : {0.0, 2e-3, 0.1, 1.0}) {
      const auto m = minimize_on_log_axis(
          [&](double k) { return sql_spectrum_raw(p, omega, k); }, 1e-8, 1e8);
      CHECK_THAT(m.value, WithinRel(thermal_floor(p) + sql_bound(p, omega), 1e-10));
      CHECK_THAT(m.x, WithinRel(std::sqrt(p.gamma_m * p.gamma_m + omega * omega), 1e-4));
    }
  }
  SECTION("substitution at gamma_m = 1e-6, K = gamma") {
    p.gamma_m = 1e-6;
    p.n_thermal = 0.0;
    const double expected = 2e-6 + 1e-12 + 1.0;  // independent term-by-term sum
    CHECK_THAT(sql_spectrum_raw(p, 0.0, 1.0), WithinRel(expected, 1e-14));
  }
  SECTION("bound values") {
    CHECK_THAT(sql_bound(p, 0.0), WithinRel(2.0 * p.gamma_m, 1e-15));
    CHECK_THAT(sql_bound(p, p.gamma_m), WithinRel(2.0 * std::sqrt(2.0) * p.gamma_m, 1e-15));
    CHECK_THAT(sql_bound(p, 50.0 * p.gamma_m), WithinRel(2.0 * 50.0 * p.gamma_m, 2e-4));
  }
  SECTION("K <= 0 rejected") {
    CHECK_THROWS_AS(sql_spectrum_raw(p, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(bae_spectrum(p, 0.0, -1.0), std::invalid_argument);
  }
}

TEST_CASE("back-action-evading spectrum") {
  SystemParams p = default_params();
  p.n_thermal = 0.4;

  SECTION("large-K limit is the thermal floor") {
    CHECK_THAT(bae_spectrum(p, 0.0, 1e9), WithinRel(thermal_floor(p), 1e-5));
  }
  SECTION("always below the raw spectrum, strictly") {
    for (double omega : {0.0, 1e-3, 0.2})
      for (double k = 1e-6; k < 1e6; k *= 10.0)
        CHECK(bae_spectrum(p, omega, k) < sql_spectrum_raw(p, omega, k));
  }
  SECTION("beats the bound exactly when K exceeds half the balanced point") {
    p.n_thermal = 0.0;
    const double omega = 0.01;
    const double mech = std::sqrt(p.gamma_m * p.gamma_m + omega * omega);
    CHECK(bae_spectrum(p, omega, 0.51 * mech) - thermal_floor(p) < sql_bound(p, omega));
    CHECK(bae_spectrum(p, omega, 0.49 * mech) - thermal_floor(p) > sql_bound(p, omega));
  }
  SECTION("substitution") {
    SystemParams q = p;
    q.gamma_m = 1e-6;
    q.n_thermal = 0.0;
    CHECK_THAT(bae_spectrum(q, 0.0, 1.0), WithinRel(2e-6 + 1e-12, 1e-14));
  }
}

TEST_CASE("detuned spectrum") {
  SystemParams p = default_params();
  p.n_thermal = 0.9;

  SECTION("reduces to the evading spectrum when the detunings vanish") {
    for (double omega : {0.0, 0.02, 0.6})
      for (double k : {1e-4, 1.0, 30.0})
        CHECK_THAT(detuned_spectrum(p, omega, k), WithinRel(bae_spectrum(p, omega, k), 1e-14));
  }
  SECTION("the printed thermal prefactor differs by a constant 2 gamma_m n") {
    p.delta_plus = 0.0;
    p.delta_minus = 0.0;
    for (double omega : {0.0, 0.1})
      for (double k : {1e-3, 2.0}) {
        const double diff = detuned_spectrum(p, omega, k, ThermalConvention::n_plus_one) -
                            bae_spectrum(p, omega, k);
        CHECK_THAT(diff, WithinRel(-2.0 * p.gamma_m * p.n_thermal, 1e-10));
      }
  }
  SECTION("small-pump window reproduces the three-term asymptotic form") {
    p.n_thermal = 0.0;
    p.delta_plus = 0.044;   // delta = 0.04, Delta = 0.004
    p.delta_minus = -0.036;
    const double omega = 0.0;
    const double k_crit1 = regime_classify(p, omega, 1.0).k_crit1;
    for (double k : {1e-5, 1e-4}) {
      REQUIRE(k < 0.02 * k_crit1);
      const double exact_resid = detuned_spectrum(p, omega, k) - bae_spectrum(p, omega, k);
      const double asym_resid = small_pump_spectrum(p, omega, k) - bae_spectrum(p, omega, k);
      CHECK_THAT(exact_resid, WithinRel(asym_resid, 0.05));
    }
  }
}

TEST_CASE("pump regime classification") {
  SystemParams p = default_params();

  SECTION("threshold substitution") {
    p.gamma_m = 1e-6;
    p.delta_plus = 0.011;    // delta = 1e-3, Delta = 1e-2
    p.delta_minus = 0.009;
    const auto rc = regime_classify(p, 0.0, 1.0);
    CHECK_THAT(rc.k_crit1, WithinRel(1e-7, 1e-10));
    CHECK_THAT(rc.k_crit2, WithinRel(1e-4, 1e-10));
    CHECK(rc.regime == Regime::large_pump);
  }
  SECTION("symmetric-free case has infinite thresholds") {
    p.delta_plus = 0.02;
    p.delta_minus = -0.02;  // Delta = 0
    const auto rc = regime_classify(p, 0.3, 1e12);
    CHECK(std::isinf(rc.k_crit1));
    CHECK(std::isinf(rc.k_crit2));
    CHECK(rc.regime == Regime::small_pump);
  }
  SECTION("bucket membership between the thresholds") {
    p.gamma_m = 1e-6;
    p.delta_plus = 0.011;
    p.delta_minus = 0.009;
    CHECK(regime_classify(p, 0.0, 1e-8).regime == Regime::small_pump);
    CHECK(regime_classify(p, 0.0, 1e-5).regime == Regime::intermediate_pump);
    CHECK(regime_classify(p, 0.0, 1e-2).regime == Regime::large_pump);
  }
}

TEST_CASE("optimal pump level") {
  // Evaluated off resonance so the quantum part dominates the thermal floor.
  SystemParams p = default_params();
  p.gamma_m = 1e-6;
  p.n_thermal = 0.0;
  const double omega = 0.3;
  const double opt2 = p.gamma * p.gamma + omega * omega;

  SECTION("antisymmetric-dominated detunings: small-pump closed form") {
    p.delta_plus = 0.04999;  // delta = 0.05, Delta = -1e-5
    p.delta_minus = -0.05001;
    const auto opt = optimal_pump(p, omega);
    REQUIRE(opt.bounded);
    CHECK(opt.regime == Regime::small_pump);
    CHECK_THAT(opt.s_min, WithinRel(opt.small_pump_s_min_delta_dom, 0.05));
    CHECK_THAT(opt.small_pump_s_min_delta_dom,
               WithinRel(thermal_floor(p) + sql_bound(p, omega) * 0.05 / std::sqrt(opt2), 1e-12));
    CHECK_THAT(opt.k_opt, WithinRel(opt.small_pump_k_opt, 0.1));
  }
  SECTION("symmetric-dominated detunings: intermediate closed form") {
    p.delta_plus = 0.011;  // delta = 1e-3, Delta = 1e-2
    p.delta_minus = 0.009;
    const auto opt = optimal_pump(p, omega);
    REQUIRE(opt.bounded);
    CHECK(opt.regime == Regime::intermediate_pump);
    CHECK_THAT(opt.s_min, WithinRel(opt.intermediate_s_min, 0.05));
    // the closed form is the exact interior minimum of the cubic-in-K
    // asymptotic spectrum; pin it against an independent minimization
    const auto m = minimize_on_log_axis(
        [&](double k) { return intermediate_pump_spectrum(p, omega, k); }, 1e-3, 1e3);
    CHECK_THAT(opt.intermediate_s_min, WithinRel(m.value, 1e-8));
    CHECK_THAT(opt.intermediate_k_opt, WithinRel(m.x, 1e-3));
  }
  SECTION("no detunings: monotone decrease, no finite optimum") {
    const auto opt = optimal_pump(p, omega);
    CHECK_FALSE(opt.bounded);
  }
  SECTION("coherent cancellation at the small-pump boundary, same-sign detunings") {
    // With sign(delta) = sign(Delta) the exact spectrum develops a deep
    // minimum at K |D| = |delta| on resonance, where the two residual
    // back-action routes interfere destructively; the incoherent asymptotic
    // form misses it.  The quantum part there sits far below the small-pump
    // closed form.
    p.delta_plus = 0.05001;  // delta = 0.05, Delta = +1e-5
    p.delta_minus = -0.04999;
    const auto opt0 = optimal_pump(p, 0.0);
    REQUIRE(opt0.bounded);
    const double k_notch = regime_classify(p, 0.0, 1.0).k_crit1;
    CHECK_THAT(opt0.k_opt, WithinRel(k_notch, 0.02));
    CHECK((opt0.s_min - thermal_floor(p)) <
          0.1 * (opt0.small_pump_s_min_delta_dom - thermal_floor(p)));
  }
}

TEST_CASE("detection threshold") {
  SystemParams p = default_params();
  SignalPulse pulse;
  pulse.tau = 1.0 / p.gamma_m;

  SECTION("substitution S = 2 gamma_m, tau = 1/gamma_m") {
    CHECK_THAT(detection_threshold(pulse, 2.0 * p.gamma_m),
               WithinRel(p.gamma_m * std::sqrt(2.0), 1e-14));
  }
  SECTION("doubling tau divides the threshold by sqrt(2)") {
    const double t1 = detection_threshold(pulse, 0.37);
    pulse.tau *= 2.0;
    CHECK_THAT(detection_threshold(pulse, 0.37), WithinRel(t1 / std::sqrt(2.0), 1e-14));
  }
  SECTION("large-pump limit of the evading spectrum") {
    p.n_thermal = 2.0;
    pulse.tau = 500.0;
    const double s_inf = bae_spectrum(p, 0.0, 1e10);
    const double limit = std::sqrt(2.0 * p.gamma_m * (2.0 * p.n_thermal + 1.0) / pulse.tau);
    CHECK_THAT(detection_threshold(pulse, s_inf), WithinRel(limit, 1e-4));
  }
}
