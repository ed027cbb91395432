#include <catch2/catch_amalgamated.hpp>

#include "baefm/params.hpp"
#include "baefm/quadrature.hpp"

using namespace baefm;
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

TEST_CASE("pump parameter") {
  SystemParams p = default_params();

  SECTION("eta_c0 = gamma/2 at Omega = 0 gives K = gamma") {
    p.eta_c0 = 0.5 * p.gamma;
    CHECK_THAT(pump_parameter(p, 0.0), WithinRel(p.gamma, 1e-15));
  }
  SECTION("zero coupling gives K = 0") {
    p.eta_c0 = 0.0;
    CHECK(pump_parameter(p, 0.0) == 0.0);
    CHECK(pump_parameter(p, 3.7) == 0.0);
  }
  SECTION("denominator doubles at Omega = gamma") {
    p.eta_c0 = 0.5 * p.gamma;
    CHECK_THAT(pump_parameter(p, p.gamma), WithinRel(0.5 * p.gamma, 1e-15));
  }
  SECTION("even and monotonically decreasing in |Omega|") {
    double prev = pump_parameter(p, 0.0);
    for (double omega : {0.01, 0.1, 0.5, 1.0, 3.0, 10.0}) {
      const double k = pump_parameter(p, omega);
      CHECK(pump_parameter(p, -omega) == k);
      CHECK(k < prev);
      prev = k;
    }
  }
}

TEST_CASE("cavity reflection factor") {
  SystemParams p = default_params();

  CHECK(xi_factor(p, 0.0) == complex(1.0, 0.0));
  CHECK_THAT(std::abs(xi_factor(p, p.gamma) - complex(0.0, 1.0)), WithinAbs(0.0, 1e-15));

  SECTION("unit modulus, reflection symmetry") {
    for (double omega : {-10.0, -0.3, 0.0, 1e-4, 0.7, 2.0, 50.0}) {
      const complex xi = xi_factor(p, omega);
      CHECK_THAT(std::abs(xi), WithinRel(1.0, 1e-14));
      CHECK_THAT(std::abs(xi * xi_factor(p, -omega) - 1.0), WithinAbs(0.0, 1e-14));
      CHECK_THAT(std::abs(std::conj(xi) - xi_factor(p, -omega)), WithinAbs(0.0, 1e-14));
    }
  }
}

TEST_CASE("detuning kernel") {
  SystemParams p = default_params();

  SECTION("vanishes identically iff the symmetric combination is zero") {
    p.delta_plus = 0.02;
    p.delta_minus = -0.02;  // Delta = 0, delta = 0.02
    for (double omega : {0.0, 0.3, 5.0}) CHECK(detuning_kernel(p, omega) == complex(0.0, 0.0));
  }
  SECTION("static value Delta / (gamma gamma_m)") {
    p.delta_plus = 0.01;
    p.delta_minus = 0.03;
    const double Delta = 0.02;
    CHECK_THAT(std::abs(detuning_kernel(p, 0.0) - Delta / (p.gamma * p.gamma_m)),
               WithinAbs(0.0, 1e-12));
  }
  SECTION("substitution checked against an independent evaluation") {
    p.gamma = 1.0;
    p.gamma_m = 1e-6;
    p.delta_plus = p.delta_minus = 1e-2;  // Delta = 1e-2
    // independent: |D| = Delta / (|gamma - i 0| |gamma_m - i 0|) evaluated longhand
    const long double expected = 1e-2L / (1.0L * 1e-6L);
    CHECK_THAT(std::abs(detuning_kernel(p, 0.0)), WithinRel(double(expected), 1e-12));
    CHECK_THAT(std::abs(detuning_kernel(p, 0.0)), WithinRel(1e4, 1e-12));
  }
}

TEST_CASE("thermal occupancy formula") {
  SECTION("tends to one for large argument") {
    CHECK_THAT(thermal_occupancy(50.0), WithinRel(1.0, 1e-15));
  }
  SECTION("argument ln 2 gives 2") {
    CHECK_THAT(thermal_occupancy(std::log(2.0)), WithinRel(2.0, 1e-14));
  }
  SECTION("small-argument expansion 1/x + 1/2 + x/12") {
    for (double x : {1e-4, 1e-3, 1e-2}) {
      const double series = 1.0 / x + 0.5 + x / 12.0;
      CHECK_THAT(thermal_occupancy(x), WithinRel(series, 1e-8));
    }
  }
  SECTION("nonpositive argument rejected") {
    CHECK_THROWS_AS(thermal_occupancy(0.0), std::invalid_argument);
    CHECK_THROWS_AS(thermal_occupancy(-1.0), std::invalid_argument);
  }
}

TEST_CASE("parameter validation") {
  SECTION("accepts the working regime") { CHECK_NOTHROW(validate(default_params())); }
  SECTION("rejects gamma_m >= gamma") {
    SystemParams p = default_params();
    p.gamma_m = p.gamma;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    p.gamma_m = 2.0 * p.gamma;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
  }
  SECTION("hierarchy margin is enforced and overridable") {
    SystemParams p = default_params();
    p.gamma_m = 0.2;  // only a factor 5 below gamma
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    CHECK_NOTHROW(validate(p, 5.0));
  }
  SECTION("rejects detunings at or above the linewidth") {
    SystemParams p = default_params();
    p.delta_plus = p.gamma;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    p.delta_plus = 0.0;
    p.delta_minus = -1.5 * p.gamma;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
  }
  SECTION("rejects nonpositive rates") {
    SystemParams p = default_params();
    p.gamma = 0.0;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
  }
}

TEST_CASE("detuning combinations reconstruct the sidebands") {
  SECTION("from the combinations, reconstruction is exact by definition") {
    const DerivedCouplings d{0.0125, -0.003};
    CHECK(d.delta_plus() == 0.0125 + -0.003);
    CHECK(d.delta_minus() == 0.0125 - -0.003);
  }
  SECTION("round trip from sidebands") {
    // Exact up to rounding of the half-sums; the error is a few ulp of the
    // larger combination, which can be large relative to a much smaller
    // sideband value.
    for (auto [dp, dm] : {std::pair{0.01, 0.02}, {0.3, -0.1}, {-1e-5, 7e-4}}) {
      const auto d = DerivedCouplings::from_sidebands(dp, dm);
      const double scale = std::max(std::abs(d.capital_delta), std::abs(d.small_delta));
      CHECK_THAT(d.delta_plus(), WithinAbs(dp, 4e-16 * scale));
      CHECK_THAT(d.delta_minus(), WithinAbs(dm, 4e-16 * scale));
    }
  }
}

TEST_CASE("signal pulse") {
  SignalPulse pulse;
  pulse.f_s0 = 0.25;
  pulse.tau = 200.0;

  SECTION("measurement bandwidth is positive and finite") {
    CHECK(pulse.bandwidth() > 0.0);
    CHECK(std::isfinite(pulse.bandwidth()));
    CHECK_THAT(pulse.bandwidth(), WithinRel(2.0 * kPi / 200.0, 1e-15));
  }
  SECTION("force quadratures follow the carrier phase") {
    pulse.psi_f = 0.0;
    CHECK_THAT(pulse.force_quadrature_a(), WithinRel(0.25 / std::sqrt(2.0), 1e-15));
    CHECK_THAT(pulse.force_quadrature_phi(), WithinAbs(0.0, 1e-16));
    pulse.psi_f = kPi / 2.0;
    CHECK_THAT(pulse.force_quadrature_phi(), WithinRel(-0.25 / std::sqrt(2.0), 1e-15));
  }
  SECTION("physical normalization") {
    pulse.physical_norm = PhysicalNorm{2.0, 8.0};  // mass, hbar*omega_m
    CHECK_THAT(pulse.f_s0_from_physical(4.0), WithinRel(4.0 / std::sqrt(32.0), 1e-15));
    SignalPulse bare;
    CHECK_THROWS_AS(bare.f_s0_from_physical(1.0), std::logic_error);
  }
  SECTION("validation rejects nonpositive tau") {
    pulse.tau = 0.0;
    CHECK_THROWS_AS(validate(pulse), std::invalid_argument);
  }
}

TEST_CASE("quadrature basis conversions are exact inverses") {
  QuadratureState s{0.3, -1.2, 0.7, 2.5, -0.4, 0.9};
  const auto g = to_collective(s);
  const auto back = to_per_mode(g);
  const auto a = s.as_array();
  const auto b = back.as_array();
  for (int i = 0; i < kStateDim; ++i) CHECK_THAT(b[i], WithinAbs(a[i], 1e-15));

  // sum/difference definition spot check
  CHECK_THAT(g.g_a_plus, WithinRel((0.3 - 1.2) / std::sqrt(2.0), 1e-15));
  CHECK_THAT(g.g_phi_minus, WithinRel((0.7 - 2.5) / std::sqrt(2.0), 1e-15));
}
