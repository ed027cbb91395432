#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

// Parameter types and the scalar helper functions everything else is built on.
//
// Unit convention: every rate (gamma, gamma_m, omega_m, detunings, spectral
// frequency Omega) is an angular frequency in one consistent unit.  All
// formulas are scale invariant under a common rescaling, so tests and the CLI
// default to gamma = 1.

namespace baefm {

using complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Three optical modes spaced by the mechanical frequency, middle mode pumped.
// gamma:       optical half linewidth (same for all three modes)
// gamma_m:     mechanical half linewidth
// omega_m:     mechanical eigenfrequency
// eta_c0:      product of the coupling constant and the mean pump amplitude
//              (both real by convention; only the product enters the dynamics)
// delta_plus:  right-sideband frequency offset
// delta_minus: left-sideband frequency offset
// n_thermal:   occupancy entering the thermal quadrature PSD (2 n + 1)
struct SystemParams {
  double gamma = 1.0;
  double gamma_m = 1e-3;
  double omega_m = 100.0;
  double eta_c0 = 0.5;
  double delta_plus = 0.0;
  double delta_minus = 0.0;
  double n_thermal = 0.0;
};

// Resolved-sideband hierarchy gamma_m << gamma << omega_m, enforced as
// factor-of-`margin` separations, plus |delta_pm| < gamma (the detuned
// analysis assumes detunings small against the optical linewidth).
inline void validate(const SystemParams& p, double hierarchy_margin = 10.0) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("SystemParams: " + what); };
  if (!(p.gamma > 0.0)) fail("gamma must be > 0");
  if (!(p.gamma_m > 0.0)) fail("gamma_m must be > 0");
  if (!(p.omega_m > 0.0)) fail("omega_m must be > 0");
  if (!(p.eta_c0 >= 0.0)) fail("eta_c0 must be >= 0");
  if (!(p.n_thermal >= 0.0)) fail("n_thermal must be >= 0");
  if (!(hierarchy_margin >= 1.0)) fail("hierarchy margin must be >= 1");
  if (!(p.gamma_m * hierarchy_margin <= p.gamma))
    fail("resolved-sideband hierarchy violated: need gamma_m << gamma (gamma_m*" +
         std::to_string(hierarchy_margin) + " <= gamma)");
  if (!(p.gamma * hierarchy_margin <= p.omega_m))
    fail("resolved-sideband hierarchy violated: need gamma << omega_m (gamma*" +
         std::to_string(hierarchy_margin) + " <= omega_m)");
  if (!(std::abs(p.delta_plus) < p.gamma)) fail("|delta_plus| must be < gamma");
  if (!(std::abs(p.delta_minus) < p.gamma)) fail("|delta_minus| must be < gamma");
}

// Symmetric / antisymmetric combinations of the sideband detunings.
// capital_delta = (delta_plus + delta_minus)/2, small_delta = (delta_plus - delta_minus)/2,
// so delta_plus = capital_delta + small_delta and delta_minus = capital_delta - small_delta.
struct DerivedCouplings {
  double capital_delta = 0.0;
  double small_delta = 0.0;

  static DerivedCouplings from_sidebands(double delta_plus, double delta_minus) {
    return {0.5 * (delta_plus + delta_minus), 0.5 * (delta_plus - delta_minus)};
  }
  static DerivedCouplings of(const SystemParams& p) {
    return from_sidebands(p.delta_plus, p.delta_minus);
  }
  double delta_plus() const { return capital_delta + small_delta; }
  double delta_minus() const { return capital_delta - small_delta; }
};

// Conversion constants from a physical force amplitude to the normalized one,
// f = F / sqrt(2 hbar omega_m m).
struct PhysicalNorm {
  double mass = 0.0;
  double hbar_omega_m = 0.0;
};

// Resonant square force pulse of duration tau and carrier phase psi_f.
// f_s0 is the normalized pulse amplitude; the slow complex amplitude during
// the pulse is (f_s0/2) e^{-i psi_f}, so the a/phi force quadratures are
// (f_s0/sqrt(2)) cos(psi_f) and -(f_s0/sqrt(2)) sin(psi_f).
struct SignalPulse {
  double f_s0 = 0.0;
  double psi_f = 0.0;
  double tau = 1.0;
  std::optional<PhysicalNorm> physical_norm;

  // Effective measurement bandwidth of the pulse.
  double bandwidth() const { return 2.0 * kPi / tau; }

  double f_s0_from_physical(double F_s0) const {
    if (!physical_norm) throw std::logic_error("SignalPulse: no physical normalization set");
    return F_s0 / std::sqrt(2.0 * physical_norm->hbar_omega_m * physical_norm->mass);
  }
  double force_quadrature_a() const { return f_s0 / std::sqrt(2.0) * std::cos(psi_f); }
  double force_quadrature_phi() const { return -f_s0 / std::sqrt(2.0) * std::sin(psi_f); }
};

inline void validate(const SignalPulse& pulse) {
  if (!(pulse.tau > 0.0)) throw std::invalid_argument("SignalPulse: tau must be > 0");
  if (!(pulse.f_s0 >= 0.0)) throw std::invalid_argument("SignalPulse: f_s0 must be >= 0");
  if (!std::isfinite(pulse.bandwidth()))
    throw std::invalid_argument("SignalPulse: bandwidth must be finite");
}

// Normalized measurement strength K(Omega) = 4 gamma eta_c0^2 / (gamma^2 + Omega^2),
// proportional to the circulating pump power.
inline double pump_parameter(const SystemParams& p, double omega) {
  return 4.0 * p.gamma * p.eta_c0 * p.eta_c0 / (p.gamma * p.gamma + omega * omega);
}

// All-pass cavity reflection factor xi(Omega) = (gamma + i Omega)/(gamma - i Omega);
// |xi| = 1 on the real axis.
inline complex xi_factor(const SystemParams& p, double omega) {
  return complex(p.gamma, omega) / complex(p.gamma, -omega);
}

// Detuning response kernel D(Omega) = Delta / ((gamma - i Omega)(gamma_m - i Omega)),
// with Delta the symmetric detuning combination.  Vanishes identically iff Delta = 0.
inline complex detuning_kernel(const SystemParams& p, double omega) {
  const double Delta = DerivedCouplings::of(p).capital_delta;
  return Delta / (complex(p.gamma, -omega) * complex(p.gamma_m, -omega));
}

// Occupancy n_T = 1 / (1 - e^{-hbar omega_m / kB T}) as a function of the
// positive ratio hbar omega_m / (kB T).  Note this tends to 1 (not 0) as the
// argument grows: it is the Bose occupancy plus one.  Kept in this form; most
// code paths take n_thermal directly.
inline double thermal_occupancy(double hbar_omega_over_kT) {
  if (!(hbar_omega_over_kT > 0.0))
    throw std::invalid_argument("thermal_occupancy: argument must be > 0");
  return 1.0 / (-std::expm1(-hbar_omega_over_kT));
}

}  // namespace baefm
