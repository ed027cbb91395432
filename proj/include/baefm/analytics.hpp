#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "baefm/params.hpp"

// Closed-form force-referred noise spectral densities and the pump-level
// optimization.  These serve both as the fast evaluation path and as oracles
// for the exact frequency-domain solver.  All spectra are single-sided and
// expressed in normalized force units f^2 per unit angular frequency.

namespace baefm::analytics {

// The thermal floor appears with prefactor 2 gamma_m (2 n + 1) in the
// resonant-system results and with 2 gamma_m (n + 1) in the detuned-system
// results as printed; the two are inconsistent in the source material, so the
// convention is explicit.  Default: two_n_plus_one (consistent with the
// thermal input correlator the solver and integrator use).
enum class ThermalConvention { two_n_plus_one, n_plus_one };

inline double thermal_floor(const SystemParams& p,
                            ThermalConvention conv = ThermalConvention::two_n_plus_one) {
  const double occ =
      conv == ThermalConvention::two_n_plus_one ? 2.0 * p.n_thermal + 1.0 : p.n_thermal + 1.0;
  return 2.0 * p.gamma_m * occ;
}

inline void require_positive_pump(double k_pump) {
  if (!(k_pump > 0.0)) throw std::invalid_argument("pump parameter K must be > 0");
}

// Force sensitivity of the raw difference-quadrature readout: thermal floor
// plus shot noise (decreasing in K) plus back action (increasing in K).
inline double sql_spectrum_raw(const SystemParams& p, double omega, double k_pump) {
  require_positive_pump(k_pump);
  const double mech2 = p.gamma_m * p.gamma_m + omega * omega;
  return thermal_floor(p) + mech2 / k_pump + k_pump;
}

// Standard quantum limit of the quantum part, 2 sqrt(gamma_m^2 + Omega^2).
inline double sql_bound(const SystemParams& p, double omega) {
  return 2.0 * std::sqrt(p.gamma_m * p.gamma_m + omega * omega);
}

// Force sensitivity of the back-action-evading combination: no back-action
// term, strictly decreasing in K towards the thermal floor.
inline double bae_spectrum(const SystemParams& p, double omega, double k_pump) {
  require_positive_pump(k_pump);
  const double mech2 = p.gamma_m * p.gamma_m + omega * omega;
  return thermal_floor(p) + mech2 / k_pump;
}

// Force sensitivity of the combination under sideband detunings, including
// the residual back action that the zero-detuning weights cannot remove.
inline double detuned_spectrum(const SystemParams& p, double omega, double k_pump,
                               ThermalConvention conv = ThermalConvention::two_n_plus_one) {
  require_positive_pump(k_pump);
  const auto d = DerivedCouplings::of(p);
  const double opt2 = p.gamma * p.gamma + omega * omega;
  const double mech2 = p.gamma_m * p.gamma_m + omega * omega;
  const complex D = detuning_kernel(p, omega);
  const complex xi = xi_factor(p, omega);
  const double dk2 = std::norm(D) * k_pump * k_pump;
  const complex residual = d.small_delta - xi * k_pump * D * complex(p.gamma, -omega);
  const double back_action =
      k_pump * (std::norm(residual) + 4.0 * p.gamma * p.gamma * std::norm(D) * mech2) /
      (opt2 * (1.0 + dk2));
  return thermal_floor(p, conv) + mech2 / (k_pump * (1.0 + dk2)) + back_action;
}

// Asymptotic forms of the detuned spectrum in the three pump-level windows.
inline double small_pump_spectrum(const SystemParams& p, double omega, double k_pump,
                                  ThermalConvention conv = ThermalConvention::two_n_plus_one) {
  require_positive_pump(k_pump);
  const auto d = DerivedCouplings::of(p);
  const double opt2 = p.gamma * p.gamma + omega * omega;
  const double mech2 = p.gamma_m * p.gamma_m + omega * omega;
  const double resid = d.small_delta * d.small_delta / opt2 +
                       4.0 * p.gamma * p.gamma * d.capital_delta * d.capital_delta / (opt2 * opt2);
  return thermal_floor(p, conv) + mech2 / k_pump + k_pump * resid;
}

inline double intermediate_pump_spectrum(const SystemParams& p, double omega, double k_pump,
                                         ThermalConvention conv = ThermalConvention::two_n_plus_one) {
  require_positive_pump(k_pump);
  const double mech2 = p.gamma_m * p.gamma_m + omega * omega;
  return thermal_floor(p, conv) + mech2 / k_pump +
         k_pump * k_pump * k_pump * std::norm(detuning_kernel(p, omega));
}

inline double large_pump_spectrum(const SystemParams& p, double omega, double k_pump,
                                  ThermalConvention conv = ThermalConvention::two_n_plus_one) {
  require_positive_pump(k_pump);
  const double opt2 = p.gamma * p.gamma + omega * omega;
  const double mech2 = p.gamma_m * p.gamma_m + omega * omega;
  return thermal_floor(p, conv) + k_pump + 4.0 * p.gamma * p.gamma * mech2 / (k_pump * opt2);
}

enum class Regime { small_pump, intermediate_pump, large_pump };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::small_pump: return "small_pump";
    case Regime::intermediate_pump: return "intermediate_pump";
    default: return "large_pump";
  }
}

struct RegimeClassification {
  Regime regime = Regime::small_pump;
  double k_crit1 = std::numeric_limits<double>::infinity();
  double k_crit2 = std::numeric_limits<double>::infinity();
};

// Pump-level thresholds separating the three windows; both infinite when the
// symmetric detuning vanishes (the combination is then fully back-action free
// and every finite K sits in the small-pump window).
inline RegimeClassification regime_classify(const SystemParams& p, double omega, double k_pump) {
  const auto d = DerivedCouplings::of(p);
  RegimeClassification rc;
  if (d.capital_delta != 0.0) {
    const double mech = std::sqrt(p.gamma_m * p.gamma_m + omega * omega);
    const double opt = std::sqrt(p.gamma * p.gamma + omega * omega);
    rc.k_crit1 = mech * std::abs(d.small_delta) / std::abs(d.capital_delta);
    rc.k_crit2 = opt * mech / std::abs(d.capital_delta);
  }
  rc.regime = k_pump < rc.k_crit1 ? Regime::small_pump
              : k_pump <= rc.k_crit2 ? Regime::intermediate_pump
                                     : Regime::large_pump;
  return rc;
}

// Bracketed scalar minimization on a log axis: coarse scan then golden
// section.  Boundary hits are reported, not treated as convergence failures.
struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  bool at_lower = false;
  bool at_upper = false;
};

inline ScalarMinimum minimize_on_log_axis(const std::function<double(double)>& f, double x_lo,
                                          double x_hi, int coarse_points = 240) {
  if (!(x_lo > 0.0) || !(x_hi > x_lo))
    throw std::invalid_argument("minimize_on_log_axis: need 0 < x_lo < x_hi");
  const double l_lo = std::log(x_lo), l_hi = std::log(x_hi);
  auto fl = [&](double l) {
    const double v = f(std::exp(l));
    if (!std::isfinite(v))
      throw std::runtime_error("minimize_on_log_axis: non-finite objective at x = " +
                               std::to_string(std::exp(l)) + " in bracket [" +
                               std::to_string(x_lo) + ", " + std::to_string(x_hi) + "]");
    return v;
  };

  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> ls(coarse_points);
  for (int i = 0; i < coarse_points; ++i) {
    ls[i] = l_lo + (l_hi - l_lo) * i / (coarse_points - 1);
    const double v = fl(ls[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }

  double a = ls[std::max(0, best - 1)];
  double b = ls[std::min(coarse_points - 1, best + 1)];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = fl(c), fd = fl(d);
  while (b - a > 1e-12 * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - invphi * (b - a);
      fc = fl(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + invphi * (b - a);
      fd = fl(d);
    }
  }
  ScalarMinimum m;
  const double l_star = 0.5 * (a + b);
  m.x = std::exp(l_star);
  m.value = fl(l_star);
  m.at_lower = best == 0;
  m.at_upper = best == coarse_points - 1;
  return m;
}

// Closed-form per-regime optima attached to the numeric result.
struct PumpOptimum {
  bool bounded = true;  // false when the spectrum decreases monotonically in K
  double k_opt = std::numeric_limits<double>::quiet_NaN();
  double s_min = std::numeric_limits<double>::quiet_NaN();
  Regime regime = Regime::small_pump;
  RegimeClassification classification;

  double small_pump_k_opt = 0.0;          // interior optimum of the small-pump form
  double small_pump_s_min_delta_dom = 0.0;  // |Delta| << |delta| sub-case value
  double small_pump_s_min_Delta_dom = 0.0;  // |Delta| >= |delta| sub-case (window-edge) value
  double intermediate_k_opt = 0.0;
  double intermediate_s_min = 0.0;
  double large_k_opt_interior = 0.0;
  double large_s_min = 0.0;  // value at the lower window edge
};

inline PumpOptimum optimal_pump(const SystemParams& p, double omega,
                                ThermalConvention conv = ThermalConvention::two_n_plus_one) {
  const auto d = DerivedCouplings::of(p);
  const double opt2 = p.gamma * p.gamma + omega * omega;
  const double mech = std::sqrt(p.gamma_m * p.gamma_m + omega * omega);
  const double mech2 = mech * mech;
  const double abs_D = std::abs(d.capital_delta);
  const double abs_d = std::abs(d.small_delta);
  const double inf = std::numeric_limits<double>::infinity();

  PumpOptimum r;
  r.classification = regime_classify(p, omega, 1.0);

  const double th = thermal_floor(p, conv);
  const double resid_sq = d.small_delta * d.small_delta * opt2 +
                          4.0 * p.gamma * p.gamma * d.capital_delta * d.capital_delta;
  r.small_pump_k_opt = resid_sq > 0.0 ? mech * opt2 / std::sqrt(resid_sq) : inf;
  r.small_pump_s_min_delta_dom = th + sql_bound(p, omega) * abs_d / std::sqrt(opt2);
  r.small_pump_s_min_Delta_dom =
      abs_d > 0.0 ? th + sql_bound(p, omega) * abs_D / (2.0 * abs_d) : inf;
  if (abs_D > 0.0) {
    r.intermediate_k_opt =
        mech * std::pow(opt2, 0.25) / (std::pow(3.0, 0.25) * std::sqrt(abs_D));
    // Minimum of mech2/K + K^3 |D|^2 at the interior optimum:
    // (3^{1/4} + 3^{-3/4}) mech sqrt|Delta| / opt2^{1/4}.
    r.intermediate_s_min =
        th + (std::pow(3.0, 0.25) + std::pow(3.0, -0.75)) * mech * std::sqrt(abs_D) /
                 std::pow(opt2, 0.25);
    r.large_s_min = th + r.classification.k_crit2;
  } else {
    r.intermediate_k_opt = inf;
    r.intermediate_s_min = inf;
    r.large_s_min = inf;
  }
  r.large_k_opt_interior = 2.0 * p.gamma * std::sqrt(mech2 / opt2);

  const auto m = minimize_on_log_axis(
      [&](double k) { return detuned_spectrum(p, omega, k, conv); }, 1e-6 * mech, 1e6 * mech);
  if (m.at_upper) {
    r.bounded = false;  // monotone towards the thermal floor, no interior optimum
    return r;
  }
  r.bounded = true;
  r.k_opt = m.x;
  r.s_min = m.value;
  r.regime = regime_classify(p, omega, r.k_opt).regime;
  return r;
}

// Minimum detectable pulse amplitude at unity signal-to-noise ratio,
// f_s0 = sqrt(S_f * DeltaOmega / 2 pi) with DeltaOmega = 2 pi / tau.
inline double detection_threshold(const SignalPulse& pulse, double spectrum) {
  validate(pulse);
  if (!(spectrum >= 0.0)) throw std::invalid_argument("detection_threshold: spectrum must be >= 0");
  return std::sqrt(spectrum * pulse.bandwidth() / (2.0 * kPi));
}

enum class Provenance { analytic, solver, monte_carlo };

// Frequency grid with per-frequency PSD values and a provenance label.
struct SpectrumCurve {
  std::string label;
  Provenance provenance = Provenance::analytic;
  std::vector<double> omega;
  std::vector<double> values;
};

}  // namespace baefm::analytics
