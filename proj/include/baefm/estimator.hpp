#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "baefm/freq_solver.hpp"
#include "baefm/params.hpp"

// Offline post-processing of the two homodyne records: the frequency-dependent
// complex combination that cancels quantum back action, and force-referred
// noise.  Weights act on measured outputs (the beta quadratures), with the
// cavity reflection factor already absorbed.

namespace baefm::estimator {

enum class SectorKind { amplitude, phase, general_phi };

struct Sector {
  SectorKind kind = SectorKind::amplitude;
  double phi = 0.0;  // quadrature angle, used only by general_phi

  static Sector amplitude() { return {SectorKind::amplitude, 0.0}; }
  static Sector phase() { return {SectorKind::phase, 0.0}; }
  static Sector general(double phi) { return {SectorKind::general_phi, phi}; }
};

// w_minus multiplies the force-carrying member of the sector's output pair
// (beta_a- for the amplitude sector, beta_phi+ for the phase sector), w_plus
// the back-action reference member (beta_a+ / beta_phi-).  For general_phi the
// pair is the rotated difference/sum:
//   reference = cos(phi) beta_a+ + sin(phi) beta_phi-
//   carrier   = cos(phi) beta_a- + sin(phi) beta_phi+
struct CombinationWeights {
  double omega = 0.0;
  complex w_plus{0.0, 0.0};
  complex w_minus{1.0, 0.0};
  Sector sector = Sector::amplitude();

  std::array<complex, kOutputDim> output_weights() const {
    switch (sector.kind) {
      case SectorKind::amplitude:
        return {w_plus, w_minus, 0.0, 0.0};
      case SectorKind::phase:
        return {0.0, 0.0, w_minus, w_plus};
      default: {
        const double c = std::cos(sector.phi), s = std::sin(sector.phi);
        return {c * w_plus, c * w_minus, s * w_minus, s * w_plus};
      }
    }
  }
};

// Canonical broadband back-action-evading weights: w_minus = 1 and
// w_plus = K(Omega)/(gamma_m - i Omega).  The combined output has exactly zero
// transfer from the back-action-carrying vacuum input at every frequency.
inline CombinationWeights bae_weights(const SystemParams& p, double omega,
                                      Sector sector = Sector::amplitude()) {
  const double k_pump = pump_parameter(p, omega);
  if (!(k_pump > 0.0))
    throw std::invalid_argument("bae_weights: pump parameter must be > 0 (eta_c0 = 0?)");
  CombinationWeights w;
  w.omega = omega;
  w.sector = sector;
  w.w_minus = 1.0;
  w.w_plus = k_pump / complex(p.gamma_m, -omega);
  return w;
}

// Raw (no combination) readout of the sector's force-carrying output.
inline CombinationWeights raw_weights(double omega, Sector sector = Sector::amplitude()) {
  CombinationWeights w;
  w.omega = omega;
  w.sector = sector;
  w.w_minus = 1.0;
  w.w_plus = 0.0;
  return w;
}

struct ZeroForceTransfer : std::runtime_error {
  double omega;
  explicit ZeroForceTransfer(double omega_)
      : std::runtime_error("combined output has zero force transfer at Omega = " +
                           std::to_string(omega_)),
        omega(omega_) {}
};

// Transfer row of the weighted output combination from all eight inputs.
inline freq::Row8c combined_transfer(const SystemParams& p, double omega,
                                     const CombinationWeights& w) {
  const auto ow = w.output_weights();
  return freq::combined_output_row(freq::transfer_matrix(p, omega), ow);
}

inline double force_referred_psd_of_row(const SystemParams& p, double omega,
                                        const freq::Row8c& row) {
  // Refer to the optimal force-quadrature mix: |G|^2 = |G_a|^2 + |G_phi|^2.
  // At zero detuning only one quadrature couples and this is the plain ratio.
  const double g2 = std::norm(row(kFA)) + std::norm(row(kFPhi));
  if (g2 == 0.0) throw ZeroForceTransfer(omega);
  return freq::psd_of_row(p, row) / g2;
}

// Noise PSD of the combination divided by the squared force transfer, in
// units of f^2.
inline double force_referred_psd(const SystemParams& p, double omega,
                                 const CombinationWeights& w) {
  return force_referred_psd_of_row(p, omega, combined_transfer(p, omega, w));
}

// Force-referred PSD of the detuned system read out with the zero-detuning
// canonical weights evaluated at pump level K.  eta_c0 is re-derived from K at
// this frequency so the closed forms and the exact solver see the same pump.
inline double detuned_combination_psd(const SystemParams& p, double omega, double k_pump) {
  if (!(k_pump > 0.0)) throw std::invalid_argument("detuned_combination_psd: K must be > 0");
  SystemParams pk = p;
  pk.eta_c0 = std::sqrt(k_pump * (p.gamma * p.gamma + omega * omega) / (4.0 * p.gamma));
  CombinationWeights w;
  w.omega = omega;
  w.sector = Sector::amplitude();
  w.w_minus = 1.0;
  w.w_plus = k_pump / complex(p.gamma_m, -omega);
  return force_referred_psd(pk, omega, w);
}

}  // namespace baefm::estimator
