#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>

#include "baefm/params.hpp"
#include "baefm/quadrature.hpp"

// Exact frequency-domain solution of the linearized quadrature dynamics,
// detunings included without expansion.  In the collective basis the system
// M(Omega) x = B n reads
//
//   (gamma   - i O) g_a+    + Delta g_phi+ + delta g_phi-                      = sqrt(2 gamma)   alpha_a+
//   (gamma   - i O) g_a-    + delta g_phi+ + Delta g_phi- + sqrt2 etaC0 d_a    = sqrt(2 gamma)   alpha_a-
//   (gamma   - i O) g_phi+  - Delta g_a+   - delta g_a-   + sqrt2 etaC0 d_phi  = sqrt(2 gamma)   alpha_phi+
//   (gamma   - i O) g_phi-  - delta g_a+   - Delta g_a-                        = sqrt(2 gamma)   alpha_phi-
//   (gamma_m - i O) d_a     - sqrt2 etaC0 g_a+                                 = sqrt(2 gamma_m) q_a   + f_a
//   (gamma_m - i O) d_phi   - sqrt2 etaC0 g_phi-                               = sqrt(2 gamma_m) q_phi + f_phi
//
// with Delta, delta the symmetric/antisymmetric detuning combinations.  At
// zero detuning the a and phi sectors decouple into independent triples.
// Outputs follow the input-output relation beta = -alpha + sqrt(2 gamma) g.

namespace baefm::freq {

using Matrix6c = Eigen::Matrix<complex, kStateDim, kStateDim>;
using Matrix6x8c = Eigen::Matrix<complex, kStateDim, kInputDim>;
using Matrix10x8c = Eigen::Matrix<complex, kStateDim + kOutputDim, kInputDim>;
using Row8c = Eigen::Matrix<complex, 1, kInputDim>;

struct SolverError : std::runtime_error {
  double omega;
  SolverError(double omega_, const std::string& what)
      : std::runtime_error(what + " at Omega = " + std::to_string(omega_)), omega(omega_) {}
};

struct FrequencySystem {
  double omega = 0.0;
  Matrix6c dynamics;        // M(Omega)
  Matrix6x8c input_coupling;  // B
};

inline FrequencySystem build_system(const SystemParams& p, double omega) {
  const auto d = DerivedCouplings::of(p);
  const complex opt(p.gamma, -omega);
  const complex mech(p.gamma_m, -omega);
  const double coupling = std::sqrt(2.0) * p.eta_c0;
  const double drive_opt = std::sqrt(2.0 * p.gamma);
  const double drive_mech = std::sqrt(2.0 * p.gamma_m);

  FrequencySystem sys;
  sys.omega = omega;
  Matrix6c& M = sys.dynamics;
  Matrix6x8c& B = sys.input_coupling;
  M.setZero();
  B.setZero();

  M(kGAPlus, kGAPlus) = opt;
  M(kGAPlus, kGPhiPlus) = d.capital_delta;
  M(kGAPlus, kGPhiMinus) = d.small_delta;

  M(kGAMinus, kGAMinus) = opt;
  M(kGAMinus, kGPhiPlus) = d.small_delta;
  M(kGAMinus, kGPhiMinus) = d.capital_delta;
  M(kGAMinus, kDA) = coupling;

  M(kGPhiPlus, kGPhiPlus) = opt;
  M(kGPhiPlus, kGAPlus) = -d.capital_delta;
  M(kGPhiPlus, kGAMinus) = -d.small_delta;
  M(kGPhiPlus, kDPhi) = coupling;

  M(kGPhiMinus, kGPhiMinus) = opt;
  M(kGPhiMinus, kGAPlus) = -d.small_delta;
  M(kGPhiMinus, kGAMinus) = -d.capital_delta;

  M(kDA, kDA) = mech;
  M(kDA, kGAPlus) = -coupling;

  M(kDPhi, kDPhi) = mech;
  M(kDPhi, kGPhiMinus) = -coupling;

  B(kGAPlus, kAlphaAPlus) = drive_opt;
  B(kGAMinus, kAlphaAMinus) = drive_opt;
  B(kGPhiPlus, kAlphaPhiPlus) = drive_opt;
  B(kGPhiMinus, kAlphaPhiMinus) = drive_opt;
  B(kDA, kQA) = drive_mech;
  B(kDA, kFA) = 1.0;
  B(kDPhi, kQPhi) = drive_mech;
  B(kDPhi, kFPhi) = 1.0;
  return sys;
}

// Map from the eight inputs to the six intracavity quadratures (rows 0..5)
// and the four output quadratures (rows 6..9, order of OutputIndex).
struct TransferMatrix {
  double omega = 0.0;
  Matrix10x8c entries;
  double condition = 1.0;  // 1-norm condition estimate of the dynamics matrix

  Row8c state_row(int i) const { return entries.row(i); }
  Row8c output_row(int i) const { return entries.row(kStateDim + i); }
};

inline TransferMatrix transfer_matrix(const SystemParams& p, double omega) {
  const FrequencySystem sys = build_system(p, omega);
  Eigen::PartialPivLU<Matrix6c> lu(sys.dynamics);
  const double rcond = lu.rcond();
  if (!(rcond > 16.0 * std::numeric_limits<double>::epsilon()))
    throw SolverError(omega, "ill-conditioned quadrature system (rcond = " + std::to_string(rcond) + ")");

  TransferMatrix tm;
  tm.omega = omega;
  tm.condition = 1.0 / rcond;
  tm.entries.topRows<kStateDim>() = lu.solve(sys.input_coupling);

  const double drive_opt = std::sqrt(2.0 * p.gamma);
  static constexpr int kAlphaOfOutput[kOutputDim] = {kAlphaAPlus, kAlphaAMinus, kAlphaPhiPlus,
                                                     kAlphaPhiMinus};
  for (int c = 0; c < kOutputDim; ++c) {
    Row8c row = drive_opt * tm.entries.row(c);  // collective state index == output index
    row(kAlphaOfOutput[c]) -= 1.0;
    tm.entries.row(kStateDim + c) = row;
  }
  return tm;
}

// Noise transfer row of a weighted output combination.
inline Row8c combined_output_row(const TransferMatrix& tm,
                                 std::span<const complex> output_weights) {
  if (output_weights.size() != kOutputDim)
    throw std::invalid_argument("combined_output_row: expected " + std::to_string(kOutputDim) +
                                " output weights, got " + std::to_string(output_weights.size()));
  Row8c row = Row8c::Zero();
  for (int c = 0; c < kOutputDim; ++c) row += output_weights[c] * tm.output_row(c);
  return row;
}

inline double psd_of_row(const SystemParams& p, const Row8c& row, bool include_force = false) {
  const auto noise = input_noise_psd(p);
  double s = 0.0;
  for (int i = 0; i < kNoiseDim; ++i) s += noise[i] * std::norm(row(i));
  if (include_force) s += std::norm(row(kFA)) + std::norm(row(kFPhi));
  return s;
}

// Single-sided PSD of one output channel (noise inputs only unless
// include_force adds the force columns at unit PSD).
inline double output_psd(const SystemParams& p, double omega, int output_index,
                         bool include_force = false) {
  if (output_index < 0 || output_index >= kOutputDim)
    throw std::invalid_argument("output_psd: bad output index");
  const TransferMatrix tm = transfer_matrix(p, omega);
  return psd_of_row(p, tm.output_row(output_index), include_force);
}

// Single-sided PSD of a weighted combination of the four outputs.
inline double output_psd(const SystemParams& p, double omega,
                         std::span<const complex> output_weights, bool include_force = false) {
  const TransferMatrix tm = transfer_matrix(p, omega);
  return psd_of_row(p, combined_output_row(tm, output_weights), include_force);
}

}  // namespace baefm::freq
