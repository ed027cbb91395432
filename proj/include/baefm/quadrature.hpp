#pragma once

#include <array>
#include <complex>

#include "baefm/params.hpp"

// State and input orderings shared by every module.
//
// Per-mode quadratures (QuadratureState, index order):
//   0 c_plus_a   1 c_minus_a   2 c_plus_phi   3 c_minus_phi   4 d_a   5 d_phi
//
// Collective (sum/difference) quadratures (CollectiveState, index order):
//   0 g_a_plus    = (c_plus_a   + c_minus_a  )/sqrt(2)
//   1 g_a_minus   = (c_plus_a   - c_minus_a  )/sqrt(2)
//   2 g_phi_plus  = (c_plus_phi + c_minus_phi)/sqrt(2)
//   3 g_phi_minus = (c_plus_phi - c_minus_phi)/sqrt(2)
//   4 d_a         5 d_phi
//
// The dynamics, transfer matrices and output records live in the collective
// basis (that is where the measured combinations are formed); the map between
// the two bases is the exact involutive rotation above.
//
// Input channel order (noise first, then the signal force quadratures):
//   0 alpha_a_plus   1 alpha_a_minus   2 alpha_phi_plus   3 alpha_phi_minus
//   4 q_a            5 q_phi           6 f_a              7 f_phi
// Statistics: each optical quadrature input is white with unit single-sided
// PSD; each thermal quadrature is white with single-sided PSD (2 n_thermal + 1);
// the force channels are deterministic.
//
// Output channel order (input-output relation beta = -alpha + sqrt(2 gamma) g):
//   0 beta_a_plus   1 beta_a_minus   2 beta_phi_plus   3 beta_phi_minus

namespace baefm {

inline constexpr int kStateDim = 6;
inline constexpr int kInputDim = 8;
inline constexpr int kNoiseDim = 6;  // inputs 0..5 are stochastic
inline constexpr int kOutputDim = 4;

enum StateIndex {
  kCPlusA = 0, kCMinusA = 1, kCPlusPhi = 2, kCMinusPhi = 3, kDA = 4, kDPhi = 5,
};
enum CollectiveIndex {
  kGAPlus = 0, kGAMinus = 1, kGPhiPlus = 2, kGPhiMinus = 3,
  // d_a, d_phi share indices 4, 5 with StateIndex
};
enum InputIndex {
  kAlphaAPlus = 0, kAlphaAMinus = 1, kAlphaPhiPlus = 2, kAlphaPhiMinus = 3,
  kQA = 4, kQPhi = 5, kFA = 6, kFPhi = 7,
};
enum OutputIndex {
  kBetaAPlus = 0, kBetaAMinus = 1, kBetaPhiPlus = 2, kBetaPhiMinus = 3,
};

template <typename Scalar>
struct QuadratureStateT {
  Scalar c_plus_a{}, c_minus_a{}, c_plus_phi{}, c_minus_phi{}, d_a{}, d_phi{};

  std::array<Scalar, kStateDim> as_array() const {
    return {c_plus_a, c_minus_a, c_plus_phi, c_minus_phi, d_a, d_phi};
  }
};

template <typename Scalar>
struct CollectiveStateT {
  Scalar g_a_plus{}, g_a_minus{}, g_phi_plus{}, g_phi_minus{}, d_a{}, d_phi{};

  std::array<Scalar, kStateDim> as_array() const {
    return {g_a_plus, g_a_minus, g_phi_plus, g_phi_minus, d_a, d_phi};
  }
};

using QuadratureState = QuadratureStateT<double>;
using QuadratureStateC = QuadratureStateT<complex>;
using CollectiveState = CollectiveStateT<double>;
using CollectiveStateC = CollectiveStateT<complex>;

template <typename Scalar>
CollectiveStateT<Scalar> to_collective(const QuadratureStateT<Scalar>& s) {
  const double r = 1.0 / std::sqrt(2.0);
  return {r * (s.c_plus_a + s.c_minus_a),     r * (s.c_plus_a - s.c_minus_a),
          r * (s.c_plus_phi + s.c_minus_phi), r * (s.c_plus_phi - s.c_minus_phi),
          s.d_a, s.d_phi};
}

template <typename Scalar>
QuadratureStateT<Scalar> to_per_mode(const CollectiveStateT<Scalar>& s) {
  const double r = 1.0 / std::sqrt(2.0);
  return {r * (s.g_a_plus + s.g_a_minus),     r * (s.g_a_plus - s.g_a_minus),
          r * (s.g_phi_plus + s.g_phi_minus), r * (s.g_phi_plus - s.g_phi_minus),
          s.d_a, s.d_phi};
}

// Optical vacuum, thermal and signal inputs in the shared channel order.
template <typename Scalar>
struct InputVectorT {
  Scalar a_plus_a{}, a_minus_a{}, a_plus_phi{}, a_minus_phi{};
  Scalar q_a{}, q_phi{};
  Scalar f_a{}, f_phi{};

  std::array<Scalar, kInputDim> as_array() const {
    return {a_plus_a, a_minus_a, a_plus_phi, a_minus_phi, q_a, q_phi, f_a, f_phi};
  }
};

using InputVector = InputVectorT<double>;

// Single-sided PSDs of the stochastic inputs in channel order 0..5.
inline std::array<double, kNoiseDim> input_noise_psd(const SystemParams& p) {
  const double sq = 2.0 * p.n_thermal + 1.0;
  return {1.0, 1.0, 1.0, 1.0, sq, sq};
}

}  // namespace baefm
