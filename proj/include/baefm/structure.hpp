#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "baefm/freq_solver.hpp"
#include "baefm/params.hpp"

// Structural physics checks: linear stability of the stationary solution,
// eigenmode analysis of the coherent three-mode coupling, the closed-system
// conjugate-pair chains with polynomial solutions, and symplecticity of the
// dissipation-free quadrature flow.

namespace baefm::structure {

using Eigen::Matrix3cd;
using Eigen::Vector3cd;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// ---------------------------------------------------------------------------
// Stability of the linearized fluctuation dynamics, basis (c_-^dag, c_+, d).

struct StabilityReport {
  std::array<complex, 3> eigenvalues{};  // sorted by ascending real part
  bool stable = false;
};

inline Matrix3cd stability_matrix(const SystemParams& p) {
  Matrix3cd m = Matrix3cd::Zero();
  m(0, 0) = -complex(p.gamma, p.delta_minus);
  m(0, 2) = p.eta_c0;
  m(1, 1) = -complex(p.gamma, -p.delta_plus);
  m(1, 2) = -p.eta_c0;
  m(2, 0) = p.eta_c0;
  m(2, 1) = p.eta_c0;
  m(2, 2) = -p.gamma_m;
  return m;
}

// Eigenvalues from the characteristic cubic
//   (lambda + gamma + i delta_-)(lambda + gamma - i delta_+)(lambda + gamma_m)
//     = -2 i eta_c0^2 Delta.
// When the right-hand side vanishes (symmetric detuning Delta = 0, which
// includes the resonant case, or zero coupling) the factored roots are exact;
// this matters because the matrix is defective there and a generic
// eigensolver would lose half the significant digits on the double root.
inline StabilityReport stability_eigenvalues(const SystemParams& p) {
  const complex a(p.gamma, p.delta_minus);
  const complex b(p.gamma, -p.delta_plus);
  const complex c(p.gamma_m, 0.0);
  const double kappa = 2.0 * p.eta_c0 * p.eta_c0 * DerivedCouplings::of(p).capital_delta;

  std::array<complex, 3> roots;
  if (kappa == 0.0) {
    roots = {-a, -b, -c};
  } else {
    // lambda^3 + p2 lambda^2 + p1 lambda + p0, solved via the companion
    // matrix and polished with a few Newton steps.
    const complex p2 = a + b + c;
    const complex p1 = a * b + a * c + b * c;
    const complex p0 = a * b * c + complex(0.0, kappa);
    Matrix3cd companion = Matrix3cd::Zero();
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    companion(0, 2) = -p0;
    companion(1, 2) = -p1;
    companion(2, 2) = -p2;
    Eigen::ComplexEigenSolver<Matrix3cd> es(companion, false);
    for (int i = 0; i < 3; ++i) {
      complex z = es.eigenvalues()(i);
      for (int it = 0; it < 4; ++it) {
        const complex f = ((z + p2) * z + p1) * z + p0;
        const complex df = (3.0 * z + 2.0 * p2) * z + p1;
        if (df == complex(0.0, 0.0)) break;
        z -= f / df;
      }
      roots[i] = z;
    }
  }
  std::sort(roots.begin(), roots.end(), [](const complex& x, const complex& y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });

  StabilityReport rep;
  rep.eigenvalues = roots;
  rep.stable = std::all_of(roots.begin(), roots.end(),
                           [](const complex& z) { return z.real() < 0.0; });
  return rep;
}

// ---------------------------------------------------------------------------
// Coherent-coupling eigenmode analysis.  The mechanical amplitude enters the
// three-mode Hamiltonian matrix only through the product eta*d, passed here as
// the complex parameter eta_d.  Basis order (c_0, c_+, c_-).

inline Matrix3cd coherent_coupling_matrix(const SystemParams& p, complex eta_d, double omega0) {
  Matrix3cd h;
  const complex i(0.0, 1.0);
  h << omega0, i * std::conj(eta_d), -i * eta_d,
      -i * eta_d, omega0 + p.omega_m, 0.0,
      i * std::conj(eta_d), 0.0, omega0 - p.omega_m;
  return h;
}

struct CoherentCouplingEigen {
  std::array<complex, 3> eigenfrequencies{};  // paired with modes (c_0, c_+, c_-)
  Matrix3cd eigenvectors;        // columns, phase-aligned (dominant entry real positive)
  Matrix3cd first_order_vectors;  // analytic vectors, unnormalized, same column order
};

inline CoherentCouplingEigen coherent_coupling_eigen(const SystemParams& p, complex eta_d,
                                                     double omega0) {
  const Matrix3cd h = coherent_coupling_matrix(p, eta_d, omega0);
  Eigen::SelfAdjointEigenSolver<Matrix3cd> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("coherent_coupling_eigen: eigensolver failed");

  CoherentCouplingEigen out;
  const complex i(0.0, 1.0);
  const complex r_plus = i * eta_d / p.omega_m;
  const complex r_minus = i * std::conj(eta_d) / p.omega_m;
  out.first_order_vectors << 1.0, r_minus, r_plus,
                             r_plus, 1.0, 0.0,
                             r_minus, 0.0, 1.0;

  // Pair numeric eigenpairs with the reference frequencies (omega0, omega_+, omega_-).
  const std::array<double, 3> ref = {omega0, omega0 + p.omega_m, omega0 - p.omega_m};
  std::array<bool, 3> used = {false, false, false};
  for (int m = 0; m < 3; ++m) {
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      if (used[k]) continue;
      const double dist = std::abs(es.eigenvalues()(k) - ref[m]);
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    used[best] = true;
    out.eigenfrequencies[m] = es.eigenvalues()(best);
    Vector3cd v = es.eigenvectors().col(best);
    int dom = 0;
    for (int r = 1; r < 3; ++r)
      if (std::abs(v(r)) > std::abs(v(dom))) dom = r;
    if (std::abs(v(dom)) > 0.0) v *= std::abs(v(dom)) / v(dom);
    out.eigenvectors.col(m) = v;
  }
  return out;
}

// Max deviation of the analytic first-order eigenvectors from orthonormality,
// max_{i,j} |(v_i, v_j) - delta_ij|; scales as |eta_d|^2.
inline double eigenvector_orthonormality_defect(const SystemParams& p, complex eta_d) {
  CoherentCouplingEigen ev;
  const complex i(0.0, 1.0);
  const complex r_plus = i * eta_d / p.omega_m;
  const complex r_minus = i * std::conj(eta_d) / p.omega_m;
  Matrix3cd v;
  v << 1.0, r_minus, r_plus,
       r_plus, 1.0, 0.0,
       r_minus, 0.0, 1.0;
  double defect = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const complex g = v.col(a).adjoint() * v.col(b);
      defect = std::max(defect, std::abs(g - (a == b ? 1.0 : 0.0)));
    }
  return defect;
}

// Max distance between the numeric eigenvectors and the normalized analytic
// first-order vectors (phase-aligned); scales as |eta_d|^2.
inline double first_order_vector_error(const SystemParams& p, complex eta_d, double omega0) {
  const auto ev = coherent_coupling_eigen(p, eta_d, omega0);
  double err = 0.0;
  for (int m = 0; m < 3; ++m) {
    Vector3cd v = ev.first_order_vectors.col(m);
    v.normalize();
    int dom = 0;
    for (int r = 1; r < 3; ++r)
      if (std::abs(v(r)) > std::abs(v(dom))) dom = r;
    v *= std::abs(v(dom)) / v(dom);
    err = std::max(err, (ev.eigenvectors.col(m) - v).norm());
  }
  return err;
}

// Two-mode comparison configuration: eigenfrequencies of the 2x2 coupled-mode
// matrix, (w+ + w-)/2 +- (1/2) sqrt((w+ - w-)^2 + 4 |eta_d|^2).
inline std::array<double, 2> two_mode_eigenfrequencies(double omega_plus, double omega_minus,
                                                       complex eta_d) {
  const double mean = 0.5 * (omega_plus + omega_minus);
  const double split = 0.5 * std::sqrt((omega_plus - omega_minus) * (omega_plus - omega_minus) +
                                       4.0 * std::norm(eta_d));
  return {mean + split, mean - split};
}

// ---------------------------------------------------------------------------
// Closed-system conjugate-pair chains.  With decay and drive removed, the six
// quadratures split into two sets evolving as constant -> linear -> quadratic
// polynomials in time; the two constants are the QND invariants.

struct QmfsState {
  double pi1 = 0.0, q = 0.0, pi2 = 0.0;
  double phi2 = 0.0, p = 0.0, phi1 = 0.0;
};

// Exact polynomial solution at time t for coupling g (g = sqrt(2) eta_c0).
inline QmfsState qmfs_closed_form(double g, const QmfsState& s0, double t) {
  QmfsState s;
  s.pi2 = s0.pi2;
  s.q = s0.q + g * s0.pi2 * t;
  s.pi1 = s0.pi1 + g * s0.q * t + 0.5 * g * g * s0.pi2 * t * t;
  s.phi1 = s0.phi1;
  s.p = s0.p - g * s0.phi1 * t;
  s.phi2 = s0.phi2 + g * s0.p * t - 0.5 * g * g * s0.phi1 * t * t;
  return s;
}

struct QmfsEvolution {
  double coupling_g = 0.0;
  std::vector<double> t;
  std::vector<QmfsState> closed_form;
  std::vector<QmfsState> numeric;
  double max_rel_error = 0.0;       // numeric vs closed form, global normalization
  double max_constant_drift = 0.0;  // numeric drift of pi2 and phi1
};

// Evaluates the polynomial solutions on t_grid and integrates the same linear
// system with classical RK4 for an independent comparison.
inline QmfsEvolution qmfs_evolve(double g, const QmfsState& s0, const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw std::invalid_argument("qmfs_evolve: empty time grid");
  QmfsEvolution ev;
  ev.coupling_g = g;
  ev.t = t_grid;

  using Vec6 = Eigen::Matrix<double, 6, 1>;
  auto rhs = [g](const Vec6& y) {
    Vec6 dy;
    dy(0) = g * y(1);   // pi1' = g q
    dy(1) = g * y(2);   // q'   = g pi2
    dy(2) = 0.0;        // pi2' = 0
    dy(3) = g * y(4);   // phi2' = g p
    dy(4) = -g * y(5);  // p'    = -g phi1
    dy(5) = 0.0;        // phi1' = 0
    return dy;
  };
  Vec6 y;
  y << s0.pi1, s0.q, s0.pi2, s0.phi2, s0.p, s0.phi1;

  double t_now = 0.0;
  double scale = 0.0;
  for (double t_target : t_grid) {
    if (t_target < t_now) throw std::invalid_argument("qmfs_evolve: time grid must be ascending");
    const double span = t_target - t_now;
    const double h_max = (g != 0.0) ? 1e-3 / std::abs(g) : span;
    const int steps = span > 0.0 ? std::max(1, int(std::ceil(span / h_max))) : 0;
    const double h = steps > 0 ? span / steps : 0.0;
    for (int s = 0; s < steps; ++s) {
      const Vec6 k1 = rhs(y);
      const Vec6 k2 = rhs(y + 0.5 * h * k1);
      const Vec6 k3 = rhs(y + 0.5 * h * k2);
      const Vec6 k4 = rhs(y + h * k3);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    t_now = t_target;

    const QmfsState cf = qmfs_closed_form(g, s0, t_target);
    const QmfsState num{y(0), y(1), y(2), y(3), y(4), y(5)};
    ev.closed_form.push_back(cf);
    ev.numeric.push_back(num);
    for (double v : {cf.pi1, cf.q, cf.pi2, cf.phi2, cf.p, cf.phi1})
      scale = std::max(scale, std::abs(v));
    ev.max_constant_drift = std::max({ev.max_constant_drift, std::abs(num.pi2 - s0.pi2),
                                      std::abs(num.phi1 - s0.phi1)});
  }
  if (scale == 0.0) scale = 1.0;
  for (size_t i = 0; i < ev.t.size(); ++i) {
    const auto& cf = ev.closed_form[i];
    const auto& nm = ev.numeric[i];
    const double d = std::max({std::abs(nm.pi1 - cf.pi1), std::abs(nm.q - cf.q),
                               std::abs(nm.pi2 - cf.pi2), std::abs(nm.phi2 - cf.phi2),
                               std::abs(nm.p - cf.p), std::abs(nm.phi1 - cf.phi1)});
    ev.max_rel_error = std::max(ev.max_rel_error, d / scale);
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Symplectic structure of the dissipation-free quadrature flow.  Canonical
// ordering (d_a, d_phi, Phi1, Pi1, Phi2, Pi2) with
//   Phi1 = g_a+,  Pi1 = g_phi+,  Phi2 = g_a-,  Pi2 = g_phi-,
// so J is block diagonal with 2x2 blocks [[0,1],[-1,0]] for the pairs
// (d_a, d_phi), (Phi1, Pi1), (Phi2, Pi2).

inline Matrix6d canonical_form_j() {
  Matrix6d j = Matrix6d::Zero();
  for (int b = 0; b < 3; ++b) {
    j(2 * b, 2 * b + 1) = 1.0;
    j(2 * b + 1, 2 * b) = -1.0;
  }
  return j;
}

// Permutation taking canonical indices to collective-basis indices.
inline constexpr std::array<int, 6> kCanonicalToCollective = {kDA, kDPhi, kGAPlus, kGPhiPlus,
                                                              kGAMinus, kGPhiMinus};

// Hessian of the quadratic closed-system Hamiltonian (interaction plus
// detuning terms) in the canonical ordering.  The interaction term is the
// quadrature form of the three-mode coupling written so that its canonical
// flow reproduces the dissipation-free dynamics entry for entry:
//   V = sqrt(2) eta_c0 (Phi1 d_phi - Pi2 d_a)
//       - (Delta/2)(Phi1^2 + Pi1^2 + Phi2^2 + Pi2^2) - delta (Phi1 Phi2 + Pi1 Pi2).
inline Matrix6d closed_hamiltonian_hessian(const SystemParams& p) {
  const auto d = DerivedCouplings::of(p);
  const double coupling = std::sqrt(2.0) * p.eta_c0;
  enum { da = 0, dphi = 1, phi1 = 2, pi1 = 3, phi2 = 4, pi2 = 5 };
  Matrix6d s = Matrix6d::Zero();
  s(phi1, dphi) = s(dphi, phi1) = coupling;
  s(pi2, da) = s(da, pi2) = -coupling;
  s(phi1, phi1) = s(pi1, pi1) = s(phi2, phi2) = s(pi2, pi2) = -d.capital_delta;
  s(phi1, phi2) = s(phi2, phi1) = -d.small_delta;
  s(pi1, pi2) = s(pi2, pi1) = -d.small_delta;
  return s;
}

// Drift generated by the Hamiltonian, x' = J grad H = J S x.
inline Matrix6d closed_drift_from_hamiltonian(const SystemParams& p) {
  return canonical_form_j() * closed_hamiltonian_hessian(p);
}

// Decay-free limit of the frequency solver's dynamics, permuted to the
// canonical ordering.
inline Matrix6d closed_drift_from_solver(const SystemParams& p) {
  const freq::Matrix6c m = freq::build_system(p, 0.0).dynamics;
  Matrix6d a_collective = -m.real();
  for (int i = 0; i < 4; ++i) a_collective(i, i) += p.gamma;
  a_collective(kDA, kDA) += p.gamma_m;
  a_collective(kDPhi, kDPhi) += p.gamma_m;
  Matrix6d a = Matrix6d::Zero();
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 6; ++k)
      a(i, k) = a_collective(kCanonicalToCollective[i], kCanonicalToCollective[k]);
  return a;
}

struct SymplecticCheck {
  double max_symplectic_defect = 0.0;  // max |Phi^T J Phi - J| over the times
  double max_drift_mismatch = 0.0;     // Hamiltonian drift vs decay-free solver drift
};

inline SymplecticCheck symplectic_check(const SystemParams& p, const std::vector<double>& times) {
  const Matrix6d a_h = closed_drift_from_hamiltonian(p);
  const Matrix6d a_s = closed_drift_from_solver(p);
  const Matrix6d j = canonical_form_j();

  SymplecticCheck chk;
  chk.max_drift_mismatch = (a_h - a_s).cwiseAbs().maxCoeff();
  for (double t : times) {
    const Matrix6d flow = (a_h * t).exp();
    chk.max_symplectic_defect =
        std::max(chk.max_symplectic_defect,
                 (flow.transpose() * j * flow - j).cwiseAbs().maxCoeff());
  }
  return chk;
}

}  // namespace baefm::structure
