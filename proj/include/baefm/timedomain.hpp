#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "baefm/analytics.hpp"
#include "baefm/estimator.hpp"
#include "baefm/freq_solver.hpp"
#include "baefm/params.hpp"
#include "baefm/quadrature.hpp"

// Independent brute-force oracle: integrates the linear quadrature Langevin
// dynamics as a stochastic ODE driven by white noise and estimates spectra and
// pulse detection statistics from the simulated records.
//
// Discretization is exact for the linear system: the drift update uses the
// matrix exponential and the Gaussian increments carry the exact joint
// covariance of (state increment, step-averaged inputs), so the only
// discretization effect on the records is the step averaging itself.  Output
// records are step averages of beta(t) = -alpha(t) + sqrt(2 gamma) g(t) built
// from the same noise integrals that drive the state.
//
// Randomness comes from a self-contained xoshiro256++ generator with
// Box-Muller normals, so identical (params, seed, dt, duration) give
// bit-identical trajectories independent of the standard library.

namespace baefm::timedomain {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

// ---------------------------------------------------------------------------
// RNG

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(uint64_t seed) {
    for (auto& word : state_) word = splitmix64(seed);
  }
  uint64_t next() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<uint64_t, 4> state_{};
};

class GaussianRng {
 public:
  explicit GaussianRng(uint64_t seed) : rng_(seed) {}

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // Box-Muller on (0,1] x [0,1) uniforms.
    const double u1 = ((rng_.next() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = (rng_.next() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    cached_ = r * std::sin(angle);
    have_cached_ = true;
    return r * std::cos(angle);
  }

 private:
  Xoshiro256pp rng_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Exact one-step discretization of dx = A x dt + B_n alpha dt + B_f f dt.

struct UnstableSystem : std::runtime_error {
  double max_real_part;
  explicit UnstableSystem(double re)
      : std::runtime_error("drift matrix has eigenvalue with Re = " + std::to_string(re) +
                           " >= 0; refusing to integrate"),
        max_real_part(re) {}
};

// Stationary covariance from A P + P A^T + C = 0.
inline Matrix6d stationary_covariance(const Matrix6d& a, const Matrix6d& c) {
  Eigen::Matrix<double, 36, 36> k = Eigen::Matrix<double, 36, 36>::Zero();
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int r = 0; r < 6; ++r) {
        k(i + 6 * j, r + 6 * j) += a(i, r);  // (I kron A) vec P
        k(i + 6 * j, i + 6 * r) += a(j, r);  // (A kron I) vec P
      }
  Eigen::Matrix<double, 36, 1> rhs;
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i) rhs(i + 6 * j) = -c(i, j);
  Eigen::Matrix<double, 36, 1> vec_p = k.partialPivLu().solve(rhs);
  Matrix6d p;
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i) p(i, j) = vec_p(i + 6 * j);
  return 0.5 * (p + p.transpose());
}

struct ExactDiscretization {
  double dt = 0.0;
  double sqrt_2gamma = 0.0;
  Matrix6d drift;                          // A
  Matrix6d propagator;                     // exp(A dt)
  Eigen::Matrix<double, 6, 2> force_step;  // int_0^dt e^{A(dt-s)} B_f ds (constant f)
  Eigen::Matrix<double, 12, 12> joint_noise_chol;  // for (state increment, step-avg inputs)
  Matrix6d stationary_chol;                // Cholesky of the stationary state covariance
  Eigen::Matrix<double, 4, 6> record_state;  // beta record row maps, see below
  Eigen::Matrix<double, 4, 6> record_noise;
  Eigen::Matrix<double, 4, 2> record_force;

  static ExactDiscretization make(const SystemParams& p, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrator: dt must be > 0");
    if (dt * p.gamma > 0.05 + 1e-12)
      throw std::invalid_argument("integrator: dt * gamma must be <= 0.05");

    const freq::FrequencySystem sys = freq::build_system(p, 0.0);
    const Matrix6d a = -sys.dynamics.real();
    const Matrix6d b_noise = sys.input_coupling.leftCols<kNoiseDim>().real();
    const Eigen::Matrix<double, 6, 2> b_force = sys.input_coupling.rightCols<2>().real();

    {
      Eigen::EigenSolver<Matrix6d> es(a, false);
      const double max_re = es.eigenvalues().real().maxCoeff();
      if (!(max_re < 0.0)) throw UnstableSystem(max_re);
    }

    // White-noise intensity: <alpha_i(t) alpha_j(t')> = (S_i/2) delta_ij delta(t-t').
    const auto psd = input_noise_psd(p);
    Matrix6d sigma = Matrix6d::Zero();
    for (int i = 0; i < kNoiseDim; ++i) sigma(i, i) = 0.5 * psd[i];
    const Matrix6d c = b_noise * sigma * b_noise.transpose();

    ExactDiscretization d;
    d.dt = dt;
    d.sqrt_2gamma = std::sqrt(2.0 * p.gamma);
    d.drift = a;

    // Van Loan blocks: one exponential gives exp(A dt), the increment
    // covariance Q and the drift integral H = int_0^dt exp(A u) du.
    Eigen::Matrix<double, 12, 12> vl = Eigen::Matrix<double, 12, 12>::Zero();
    vl.topLeftCorner<6, 6>() = a * dt;
    vl.topRightCorner<6, 6>() = c * dt;
    vl.bottomRightCorner<6, 6>() = -a.transpose() * dt;
    const Eigen::Matrix<double, 12, 12> evl = vl.exp();
    d.propagator = evl.topLeftCorner<6, 6>();
    const Matrix6d q_raw = evl.topRightCorner<6, 6>() * d.propagator.transpose();
    const Matrix6d q = 0.5 * (q_raw + q_raw.transpose());

    Eigen::Matrix<double, 12, 12> vh = Eigen::Matrix<double, 12, 12>::Zero();
    vh.topLeftCorner<6, 6>() = a * dt;
    vh.topRightCorner<6, 6>() = Matrix6d::Identity() * dt;
    const Matrix6d h = vh.exp().topRightCorner<6, 6>();  // int_0^dt exp(A u) du

    d.force_step = h * b_force;

    // Joint Gaussian of w = int e^{A(dt-s)} B_n alpha ds and abar = (1/dt) int alpha ds.
    const Matrix6d cross = (1.0 / dt) * h * b_noise * sigma;  // Cov(w, abar)
    const Matrix6d r = sigma / dt;                            // Cov(abar, abar)
    Eigen::Matrix<double, 12, 12> joint;
    joint.topLeftCorner<6, 6>() = q;
    joint.topRightCorner<6, 6>() = cross;
    joint.bottomLeftCorner<6, 6>() = cross.transpose();
    joint.bottomRightCorner<6, 6>() = r;
    Eigen::LLT<Eigen::Matrix<double, 12, 12>> llt(joint);
    if (llt.info() != Eigen::Success) {
      // fall back with a tiny diagonal jitter proportional to the scale
      const double jitter = 1e-14 * joint.diagonal().maxCoeff();
      joint.diagonal().array() += jitter;
      llt.compute(joint);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("integrator: joint noise covariance not positive definite");
    }
    d.joint_noise_chol = llt.matrixL();

    Matrix6d p_stat = stationary_covariance(a, c);
    Eigen::LLT<Matrix6d> pllt(p_stat);
    if (pllt.info() != Eigen::Success) {
      p_stat.diagonal().array() += 1e-14 * p_stat.diagonal().maxCoeff();
      pllt.compute(p_stat);
      if (pllt.info() != Eigen::Success)
        throw std::runtime_error("integrator: stationary covariance not positive definite");
    }
    d.stationary_chol = pllt.matrixL();

    // Step-averaged output records via the exact identity
    //   int x dt = A^{-1} (x_{n+1} - x_n - B_n abar dt - B_f f dt):
    //   beta_bar = record_state (x_{n+1} - x_n) + record_noise abar + record_force f.
    const Matrix6d a_inv = a.partialPivLu().solve(Matrix6d::Identity());
    const Eigen::Matrix<double, 4, 6> sel = Eigen::Matrix<double, 4, 6>::Identity();
    d.record_state = (d.sqrt_2gamma / dt) * sel * a_inv;
    d.record_noise = -d.sqrt_2gamma * sel * a_inv * b_noise;
    for (int i = 0; i < kOutputDim; ++i) d.record_noise(i, i) -= 1.0;  // the -alpha term
    d.record_force = -d.sqrt_2gamma * sel * a_inv * b_force;
    return d;
  }
};

// ---------------------------------------------------------------------------
// Trajectory integration

struct IntegrationSpec {
  double duration = 0.0;
  double dt = 0.05;
  uint64_t seed = 1;
  bool stationary_start = true;  // draw x(0) from the stationary distribution
  double pulse_center = -1.0;    // pulse midpoint; negative means duration/2
};

// dt: sample spacing; samples: per-mode quadrature states at the step ends;
// outputs: step-averaged beta records (collective order beta_a+, beta_a-,
// beta_phi+, beta_phi-).
struct Trajectory {
  double dt = 0.0;
  std::vector<QuadratureState> samples;
  std::array<std::vector<double>, kOutputDim> outputs;

  size_t size() const { return outputs[0].size(); }
};

namespace detail {

// Steps [first, last) during which the pulse drive is active.
inline std::pair<int64_t, int64_t> pulse_steps(const SignalPulse& pulse, double center, double dt,
                                               int64_t n_steps) {
  const int64_t span = std::llround(pulse.tau / dt);
  const int64_t mid = std::llround(center / dt);
  int64_t first = mid - span / 2;
  int64_t last = first + span;
  first = std::max<int64_t>(0, first);
  last = std::min<int64_t>(n_steps, last);
  return {first, last};
}

struct StepLoop {
  const ExactDiscretization& disc;
  detail::GaussianRng& rng;
  Vector6d x;
  Eigen::Matrix<double, 12, 1> z;

  explicit StepLoop(const ExactDiscretization& d, detail::GaussianRng& r, bool stationary)
      : disc(d), rng(r) {
    x.setZero();
    if (stationary) {
      Vector6d xi;
      for (int i = 0; i < 6; ++i) xi(i) = rng.normal();
      x = disc.stationary_chol * xi;
    }
  }

  // Advances one step; f_a/f_phi are the force quadrature drives held constant
  // over the step.  Writes the four step-averaged output records.
  void advance(double f_a, double f_phi, double out[kOutputDim]) {
    for (int i = 0; i < 12; ++i) z(i) = rng.normal();
    const Eigen::Matrix<double, 12, 1> noise = disc.joint_noise_chol * z;
    const auto w = noise.head<6>();
    const auto abar = noise.tail<6>();

    Vector6d x_next = disc.propagator * x + w;
    Eigen::Matrix<double, 2, 1> f(f_a, f_phi);
    const bool with_force = f_a != 0.0 || f_phi != 0.0;
    if (with_force) x_next += disc.force_step * f;

    Eigen::Matrix<double, 4, 1> beta =
        disc.record_state * (x_next - x) + disc.record_noise * abar;
    if (with_force) beta += disc.record_force * f;
    for (int i = 0; i < kOutputDim; ++i) out[i] = beta(i);
    x = x_next;
  }
};

}  // namespace detail

inline Trajectory integrate(const SystemParams& p, const std::optional<SignalPulse>& pulse,
                            const IntegrationSpec& spec) {
  const ExactDiscretization disc = ExactDiscretization::make(p, spec.dt);
  const int64_t n_steps = std::llround(spec.duration / spec.dt);
  if (n_steps <= 0) throw std::invalid_argument("integrate: duration too short");

  int64_t pulse_first = 0, pulse_last = 0;
  double f_a = 0.0, f_phi = 0.0;
  if (pulse && pulse->f_s0 != 0.0) {
    validate(*pulse);
    const double center = spec.pulse_center >= 0.0 ? spec.pulse_center : 0.5 * spec.duration;
    std::tie(pulse_first, pulse_last) = detail::pulse_steps(*pulse, center, spec.dt, n_steps);
    f_a = pulse->force_quadrature_a();
    f_phi = pulse->force_quadrature_phi();
  }

  detail::GaussianRng rng(spec.seed);
  detail::StepLoop loop(disc, rng, spec.stationary_start);

  Trajectory traj;
  traj.dt = spec.dt;
  traj.samples.reserve(n_steps);
  for (auto& ch : traj.outputs) ch.resize(n_steps);

  double out[kOutputDim];
  for (int64_t n = 0; n < n_steps; ++n) {
    const bool active = n >= pulse_first && n < pulse_last;
    loop.advance(active ? f_a : 0.0, active ? f_phi : 0.0, out);
    for (int i = 0; i < kOutputDim; ++i) traj.outputs[i][n] = out[i];
    const CollectiveState g{loop.x(0), loop.x(1), loop.x(2), loop.x(3), loop.x(4), loop.x(5)};
    traj.samples.push_back(to_per_mode(g));
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Welch averaged periodograms.
//
// Single-sided estimate S(Omega_k) = 2 dt |DFT(w x)|^2 / sum w^2 averaged over
// non-overlapping Hann-windowed segments, Omega_k = 2 pi k / (L dt).

namespace detail {

class RealFft {
 public:
  explicit RealFft(size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    if (!plan_) throw std::runtime_error("fftw plan creation failed");
  }
  ~RealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // DFT of data .* window (window may be empty for no windowing).
  void transform(std::span<const double> data, std::span<const double> window,
                 std::vector<complex>& spectrum) {
    if (data.size() != n_) throw std::invalid_argument("RealFft: bad input size");
    if (window.empty()) {
      std::copy(data.begin(), data.end(), in_);
    } else {
      for (size_t i = 0; i < n_; ++i) in_[i] = data[i] * window[i];
    }
    fftw_execute(plan_);
    spectrum.resize(n_ / 2 + 1);
    for (size_t k = 0; k <= n_ / 2; ++k) spectrum[k] = complex(out_[k][0], out_[k][1]);
  }

 private:
  size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

inline std::vector<double> hann_window(size_t n) {
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n));
  return w;
}

}  // namespace detail

struct PsdEstimate {
  std::vector<double> frequencies;  // angular, k = 0 .. L/2
  std::vector<double> values;
  int segment_count = 0;
  double relative_std = 0.0;  // ~ 1/sqrt(segment_count) for white-dominated spectra
};

// Expected Welch value of an analytic curve sampled at the bin centers: the
// Hann window smears each bin over its neighbours with weights (1/6, 2/3, 1/6).
// Spectra are even, so the edges reflect.
inline std::vector<double> hann_bin_smooth(const std::vector<double>& s) {
  const size_t n = s.size();
  std::vector<double> out(n);
  for (size_t k = 0; k < n; ++k) {
    const double left = k > 0 ? s[k - 1] : s[std::min<size_t>(1, n - 1)];
    const double right = k + 1 < n ? s[k + 1] : s[n >= 2 ? n - 2 : 0];
    out[k] = (left + 4.0 * s[k] + right) / 6.0;
  }
  return out;
}

// Frequency-dependent weights over the four output channels; the plain
// channels are fixed unit vectors.
using OutputWeightFn = std::function<std::array<complex, kOutputDim>(double omega)>;

inline OutputWeightFn single_channel_weight(int output_index) {
  return [output_index](double) {
    std::array<complex, kOutputDim> w{};
    w[output_index] = 1.0;
    return w;
  };
}

namespace detail {

inline PsdEstimate welch_on_records(std::span<const std::vector<double>* const> channels,
                                    double dt, const OutputWeightFn& weights,
                                    size_t segment_length) {
  const size_t n = channels[0]->size();
  if (segment_length == 0 || segment_length > n)
    throw std::invalid_argument("estimate_psd: segment_length must be in [1, samples]");
  const int segments = static_cast<int>(n / segment_length);
  if (segments < 8)
    throw std::invalid_argument("estimate_psd: fewer than 8 segments (" +
                                std::to_string(segments) + "); shorten segments or simulate longer");

  const auto window = hann_window(segment_length);
  double wsum2 = 0.0;
  for (double w : window) wsum2 += w * w;
  const double scale = 2.0 * dt / wsum2;

  const size_t bins = segment_length / 2 + 1;
  PsdEstimate est;
  est.segment_count = segments;
  est.relative_std = 1.0 / std::sqrt(double(segments));
  est.frequencies.resize(bins);
  for (size_t k = 0; k < bins; ++k) est.frequencies[k] = 2.0 * kPi * k / (segment_length * dt);
  est.values.assign(bins, 0.0);

  std::vector<std::array<complex, kOutputDim>> wk(bins);
  for (size_t k = 0; k < bins; ++k) wk[k] = weights(est.frequencies[k]);

  RealFft fft(segment_length);
  std::array<std::vector<complex>, kOutputDim> spectra;
  for (int s = 0; s < segments; ++s) {
    for (size_t c = 0; c < channels.size(); ++c)
      fft.transform(std::span(channels[c]->data() + s * segment_length, segment_length), window,
                    spectra[c]);
    for (size_t k = 0; k < bins; ++k) {
      complex combo = 0.0;
      for (size_t c = 0; c < channels.size(); ++c) combo += wk[k][c] * spectra[c][k];
      est.values[k] += scale * std::norm(combo);
    }
  }
  for (double& v : est.values) v /= segments;
  return est;
}

}  // namespace detail

// PSD of one output record channel.
inline PsdEstimate estimate_psd(const Trajectory& traj, int output_index, size_t segment_length) {
  if (output_index < 0 || output_index >= kOutputDim)
    throw std::invalid_argument("estimate_psd: bad output index");
  const std::vector<double>* chans[1] = {&traj.outputs[output_index]};
  return detail::welch_on_records(chans, traj.dt, single_channel_weight(0), segment_length);
}

// PSD of a weighted combination of all four output records (weights applied
// per frequency bin to the segment spectra).
inline PsdEstimate estimate_psd(const Trajectory& traj, const OutputWeightFn& weights,
                                size_t segment_length) {
  const std::vector<double>* chans[kOutputDim] = {&traj.outputs[0], &traj.outputs[1],
                                                  &traj.outputs[2], &traj.outputs[3]};
  return detail::welch_on_records(chans, traj.dt, weights, segment_length);
}

// PSD of one state channel (per-mode index, see quadrature.hpp).
inline PsdEstimate estimate_state_psd(const Trajectory& traj, int state_index,
                                      size_t segment_length) {
  if (state_index < 0 || state_index >= kStateDim)
    throw std::invalid_argument("estimate_state_psd: bad state index");
  std::vector<double> s(traj.samples.size());
  for (size_t i = 0; i < s.size(); ++i) s[i] = traj.samples[i].as_array()[state_index];
  const std::vector<double>* chans[1] = {&s};
  return detail::welch_on_records(chans, traj.dt, single_channel_weight(0), segment_length);
}

// ---------------------------------------------------------------------------
// Streaming Welch validation: integrates segment by segment (no full-record
// storage) and accumulates averaged periodograms for several weighted
// channels, plus per-segment band means for error bars.

struct WelchSpec {
  size_t segment_length = 1u << 18;
  int segments = 400;
  double dt = 0.05;
  uint64_t seed = 1;
};

struct Band {
  double omega_lo = 0.0;
  double omega_hi = 0.0;
};

struct WelchChannel {
  std::string label;
  OutputWeightFn weights;
};

struct WelchRun {
  std::vector<double> frequencies;
  std::vector<PsdEstimate> channels;
  // [channel][band][segment] mean of the periodogram over the band's bins
  std::vector<std::vector<std::vector<double>>> segment_band_means;
};

inline WelchRun run_welch(const SystemParams& p, const WelchSpec& spec,
                          const std::vector<WelchChannel>& channels,
                          const std::vector<Band>& bands = {}) {
  if (spec.segments < 8) throw std::invalid_argument("run_welch: need at least 8 segments");
  const ExactDiscretization disc = ExactDiscretization::make(p, spec.dt);
  detail::GaussianRng rng(spec.seed);
  detail::StepLoop loop(disc, rng, true);

  const size_t L = spec.segment_length;
  const auto window = detail::hann_window(L);
  double wsum2 = 0.0;
  for (double w : window) wsum2 += w * w;
  const double scale = 2.0 * spec.dt / wsum2;

  const size_t bins = L / 2 + 1;
  WelchRun run;
  run.frequencies.resize(bins);
  for (size_t k = 0; k < bins; ++k) run.frequencies[k] = 2.0 * kPi * k / (L * spec.dt);

  std::vector<std::vector<std::array<complex, kOutputDim>>> wk(channels.size());
  for (size_t c = 0; c < channels.size(); ++c) {
    wk[c].resize(bins);
    for (size_t k = 0; k < bins; ++k) wk[c][k] = channels[c].weights(run.frequencies[k]);
  }
  std::vector<std::vector<size_t>> band_bins(bands.size());
  for (size_t b = 0; b < bands.size(); ++b)
    for (size_t k = 0; k < bins; ++k)
      if (run.frequencies[k] >= bands[b].omega_lo && run.frequencies[k] <= bands[b].omega_hi)
        band_bins[b].push_back(k);

  run.channels.resize(channels.size());
  run.segment_band_means.assign(channels.size(), {});
  for (size_t c = 0; c < channels.size(); ++c) {
    run.channels[c].frequencies = run.frequencies;
    run.channels[c].values.assign(bins, 0.0);
    run.channels[c].segment_count = spec.segments;
    run.channels[c].relative_std = 1.0 / std::sqrt(double(spec.segments));
    run.segment_band_means[c].assign(bands.size(), std::vector<double>(spec.segments, 0.0));
  }

  std::array<std::vector<double>, kOutputDim> records;
  for (auto& r : records) r.resize(L);
  detail::RealFft fft(L);
  std::array<std::vector<complex>, kOutputDim> spectra;
  std::vector<double> combo_psd(bins);

  double out[kOutputDim];
  for (int s = 0; s < spec.segments; ++s) {
    for (size_t n = 0; n < L; ++n) {
      loop.advance(0.0, 0.0, out);
      for (int i = 0; i < kOutputDim; ++i) records[i][n] = out[i];
    }
    for (int i = 0; i < kOutputDim; ++i) fft.transform(records[i], window, spectra[i]);
    for (size_t c = 0; c < channels.size(); ++c) {
      for (size_t k = 0; k < bins; ++k) {
        complex combo = 0.0;
        for (int i = 0; i < kOutputDim; ++i) combo += wk[c][k][i] * spectra[i][k];
        combo_psd[k] = scale * std::norm(combo);
        run.channels[c].values[k] += combo_psd[k];
      }
      for (size_t b = 0; b < bands.size(); ++b) {
        double acc = 0.0;
        for (size_t k : band_bins[b]) acc += combo_psd[k];
        run.segment_band_means[c][b][s] = band_bins[b].empty() ? 0.0 : acc / band_bins[b].size();
      }
    }
  }
  for (auto& ch : run.channels)
    for (double& v : ch.values) v /= spec.segments;
  return run;
}

// ---------------------------------------------------------------------------
// Pulse detection experiment: matched-filter amplitude estimates over
// repeated trials, against the exact (solver) force-referred noise model.

struct DetectionSpec {
  int trials = 200;
  double duration = 1638.4;
  double dt = 0.05;
  uint64_t seed = 1;
  estimator::Sector sector = estimator::Sector::amplitude();
  bool raw_readout = false;  // skip the back-action-evading combination
};

struct DetectionResult {
  std::vector<double> estimates;  // per-trial estimates of f_s0
  double mean = 0.0;
  double stddev = 0.0;
  double snr = 0.0;                // mean / stddev
  double threshold_amplitude = 0.0;  // unity-SNR amplitude for this pulse
  double rate_at_sigma = 0.0;      // fraction of estimates above one stddev
  double rate_at_zero = 0.0;       // fraction of estimates above zero

  double detection_rate(double threshold) const {
    if (estimates.empty()) return 0.0;
    int hits = 0;
    for (double e : estimates)
      if (e > threshold) ++hits;
    return double(hits) / estimates.size();
  }
};

inline DetectionResult run_detection_experiment(const SystemParams& p, const SignalPulse& pulse,
                                                const DetectionSpec& spec) {
  if (spec.trials <= 0) throw std::invalid_argument("detection experiment: trials must be > 0");
  validate(pulse);
  if (spec.sector.kind == estimator::SectorKind::general_phi)
    throw std::invalid_argument("detection experiment: use the amplitude or the phase sector");
  const bool amplitude = spec.sector.kind == estimator::SectorKind::amplitude;

  // Share of the pulse amplitude landing in the sector's force quadrature:
  // f_a = (f_s0/sqrt2) cos(psi_f), f_phi = -(f_s0/sqrt2) sin(psi_f).
  const double quad_share = amplitude ? std::cos(pulse.psi_f) : -std::sin(pulse.psi_f);
  if (std::abs(quad_share) < 1e-6)
    throw std::invalid_argument(
        "detection experiment: pulse phase puts the signal outside the measured quadrature");

  const int64_t n_steps = std::llround(spec.duration / spec.dt);
  const size_t n = static_cast<size_t>(n_steps);
  const size_t bins = n / 2 + 1;

  // Matched filter pieces, shared across trials: combined output transfer,
  // force transfer G_k and noise PSD S_k at each bin, template spectrum U_k.
  std::vector<std::array<complex, kOutputDim>> wk(bins);
  std::vector<complex> g(bins);
  std::vector<double> s_noise(bins);
  for (size_t k = 0; k < bins; ++k) {
    const double omega = 2.0 * kPi * k / (n * spec.dt);
    const auto weights = spec.raw_readout ? estimator::raw_weights(omega, spec.sector)
                                          : estimator::bae_weights(p, omega, spec.sector);
    wk[k] = weights.output_weights();
    const freq::TransferMatrix tm = freq::transfer_matrix(p, omega);
    const freq::Row8c row = freq::combined_output_row(tm, wk[k]);
    g[k] = row(amplitude ? kFA : kFPhi);
    s_noise[k] = freq::psd_of_row(p, row);
  }

  // The template is the discretized pulse window exactly as the drive applies it.
  std::vector<double> u(n, 0.0);
  const auto [first, last] =
      detail::pulse_steps(pulse, 0.5 * spec.duration, spec.dt, n_steps);
  for (int64_t i = first; i < last; ++i) u[i] = 1.0;
  detail::RealFft fft(n);
  std::vector<complex> u_hat;
  fft.transform(u, {}, u_hat);

  double denom = 0.0;
  for (size_t k = 0; k < bins; ++k) {
    const double mult = (k == 0 || 2 * k == n) ? 1.0 : 2.0;  // conjugate bins
    denom += mult * std::norm(g[k] * u_hat[k]) / s_noise[k];
  }
  if (!(denom > 0.0)) throw std::runtime_error("detection experiment: degenerate matched filter");

  DetectionResult res;
  res.threshold_amplitude = analytics::detection_threshold(
      pulse, estimator::force_referred_psd(
                 p, 0.0, spec.raw_readout ? estimator::raw_weights(0.0, spec.sector)
                                          : estimator::bae_weights(p, 0.0, spec.sector)));
  res.estimates.reserve(spec.trials);

  IntegrationSpec ispec;
  ispec.duration = spec.duration;
  ispec.dt = spec.dt;
  ispec.stationary_start = true;

  // Only the sector's own pair of outputs enters the combination.
  const int ch0 = amplitude ? kBetaAPlus : kBetaPhiPlus;
  const int ch1 = amplitude ? kBetaAMinus : kBetaPhiMinus;

  std::array<std::vector<complex>, 2> out_hat;
  uint64_t seed_state = spec.seed;
  for (int trial = 0; trial < spec.trials; ++trial) {
    ispec.seed = detail::splitmix64(seed_state);
    const Trajectory traj = integrate(p, pulse, ispec);

    fft.transform(traj.outputs[ch0], {}, out_hat[0]);
    fft.transform(traj.outputs[ch1], {}, out_hat[1]);

    double num = 0.0;
    for (size_t k = 0; k < bins; ++k) {
      const complex combo = wk[k][ch0] * out_hat[0][k] + wk[k][ch1] * out_hat[1][k];
      const double mult = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
      num += mult * (std::conj(g[k] * u_hat[k]) * combo).real() / s_noise[k];
    }
    // Estimate of the measured force quadrature, mapped back to f_s0.
    const double f_quad_hat = num / denom;
    res.estimates.push_back(std::sqrt(2.0) * f_quad_hat / quad_share);
  }

  double sum = 0.0;
  for (double e : res.estimates) sum += e;
  res.mean = sum / spec.trials;
  double var = 0.0;
  for (double e : res.estimates) var += (e - res.mean) * (e - res.mean);
  res.stddev = spec.trials > 1 ? std::sqrt(var / (spec.trials - 1)) : 0.0;
  res.snr = res.stddev > 0.0 ? res.mean / res.stddev : 0.0;
  res.rate_at_sigma = res.detection_rate(res.stddev);
  res.rate_at_zero = res.detection_rate(0.0);
  return res;
}

}  // namespace baefm::timedomain
