#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "swarmloc/rng.hpp"
#include "swarmloc/swarm.hpp"

namespace swarmloc::otfs {

inline constexpr double kSpeedOfLight = 299'792'458.0;

using Complex = std::complex<double>;
/// Delay-Doppler grid: row = Doppler index k in [0, N), column = delay index
/// l in [0, M).
using Grid = Eigen::MatrixXcd;

struct OtfsConfig {
  Index delay_bins = 32;    // M
  Index doppler_bins = 32;  // N
  double subcarrier_spacing_hz = 552.3e3;
  double carrier_hz = 5.1e9;
  /// Received pilot power over per-cell noise power.
  double pilot_snr_db = 25.0;
  /// Mean data-symbol power over pilot power; -infinity disables data.
  double data_to_pilot_db = -10.0;
  std::uint64_t seed = 0;
  double speed_of_light = kSpeedOfLight;
  /// Radial velocity between transmitter and receiver (m/s).
  double relative_velocity = 0.0;
  /// Refine integer peaks with the two-bin Dirichlet ratio.
  bool fractional_refinement = true;
  Index guard_doppler = 4;
  Index guard_delay = 4;

  void validate() const;

  double delay_resolution_s() const { return 1.0 / (static_cast<double>(delay_bins) * subcarrier_spacing_hz); }
  double doppler_resolution_hz() const { return subcarrier_spacing_hz / static_cast<double>(doppler_bins); }
  /// c / delta_f: one full frame of delay.
  double frame_range_m() const { return speed_of_light / subcarrier_spacing_hz; }
};

/// One propagation path. Indices follow l_tau = tau * M * delta_f and
/// k_nu = nu * N / delta_f; each splits into an integer part and a
/// fractional part in [-0.5, 0.5].
struct PathParams {
  Complex alpha{1.0, 0.0};
  double tau = 0.0;
  double nu = 0.0;

  static PathParams from_indices(Complex alpha, double doppler_index, double delay_index, const OtfsConfig& config);
  double delay_index(const OtfsConfig& config) const;
  double doppler_index(const OtfsConfig& config) const;
};

/// Single embedded pilot with a rectangular zero guard around it. Distances
/// are circular.
struct PilotLayout {
  Index k_pilot = 16;
  Index l_pilot = 16;
  Index guard_doppler = 4;
  Index guard_delay = 4;

  /// Pilot at (N/2, M/2) with the configured guard half-widths.
  static PilotLayout centered(const OtfsConfig& config);

  void validate(Index doppler_bins, Index delay_bins) const;
  bool in_guard(Index k, Index l, Index doppler_bins, Index delay_bins) const;
  Index data_cell_count(Index doppler_bins, Index delay_bins) const;
  /// Longest delay, in bins, whose response still peaks inside the guard.
  double delay_reach_bins() const { return static_cast<double>(guard_delay) + 0.5; }
};

struct DdFrame {
  Grid grid;
  PilotLayout layout;
  std::vector<std::uint8_t> data_bits;
  double pilot_amplitude = 1.0;
  /// RMS amplitude of data cells.
  double data_amplitude = 0.0;
};

std::vector<std::uint8_t> random_bits(std::size_t count, Rng& rng);

/// Gray-mapped QPSK on every non-guard cell (row-major), pilot of unit
/// amplitude. Throws Error(kUsage) unless bits.size() == 2 * data cells.
DdFrame modulate_frame(const OtfsConfig& config, std::span<const std::uint8_t> bits, const PilotLayout& layout);

/// Effective DD channel of one path with an all-ones window:
/// H[k,l] = alpha/(MN) * sum_m e^{j2pi m (l - l_tau)/M} * sum_n e^{-j2pi n (k - k_nu)/N}
///          * e^{-j2pi k_nu l_tau/(MN)}.
Grid dd_channel_taps(const OtfsConfig& config, const PathParams& path);
Grid dd_channel_taps(Index delay_bins, Index doppler_bins, Complex alpha, double doppler_index, double delay_index);

/// Two-dimensional circular convolution Y[k,l] = sum X[k',l'] H[k-k', l-l'].
Grid circular_convolve(const Grid& symbols, const Grid& taps);

/// Y = H (*) X + Z with Z i.i.d. CN(0, noise_power).
Grid apply_channel(const Grid& symbols, const Grid& taps, double noise_power, std::uint64_t seed);

struct ChannelEstimate {
  Complex alpha_hat{0.0, 0.0};
  double tau_hat = 0.0;
  double nu_hat = 0.0;
  bool detected = false;
  /// Fractional grid indices behind tau_hat / nu_hat.
  double delay_index = 0.0;
  double doppler_index = 0.0;
  /// Per-cell noise(+interference) power measured on the guard.
  double noise_var = 0.0;
};

/// Embedded-pilot estimator: noise floor from guard cells more than one
/// Doppler bin from the pilot, peak search over non-negative delay offsets
/// within one Doppler bin, detection at 3x the noise standard deviation,
/// Dirichlet-ratio fractional refinement.
ChannelEstimate estimate_channel(const Grid& received, const PilotLayout& layout, const OtfsConfig& config);

double delay_to_range(double tau_hat, const OtfsConfig& config);

/// Pilot cancellation, linear MMSE equalization of the estimated circulant
/// channel, hard QPSK decisions on data cells. Throws Error(kEvaluation)
/// for an undetected channel.
double demodulate_ber(const Grid& received, const ChannelEstimate& estimate, const DdFrame& frame);

struct LinkResult {
  double true_range = 0.0;
  std::optional<double> range;
  /// Present whenever a frame was sent and the channel detected.
  std::optional<double> ber;
  ChannelEstimate estimate;
};

/// Longest range this configuration can report: the smaller of c / delta_f
/// and the guard's delay reach.
double max_unambiguous_range(const OtfsConfig& config, const PilotLayout& layout);

/// One frame from agent j to agent i over a free-space LoS path
/// (alpha = e^{j theta} * 1 m / d).
LinkResult simulate_link(const Swarm& swarm, Index i, Index j, const OtfsConfig& config,
                         const PilotLayout& layout);

/// Measured range or nullopt (missing link). Throws Error(kUsage) if i == j.
std::optional<double> otfs_range_pair(const Swarm& swarm, Index i, Index j, const OtfsConfig& config);

struct OtfsObservation {
  RangeMatrix ranges;
  /// Mean BER over frames whose channel was detected.
  double mean_ber = 0.0;
  Index frames = 0;
  /// RMS of (measured - true) over detected links.
  double ranging_rmse = 0.0;
  Index detected_links = 0;
};

/// One frame per unordered pair.
OtfsObservation observe_ranges_otfs(const Swarm& swarm, const OtfsConfig& config);

}  // namespace swarmloc::otfs
