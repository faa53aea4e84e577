#include "swarmloc/otfs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "swarmloc/error.hpp"

namespace swarmloc::otfs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr Complex kJ{0.0, 1.0};

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

// Signed circular offset in [-n/2, n/2).
Index circular_offset(Index from, Index to, Index n) {
  Index d = ((to - from) % n + n) % n;
  return d >= n / 2 ? d - n : d;
}

Index wrap(Index i, Index n) { return ((i % n) + n) % n; }

// sum_{m=0}^{n-1} exp(j 2 pi m x / n), closed form of the geometric series.
Complex dirichlet(double x, Index n) {
  const double cycles = x / static_cast<double>(n);
  if (std::abs(cycles - std::round(cycles)) < 1e-12) return {static_cast<double>(n), 0.0};
  return (1.0 - std::exp(kJ * (kTwoPi * x))) / (1.0 - std::exp(kJ * (kTwoPi * cycles)));
}

double dirichlet_magnitude(double x, Index n) { return std::abs(dirichlet(x, n)); }

// Inverts |D(1 - a)| / |D(a)| = ratio for a in [0, 0.5]; the map is
// increasing from 0 to 1 on that interval.
double fractional_from_ratio(double ratio, Index n) {
  if (!(ratio > 0.0)) return 0.0;
  if (ratio >= 1.0) return 0.5;
  double lo = 0.0;
  double hi = 0.5;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = dirichlet_magnitude(1.0 - mid, n) / dirichlet_magnitude(mid, n);
    (r < ratio ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Eigen::MatrixXcd dft_matrix(Index n) {
  Eigen::MatrixXcd f(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      f(a, b) = std::exp(-kJ * (kTwoPi * static_cast<double>((a * b) % n) / static_cast<double>(n)));
    }
  }
  return f;
}

Grid dft2(const Grid& x) { return dft_matrix(x.rows()) * x * dft_matrix(x.cols()); }

Grid idft2(const Grid& x) {
  const double scale = 1.0 / static_cast<double>(x.rows() * x.cols());
  return scale * (dft_matrix(x.rows()).conjugate() * x * dft_matrix(x.cols()).conjugate());
}

Complex tap_value(Index delay_bins, Index doppler_bins, Complex alpha, double k_nu, double l_tau, Index k, Index l) {
  const double mn = static_cast<double>(delay_bins * doppler_bins);
  const Complex delay_sum = dirichlet(static_cast<double>(l) - l_tau, delay_bins);
  const Complex doppler_sum = dirichlet(k_nu - static_cast<double>(k), doppler_bins);
  const Complex phase = std::exp(-kJ * (kTwoPi * k_nu * l_tau / mn));
  return alpha / mn * delay_sum * doppler_sum * phase;
}

}  // namespace

void OtfsConfig::validate() const {
  if (!is_power_of_two(delay_bins) || delay_bins < 8 || !is_power_of_two(doppler_bins) || doppler_bins < 8) {
    throw Error(ErrorCode::kConfig, "OTFS grid sizes must be powers of two >= 8");
  }
  if (!(subcarrier_spacing_hz > 0.0)) throw Error(ErrorCode::kConfig, "subcarrier spacing must be > 0");
  if (!(carrier_hz > 0.0)) throw Error(ErrorCode::kConfig, "carrier frequency must be > 0");
  if (!(speed_of_light > 0.0)) throw Error(ErrorCode::kConfig, "speed of light must be > 0");
  if (std::isnan(pilot_snr_db) || std::isnan(data_to_pilot_db)) {
    throw Error(ErrorCode::kConfig, "OTFS power settings must not be NaN");
  }
  if (guard_doppler < 0 || guard_delay < 0) throw Error(ErrorCode::kConfig, "guard widths must be >= 0");
  PilotLayout::centered(*this).validate(doppler_bins, delay_bins);
}

PathParams PathParams::from_indices(Complex alpha, double doppler_index, double delay_index, const OtfsConfig& config) {
  PathParams p;
  p.alpha = alpha;
  p.tau = delay_index * config.delay_resolution_s();
  p.nu = doppler_index * config.doppler_resolution_hz();
  return p;
}

double PathParams::delay_index(const OtfsConfig& config) const { return tau / config.delay_resolution_s(); }

double PathParams::doppler_index(const OtfsConfig& config) const { return nu / config.doppler_resolution_hz(); }

PilotLayout PilotLayout::centered(const OtfsConfig& config) {
  return PilotLayout{config.doppler_bins / 2, config.delay_bins / 2, config.guard_doppler, config.guard_delay};
}

void PilotLayout::validate(Index doppler_bins, Index delay_bins) const {
  if (k_pilot < 0 || k_pilot >= doppler_bins || l_pilot < 0 || l_pilot >= delay_bins) {
    throw Error(ErrorCode::kConfig, "pilot outside the delay-Doppler grid");
  }
  if (2 * guard_doppler + 1 > doppler_bins || 2 * guard_delay + 1 > delay_bins) {
    throw Error(ErrorCode::kConfig, "guard region does not fit in the grid");
  }
}

bool PilotLayout::in_guard(Index k, Index l, Index doppler_bins, Index delay_bins) const {
  return std::abs(circular_offset(k_pilot, k, doppler_bins)) <= guard_doppler &&
         std::abs(circular_offset(l_pilot, l, delay_bins)) <= guard_delay;
}

Index PilotLayout::data_cell_count(Index doppler_bins, Index delay_bins) const {
  return doppler_bins * delay_bins - (2 * guard_doppler + 1) * (2 * guard_delay + 1);
}

std::vector<std::uint8_t> random_bits(std::size_t count, Rng& rng) {
  std::vector<std::uint8_t> bits(count);
  std::uniform_int_distribution<int> coin(0, 1);
  for (auto& b : bits) b = static_cast<std::uint8_t>(coin(rng));
  return bits;
}

DdFrame modulate_frame(const OtfsConfig& config, std::span<const std::uint8_t> bits, const PilotLayout& layout) {
  const Index n = config.doppler_bins;
  const Index m = config.delay_bins;
  layout.validate(n, m);
  const Index cells = layout.data_cell_count(n, m);
  if (static_cast<Index>(bits.size()) != 2 * cells) {
    throw Error(ErrorCode::kUsage, "QPSK frame needs " + std::to_string(2 * cells) + " bits, got " +
                                       std::to_string(bits.size()));
  }

  DdFrame frame;
  frame.layout = layout;
  frame.data_bits.assign(bits.begin(), bits.end());
  frame.pilot_amplitude = 1.0;
  frame.data_amplitude = std::isinf(config.data_to_pilot_db) && config.data_to_pilot_db < 0
                             ? 0.0
                             : frame.pilot_amplitude * std::pow(10.0, config.data_to_pilot_db / 20.0);
  frame.grid = Grid::Zero(n, m);
  frame.grid(layout.k_pilot, layout.l_pilot) = frame.pilot_amplitude;

  const double scale = frame.data_amplitude / std::numbers::sqrt2;
  std::size_t b = 0;
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < m; ++l) {
      if (layout.in_guard(k, l, n, m)) continue;
      const double re = bits[b] ? -1.0 : 1.0;
      const double im = bits[b + 1] ? -1.0 : 1.0;
      frame.grid(k, l) = scale * Complex(re, im);
      b += 2;
    }
  }
  return frame;
}

Grid dd_channel_taps(Index delay_bins, Index doppler_bins, Complex alpha, double doppler_index, double delay_index) {
  Grid h(doppler_bins, delay_bins);
  for (Index k = 0; k < doppler_bins; ++k) {
    for (Index l = 0; l < delay_bins; ++l) {
      h(k, l) = tap_value(delay_bins, doppler_bins, alpha, doppler_index, delay_index, k, l);
    }
  }
  return h;
}

Grid dd_channel_taps(const OtfsConfig& config, const PathParams& path) {
  return dd_channel_taps(config.delay_bins, config.doppler_bins, path.alpha, path.doppler_index(config),
                         path.delay_index(config));
}

Grid circular_convolve(const Grid& symbols, const Grid& taps) {
  if (symbols.rows() != taps.rows() || symbols.cols() != taps.cols()) {
    throw Error(ErrorCode::kUsage, "symbol and tap grids differ in shape");
  }
  return idft2(dft2(symbols).cwiseProduct(dft2(taps)));
}

Grid apply_channel(const Grid& symbols, const Grid& taps, double noise_power, std::uint64_t seed) {
  Grid y = circular_convolve(symbols, taps);
  if (noise_power > 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_power / 2.0));
    for (Index k = 0; k < y.rows(); ++k) {
      for (Index l = 0; l < y.cols(); ++l) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        y(k, l) += Complex(re, im);
      }
    }
  }
  return y;
}

ChannelEstimate estimate_channel(const Grid& received, const PilotLayout& layout, const OtfsConfig& config) {
  const Index n = received.rows();
  const Index m = received.cols();
  layout.validate(n, m);
  auto at = [&](Index dk, Index dl) -> Complex {
    return received(wrap(layout.k_pilot + dk, n), wrap(layout.l_pilot + dl, m));
  };

  // A path stays within one Doppler bin of the pilot (one bin is ~1 km/s
  // at the default numerology). Rows beyond that, plus negative delays, are
  // the noise floor; the rest is the search window.
  const Index reach = std::min<Index>(1, layout.guard_doppler);
  std::vector<double> floor_power;
  for (Index dk = -layout.guard_doppler; dk <= layout.guard_doppler; ++dk) {
    for (Index dl = -layout.guard_delay; dl <= layout.guard_delay; ++dl) {
      if (std::abs(dk) > reach || dl <= -2) floor_power.push_back(std::norm(at(dk, dl)));
    }
  }
  ChannelEstimate est;
  if (!floor_power.empty()) {
    const auto mid = floor_power.begin() + static_cast<std::ptrdiff_t>(floor_power.size() / 2);
    std::nth_element(floor_power.begin(), mid, floor_power.end());
    // Median of an exponential variable is ln 2 times its mean.
    est.noise_var = *mid / std::numbers::ln2;
  }

  Index best_dk = 0;
  Index best_dl = 0;
  double peak = -1.0;
  for (Index dk = -reach; dk <= reach; ++dk) {
    for (Index dl = 0; dl <= layout.guard_delay; ++dl) {
      const double a = std::abs(at(dk, dl));
      if (a > peak) {
        peak = a;
        best_dk = dk;
        best_dl = dl;
      }
    }
  }
  est.detected = peak > 3.0 * std::sqrt(est.noise_var);
  if (!est.detected) return est;

  double l_tau = static_cast<double>(best_dl);
  double k_nu = static_cast<double>(best_dk);
  if (config.fractional_refinement && peak > 0.0) {
    const double right = std::abs(at(best_dk, best_dl + 1));
    const double left = std::abs(at(best_dk, best_dl - 1));
    const double side = right >= left ? 1.0 : -1.0;
    l_tau += side * fractional_from_ratio(std::max(right, left) / peak, m);

    const double up = std::abs(at(best_dk + 1, best_dl));
    const double down = std::abs(at(best_dk - 1, best_dl));
    const double dside = up >= down ? 1.0 : -1.0;
    k_nu += dside * fractional_from_ratio(std::max(up, down) / peak, n);
  }
  l_tau = std::max(0.0, l_tau);

  // Invert the unit-gain response at the peak cell for the complex gain.
  const Complex unit = tap_value(m, n, 1.0, k_nu, l_tau, wrap(best_dk, n), wrap(best_dl, m));
  // Transmit pilot amplitude is fixed at 1.
  est.alpha_hat = std::abs(unit) > 0.0 ? at(best_dk, best_dl) / unit : Complex{};
  est.delay_index = l_tau;
  est.doppler_index = k_nu;
  est.tau_hat = l_tau * config.delay_resolution_s();
  est.nu_hat = k_nu * config.doppler_resolution_hz();
  return est;
}

double delay_to_range(double tau_hat, const OtfsConfig& config) { return config.speed_of_light * tau_hat; }

double demodulate_ber(const Grid& received, const ChannelEstimate& estimate, const DdFrame& frame) {
  if (!estimate.detected) throw Error(ErrorCode::kEvaluation, "cannot demodulate: channel not detected");
  const Index n = received.rows();
  const Index m = received.cols();
  const PilotLayout& layout = frame.layout;

  const Grid h = dd_channel_taps(m, n, estimate.alpha_hat, estimate.doppler_index, estimate.delay_index);
  Grid pilot_only = Grid::Zero(n, m);
  pilot_only(layout.k_pilot, layout.l_pilot) = frame.pilot_amplitude;
  const Grid hf = dft2(h);
  const Grid residual = received - idft2(dft2(pilot_only).cwiseProduct(hf));

  // The circulant channel is diagonal in the 2D DFT basis, so the MMSE
  // filter (H^H H + N0/Es I)^-1 H^H reduces to a per-bin scalar.
  const double es = frame.data_amplitude * frame.data_amplitude;
  Grid equalized = Grid::Zero(n, m);
  if (es > 0.0) {
    const double reg = std::max(estimate.noise_var, 1e-300) / es;
    const Grid yf = dft2(residual);
    Grid xf(n, m);
    for (Index k = 0; k < n; ++k) {
      for (Index l = 0; l < m; ++l) {
        xf(k, l) = std::conj(hf(k, l)) * yf(k, l) / (std::norm(hf(k, l)) + reg);
      }
    }
    equalized = idft2(xf);
  }

  std::size_t errors = 0;
  std::size_t b = 0;
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < m; ++l) {
      if (layout.in_guard(k, l, n, m)) continue;
      const std::uint8_t re_bit = equalized(k, l).real() < 0.0 ? 1 : 0;
      const std::uint8_t im_bit = equalized(k, l).imag() < 0.0 ? 1 : 0;
      errors += (re_bit != frame.data_bits[b]) + (im_bit != frame.data_bits[b + 1]);
      b += 2;
    }
  }
  return b == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(b);
}

double max_unambiguous_range(const OtfsConfig& config, const PilotLayout& layout) {
  const double reach = layout.delay_reach_bins() * config.delay_resolution_s() * config.speed_of_light;
  return std::min(config.frame_range_m(), reach);
}

LinkResult simulate_link(const Swarm& swarm, Index i, Index j, const OtfsConfig& config, const PilotLayout& layout) {
  if (i == j) throw Error(ErrorCode::kUsage, "a link needs two distinct agents");
  LinkResult out;
  out.true_range = true_range(swarm.position(i), swarm.position(j));
  if (out.true_range >= max_unambiguous_range(config, layout)) return out;

  Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(std::min(i, j)),
                                    static_cast<std::uint64_t>(std::max(i, j))}));
  constexpr double kReferenceDistance = 1.0;
  const double theta = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
  PathParams path;
  path.alpha = std::polar(kReferenceDistance / std::max(out.true_range, kReferenceDistance), theta);
  path.tau = out.true_range / config.speed_of_light;
  path.nu = config.relative_velocity * config.carrier_hz / config.speed_of_light;

  const auto cells = static_cast<std::size_t>(layout.data_cell_count(config.doppler_bins, config.delay_bins));
  const std::vector<std::uint8_t> bits = random_bits(2 * cells, rng);
  const DdFrame frame = modulate_frame(config, bits, layout);
  const Grid taps = dd_channel_taps(config, path);
  const double noise_power =
      std::norm(path.alpha) * frame.pilot_amplitude * frame.pilot_amplitude / std::pow(10.0, config.pilot_snr_db / 10.0);
  const Grid received = apply_channel(frame.grid, taps, noise_power, rng());

  out.estimate = estimate_channel(received, layout, config);
  if (out.estimate.detected) {
    out.range = delay_to_range(out.estimate.tau_hat, config);
    out.ber = demodulate_ber(received, out.estimate, frame);
  }
  return out;
}

std::optional<double> otfs_range_pair(const Swarm& swarm, Index i, Index j, const OtfsConfig& config) {
  return simulate_link(swarm, i, j, config, PilotLayout::centered(config)).range;
}

OtfsObservation observe_ranges_otfs(const Swarm& swarm, const OtfsConfig& config) {
  config.validate();
  const PilotLayout layout = PilotLayout::centered(config);
  OtfsObservation out;
  out.ranges = RangeMatrix(swarm.size());
  double ber_sum = 0.0;
  double err2 = 0.0;
  for (Index i = 0; i < swarm.size(); ++i) {
    for (Index j = i + 1; j < swarm.size(); ++j) {
      const LinkResult link = simulate_link(swarm, i, j, config, layout);
      if (link.ber) {
        ber_sum += *link.ber;
        ++out.frames;
      }
      if (link.range) {
        out.ranges.set(i, j, *link.range);
        err2 += (*link.range - link.true_range) * (*link.range - link.true_range);
        ++out.detected_links;
      }
    }
  }
  out.mean_ber = out.frames > 0 ? ber_sum / static_cast<double>(out.frames) : 0.0;
  out.ranging_rmse = out.detected_links > 0 ? std::sqrt(err2 / static_cast<double>(out.detected_links)) : 0.0;
  return out;
}

}  // namespace swarmloc::otfs
