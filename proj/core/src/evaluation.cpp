#include "swarmloc/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <thread>
#include <tuple>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "swarmloc/baselines.hpp"
#include "swarmloc/error.hpp"
#include "swarmloc/rng.hpp"

namespace swarmloc {

namespace {

// Seed-derivation tags keep the substreams of different sweeps apart.
constexpr std::uint64_t kSwarmTag = 1;
constexpr std::uint64_t kMaskTag = 2;
constexpr std::uint64_t kAnchorTag = 3;
constexpr std::uint64_t kOtfsTag = 4;
constexpr std::uint64_t kPipelineTag = 5;

double tetra_volume(const Position& a, const Position& b, const Position& c, const Position& d) {
  return std::abs((b - a).dot((c - a).cross(d - a))) / 6.0;
}

// Runs job(i) for i in [0, count) on a small pool; each job writes its own slot.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) job(i);
    });
  }
}

std::string status_of(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code()));
  return "internal";
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format_ratio(double r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

// One (swarm, mask) instance scored by every method.
std::vector<SweepRow> score_methods(std::span<const Method> methods, const Swarm& swarm, const RangeMatrix& ranges,
                                    const Anchors& anchors, const ExperimentConfig& config,
                                    const std::string& param_name, double param_value, std::uint64_t seed) {
  std::vector<SweepRow> rows;
  for (Method method : methods) {
    SweepRow row;
    row.method = std::string(method_name(method));
    row.param_name = param_name;
    row.param_value = param_value;
    row.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    try {
      const Coords est = run_method(method, ranges, config);
      row.rmse_m = rmse(align_to_truth(est, swarm, anchors), swarm);
    } catch (const std::exception& e) {
      row.status = status_of(e);
    }
    if (config.record_runtime) row.runtime_s = seconds_since(start);
    rows.push_back(std::move(row));
  }
  return rows;
}

SweepResult flatten(std::vector<std::vector<SweepRow>>& parts) {
  SweepResult out;
  for (auto& part : parts) {
    for (auto& row : part) out.rows.push_back(std::move(row));
  }
  out.sort();
  return out;
}

Aggregate aggregate(const SweepResult& result, std::string_view method, double param_value,
                    const std::optional<double> SweepRow::*field) {
  Aggregate agg;
  double sum = 0.0;
  double sum2 = 0.0;
  for (const SweepRow& row : result.rows) {
    if (row.method != method || row.param_value != param_value) continue;
    if (!row.ok() || !(row.*field)) {
      ++agg.failed;
      continue;
    }
    const double v = *(row.*field);
    sum += v;
    sum2 += v * v;
    ++agg.ok;
  }
  if (agg.ok > 0) {
    const double n = static_cast<double>(agg.ok);
    agg.mean = sum / n;
    agg.stddev = std::sqrt(std::max(0.0, sum2 / n - agg.mean * agg.mean));
  }
  return agg;
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kProposed:
      return "proposed";
    case Method::kProposedFix:
      return "proposed-fix";
    case Method::kMdsMap:
      return "mds-map";
    case Method::kMdsMapP:
      return "mds-map-p";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kProposed, Method::kProposedFix, Method::kMdsMap, Method::kMdsMapP}) {
    if (method_name(m) == name) return m;
  }
  throw Error(ErrorCode::kConfig, "unknown method '" + std::string(name) + "'");
}

Anchors choose_anchors(const Swarm& truth, std::uint64_t seed) {
  const Index n = truth.size();
  if (n < 4) throw Error(ErrorCode::kDegenerateAlignment, "need at least 4 agents for anchors");
  Rng rng(seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  Anchors best{0, 1, 2, 3};
  double best_volume = -1.0;
  for (int candidate = 0; candidate < 50; ++candidate) {
    Anchors q{};
    for (std::size_t s = 0; s < 4; ++s) {
      Index a = pick(rng);
      while (std::find(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(s), a) !=
             q.begin() + static_cast<std::ptrdiff_t>(s)) {
        a = pick(rng);
      }
      q[s] = a;
    }
    const double v = tetra_volume(truth.position(q[0]), truth.position(q[1]), truth.position(q[2]),
                                  truth.position(q[3]));
    if (v > best_volume) {
      best_volume = v;
      best = q;
    }
  }
  std::sort(best.begin(), best.end());
  return best;
}

Coords align_to_truth(const Coords& estimate, const Swarm& truth, const Anchors& anchors, bool allow_scale) {
  if (estimate.rows() != truth.size()) throw Error(ErrorCode::kUsage, "estimate and truth differ in size");
  Coords source(4, 3);
  Coords target(4, 3);
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t t = s + 1; t < 4; ++t) {
      if (anchors[s] == anchors[t]) throw Error(ErrorCode::kUsage, "anchors must be distinct");
    }
    source.row(static_cast<Index>(s)) = estimate.row(anchors[s]);
    target.row(static_cast<Index>(s)) = truth.positions.row(anchors[s]);
  }
  const Position a = target.row(0).transpose();
  const double volume = tetra_volume(a, target.row(1).transpose(), target.row(2).transpose(), target.row(3).transpose());
  const double scale = (target.rowwise() - target.colwise().mean()).norm();
  if (!(volume > 1e-12 * scale * scale * scale)) {
    throw Error(ErrorCode::kDegenerateAlignment, "anchors are coplanar");
  }

  // Ranges cannot tell a map from its mirror image, so the mirrored estimate
  // is fitted too and the better anchor fit wins (ties keep the original).
  Coords mirrored_source = source;
  mirrored_source.col(2) *= -1.0;
  const RigidTransform direct = procrustes_fit(source, target);
  const RigidTransform mirror = procrustes_fit(mirrored_source, target);
  const bool flip = alignment_cost(mirror, mirrored_source, target) < alignment_cost(direct, source, target);
  const RigidTransform& tf = flip ? mirror : direct;
  Coords est = estimate;
  if (flip) {
    est.col(2) *= -1.0;
    source = mirrored_source;
  }

  if (!allow_scale) return tf.apply(est);
  const Eigen::RowVector3d mu_s = source.colwise().mean();
  const Eigen::RowVector3d mu_t = target.colwise().mean();
  const Coords ps = (source.rowwise() - mu_s) * tf.rotation.transpose();
  const Coords pt = target.rowwise() - mu_t;
  const double denom = ps.squaredNorm();
  const double s = denom > 0.0 ? (ps.array() * pt.array()).sum() / denom : 1.0;
  const Coords centred = (est.rowwise() - mu_s) * tf.rotation.transpose();
  return (s * centred).rowwise() + mu_t;
}

double rmse(const Coords& aligned, const Swarm& truth) {
  if (aligned.rows() != truth.size()) throw Error(ErrorCode::kUsage, "aligned coordinates and truth differ in size");
  if (aligned.rows() == 0) return 0.0;
  return std::sqrt((aligned - truth.positions).rowwise().squaredNorm().mean());
}

void SweepResult::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.param_name, a.param_value, a.method, a.seed) <
           std::tie(b.param_name, b.param_value, b.method, b.seed);
  });
}

Aggregate aggregate_rmse(const SweepResult& result, std::string_view method, double param_value) {
  return aggregate(result, method, param_value, &SweepRow::rmse_m);
}

Aggregate aggregate_ber(const SweepResult& result, std::string_view method, double param_value) {
  return aggregate(result, method, param_value, &SweepRow::ber);
}

Coords run_method(Method method, const RangeMatrix& ranges, const ExperimentConfig& config) {
  switch (method) {
    case Method::kProposed:
      return localize_swarm(ranges, config.pipeline).map.coords;
    case Method::kProposedFix:
      return proposed_fix(ranges, config.k_fixed, config.pipeline).coords;
    case Method::kMdsMap:
      return mds_map(ranges).coords;
    case Method::kMdsMapP:
      return mds_map_p(ranges, config.patch_hops).coords;
  }
  throw Error(ErrorCode::kUsage, "unknown method");
}

unsigned effective_threads(unsigned requested) {
  unsigned n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SWARMLOC_THREADS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, n);
}

SweepResult sweep_retention(std::span<const Method> methods, std::span<const double> ratios, Index swarm_size,
                            Index trials, std::uint64_t base_seed, const ExperimentConfig& config) {
  for (double r : ratios) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::kConfig, "retention ratios must lie in [0, 1]");
  }
  if (trials <= 0 || ratios.empty() || methods.empty()) return {};
  const auto n_ratios = ratios.size();
  const auto jobs = static_cast<std::size_t>(trials) * n_ratios;
  std::vector<std::vector<SweepRow>> parts(jobs);
  parallel_for(jobs, effective_threads(config.threads), [&](std::size_t job) {
    const auto trial = static_cast<std::uint64_t>(job / n_ratios);
    const double ratio = ratios[job % n_ratios];
    const std::uint64_t seed = derive_seed(base_seed, {trial});
    const Swarm swarm = generate_swarm(swarm_size, config.bounds, derive_seed(seed, {kSwarmTag}));
    MeasurementConfig mc = config.measurement;
    mc.retention_ratio = ratio;
    // Same mask seed across ratios: the kept pairs are nested prefixes.
    mc.seed = derive_seed(seed, {kMaskTag});
    const RangeMatrix ranges = observe_ranges(swarm, mc);
    const Anchors anchors = choose_anchors(swarm, derive_seed(seed, {kAnchorTag}));
    ExperimentConfig run = config;
    run.pipeline.clustering.seed = derive_seed(seed, {kPipelineTag});
    run.pipeline.completion.seed = run.pipeline.clustering.seed;
    parts[job] = score_methods(methods, swarm, ranges, anchors, run, "retention", ratio, seed);
  });
  return flatten(parts);
}

SweepResult sweep_swarm_size(std::span<const Method> methods, std::span<const Index> sizes,
                             std::span<const double> ratios, Index trials, std::uint64_t base_seed,
                             const ExperimentConfig& config) {
  for (double r : ratios) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::kConfig, "retention ratios must lie in [0, 1]");
  }
  for (Index s : sizes) {
    if (s < 4) throw Error(ErrorCode::kConfig, "swarm sizes must be >= 4");
  }
  if (trials <= 0 || ratios.empty() || sizes.empty() || methods.empty()) return {};
  const std::size_t per_trial = sizes.size() * ratios.size();
  const auto jobs = static_cast<std::size_t>(trials) * per_trial;
  std::vector<std::vector<SweepRow>> parts(jobs);
  parallel_for(jobs, effective_threads(config.threads), [&](std::size_t job) {
    const auto trial = static_cast<std::uint64_t>(job / per_trial);
    const std::size_t s = (job % per_trial) / ratios.size();
    const double ratio = ratios[job % ratios.size()];
    const Index size = sizes[s];
    const std::uint64_t seed = derive_seed(base_seed, {trial, static_cast<std::uint64_t>(size)});
    const Swarm swarm = generate_swarm(size, config.bounds, derive_seed(seed, {kSwarmTag}));
    MeasurementConfig mc = config.measurement;
    mc.retention_ratio = ratio;
    mc.seed = derive_seed(seed, {kMaskTag});
    const RangeMatrix ranges = observe_ranges(swarm, mc);
    const Anchors anchors = choose_anchors(swarm, derive_seed(seed, {kAnchorTag}));
    ExperimentConfig run = config;
    run.pipeline.clustering.seed = derive_seed(seed, {kPipelineTag});
    run.pipeline.completion.seed = run.pipeline.clustering.seed;
    parts[job] = score_methods(methods, swarm, ranges, anchors, run, "swarm_size@retention=" + format_ratio(ratio),
                               static_cast<double>(size), seed);
  });
  return flatten(parts);
}

SweepResult sweep_isac(std::span<const double> power_ratios_db, Index trials, std::uint64_t base_seed,
                       const IsacConfig& config) {
  if (trials <= 0 || power_ratios_db.empty()) return {};
  config.otfs.validate();
  const std::size_t n_ratios = power_ratios_db.size();
  const auto jobs = static_cast<std::size_t>(trials) * n_ratios;
  std::vector<std::vector<SweepRow>> parts(jobs);
  const Eigen::Vector3d bounds = Eigen::Vector3d::Constant(config.bounds);
  parallel_for(jobs, effective_threads(config.threads), [&](std::size_t job) {
    const auto trial = static_cast<std::uint64_t>(job / n_ratios);
    const double ratio = power_ratios_db[job % n_ratios];
    const std::uint64_t seed = derive_seed(base_seed, {trial});
    const auto start = std::chrono::steady_clock::now();

    SweepRow loc;
    loc.method = "proposed";
    loc.param_name = "data_to_pilot_db";
    loc.param_value = ratio;
    loc.seed = seed;
    SweepRow ranging = loc;
    ranging.method = "otfs-ranging";
    try {
      const Swarm swarm = generate_swarm(config.swarm_size, bounds, derive_seed(seed, {kSwarmTag}));
      otfs::OtfsConfig oc = config.otfs;
      oc.data_to_pilot_db = ratio;
      // Channel phases and noise vary with the power ratio only through the
      // data term: the link substreams depend on the trial alone.
      oc.seed = derive_seed(seed, {kOtfsTag});
      const otfs::OtfsObservation obs = otfs::observe_ranges_otfs(swarm, oc);
      if (obs.frames > 0) {
        loc.ber = obs.mean_ber;
        ranging.ber = obs.mean_ber;
      }
      if (obs.detected_links > 0) {
        ranging.rmse_m = obs.ranging_rmse;
      } else {
        ranging.status = "disconnected";
      }
      try {
        PipelineConfig pc = config.pipeline;
        pc.clustering.seed = derive_seed(seed, {kPipelineTag});
        pc.completion.seed = pc.clustering.seed;
        const Coords est = localize_swarm(obs.ranges, pc).map.coords;
        const Anchors anchors = choose_anchors(swarm, derive_seed(seed, {kAnchorTag}));
        loc.rmse_m = rmse(align_to_truth(est, swarm, anchors), swarm);
      } catch (const std::exception& e) {
        loc.status = status_of(e);
      }
    } catch (const std::exception& e) {
      loc.status = status_of(e);
      ranging.status = loc.status;
    }
    if (config.record_runtime) {
      loc.runtime_s = seconds_since(start);
      ranging.runtime_s = loc.runtime_s;
    }
    parts[job] = {std::move(loc), std::move(ranging)};
  });
  return flatten(parts);
}

}  // namespace swarmloc
