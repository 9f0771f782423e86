#include "doaloc/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "doaloc/error.hpp"
#include "doaloc/procrustes.hpp"
#include "doaloc/rng.hpp"

namespace doaloc {

namespace {

constexpr std::uint64_t kStreamA = 1;
constexpr std::uint64_t kStreamB = 2;
constexpr std::uint64_t kStreamTruth = 3;
constexpr std::uint64_t kStreamNoise = 4;
constexpr std::uint64_t kStreamTrajectory = 5;

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }
bool finite_nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void TrajectoryConfig::validate() const {
  if (!finite_positive(speed_min) || !finite_positive(speed_max) || speed_max < speed_min) {
    throw Error(ErrorCode::kConfig, "speed range must be positive and non-empty");
  }
  if (!finite_positive(measurement_interval)) {
    throw Error(ErrorCode::kConfig, "measurement interval must be positive");
  }
  if (!finite_nonnegative(max_turn_rate) || !finite_nonnegative(max_climb_rate)) {
    throw Error(ErrorCode::kConfig, "turn and climb rate caps must be non-negative");
  }
  if (!initial_a.allFinite() || !initial_b.allFinite()) {
    throw Error(ErrorCode::kConfig, "initial positions must be finite");
  }
  if (k_max < 1) throw Error(ErrorCode::kConfig, "K_max must be >= 1");
}

std::vector<Vec3> generate_trajectory(const TrajectoryConfig& cfg, const Vec3& start,
                                      std::uint64_t seed, bool level) {
  cfg.validate();
  Rng rng(seed);
  const double dt = cfg.measurement_interval;
  double heading = rng.uniform(-std::numbers::pi, std::numbers::pi);

  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(cfg.k_max));
  out.push_back(start);
  for (int k = 1; k < cfg.k_max; ++k) {
    const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
    heading += rng.uniform(-1.0, 1.0) * cfg.max_turn_rate * dt;
    const double climb_cap = level ? 0.0 : std::min(cfg.max_climb_rate, speed);
    const double climb = rng.uniform(-1.0, 1.0) * climb_cap;
    const double step = speed * dt;
    const double rise = climb * dt;
    const double run = std::sqrt(std::max(0.0, step * step - rise * rise));
    out.push_back(out.back() + Vec3(run * std::cos(heading), run * std::sin(heading), rise));
  }
  return out;
}

std::vector<Vec3> generate_trajectory(const TrajectoryConfig& cfg) {
  return generate_trajectory(cfg, cfg.initial_a, derive_seed(cfg.seed, {kStreamA}), cfg.planar_a);
}

FrameTransform sample_truth(std::uint64_t seed, double box) {
  Rng rng(seed);
  const Rotation3 r = random_rotation(rng);
  Vec3 t;
  for (int i = 0; i < 3; ++i) t(i) = rng.uniform(-box, box);
  return FrameTransform{r, t};
}

Scenario make_scenario(const TrajectoryConfig& cfg, const FrameTransform& truth) {
  std::vector<Vec3> a = generate_trajectory(cfg);
  std::vector<Vec3> b =
      generate_trajectory(cfg, cfg.initial_b, derive_seed(cfg.seed, {kStreamB}), false);
  MeasurementSet ms = synthesize_measurements(truth, a, b);
  return Scenario{truth, std::move(a), std::move(b), std::move(ms)};
}

Scenario representative_scenario() {
  Mat3 r;
  r << -0.627, -0.776, 0.072,
       -0.747, 0.625, 0.228,
       -0.222, 0.090, -0.971;
  const FrameTransform truth{nearest_rotation(r), Vec3(247.490, 110.382, 229.784)};
  std::vector<Vec3> a{
      {0.0, 0.0, 300.0},
      {82.962, -235.407, 314.161},
      {141.084, -478.270, 302.352},
      {139.079, -726.308, 271.157},
      {-109.876, -704.457, 277.792},
      {-252.217, -499.403, 291.634},
  };
  std::vector<Vec3> b{
      {800.0, 0.0, 350.0},
      {1017.5, -122.5, 364.1},
      {1225.7, -260.8, 358.0},
      {1474.1, -233.5, 363.9},
      {1719.3, -272.8, 392.6},
      {1810.6, -496.1, 458.0},
  };
  MeasurementSet ms = synthesize_measurements(truth, a, b);
  return Scenario{truth, std::move(a), std::move(b), std::move(ms)};
}

double mean_inter_agent_distance(const Scenario& s) {
  const std::size_t n = std::min(s.a_global.size(), s.b_global.size());
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += (s.a_global[i] - s.b_global[i]).norm();
  return sum / static_cast<double>(n);
}

void CampaignSpec::validate(const TrajectoryConfig& cfg) const {
  if (trials_per_cell < 1) throw Error(ErrorCode::kConfig, "trials_per_cell must be >= 1");
  if (sigmas.empty() || k_values.empty() || methods.empty()) {
    throw Error(ErrorCode::kConfig, "sigmas, K values and methods must be non-empty");
  }
  for (double s : sigmas) {
    if (!finite_nonnegative(s)) throw Error(ErrorCode::kConfig, "sigmas must be >= 0");
  }
  const int available = truth_sampling == TruthSampling::kRepresentative ? 6 : cfg.k_max;
  for (int k : k_values) {
    if (k < 1 || k > available) {
      throw Error(ErrorCode::kConfig, "K=" + std::to_string(k) + " outside [1, " +
                                          std::to_string(available) + "]");
    }
  }
  if (!finite_positive(translation_box)) {
    throw Error(ErrorCode::kConfig, "translation box must be positive");
  }
  if (threads < 0) throw Error(ErrorCode::kConfig, "threads must be >= 0");
  if (truth_sampling == TruthSampling::kRandom) cfg.validate();
}

const CellSummary* CampaignResult::find(double sigma, int k, Method method) const {
  for (const auto& c : cells) {
    if (c.sigma == sigma && c.k == k && c.method == method) return &c;
  }
  return nullptr;
}

std::uint64_t trial_seed(std::uint64_t campaign_seed, int index) {
  return derive_seed(campaign_seed, {static_cast<std::uint64_t>(index)});
}

std::vector<TrialRecord> run_trial(const CampaignSpec& spec, const TrajectoryConfig& cfg, int index) {
  const std::uint64_t seed = trial_seed(spec.seed, index);
  const Scenario scenario = [&] {
    if (spec.truth_sampling == TruthSampling::kRepresentative) return representative_scenario();
    TrajectoryConfig trial_cfg = cfg;
    trial_cfg.seed = derive_seed(seed, {kStreamTrajectory});
    return make_scenario(trial_cfg,
                         sample_truth(derive_seed(seed, {kStreamTruth}), spec.translation_box));
  }();
  const double distance = mean_inter_agent_distance(scenario);
  const std::uint64_t noise_seed = derive_seed(seed, {kStreamNoise});

  std::vector<TrialRecord> out;
  out.reserve(spec.sigmas.size() * spec.k_values.size() * spec.methods.size());
  for (double sigma : spec.sigmas) {
    const MeasurementSet noisy = add_noise(scenario.noiseless, NoiseSpec{sigma, noise_seed});
    for (int k : spec.k_values) {
      const MeasurementSet ms = noisy.prefix(static_cast<std::size_t>(k));
      for (Method method : spec.methods) {
        TrialRecord rec;
        rec.sigma = sigma;
        rec.k = k;
        rec.method = method;
        rec.trial = index;
        rec.mean_distance = distance;
        try {
          const EstimateReport rep = score(estimate(method, ms, spec.estimator), ms, scenario.truth);
          rec.rotation_error = *rep.rotation_error;
          rec.position_error = *rep.position_error;
          rec.rank1_ratio = rep.diagnostics.rank1_ratio;
          rec.interior_rank1_ratio = rep.diagnostics.interior_rank1_ratio;
        } catch (const Error& e) {
          rec.status = status_token(e.code());
          rec.rotation_error = std::numeric_limits<double>::quiet_NaN();
          rec.position_error = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

CampaignResult run_campaign(const CampaignSpec& spec, const TrajectoryConfig& cfg,
                            const CampaignControl& control) {
  spec.validate(cfg);
  const int total = spec.trials_per_cell;
  std::vector<std::optional<std::vector<TrialRecord>>> slots(static_cast<std::size_t>(total));

  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;
  auto cancelled = [&] { return control.cancel && control.cancel->load(); };

  auto worker = [&] {
    for (;;) {
      if (cancelled()) return;
      const int i = next.fetch_add(1);
      if (i >= total) return;
      slots[static_cast<std::size_t>(i)] = run_trial(spec, cfg, i);
      const int n = done.fetch_add(1) + 1;
      if (control.progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        control.progress(n, total);
      }
    }
  };

  int threads = spec.threads > 0 ? spec.threads
                                 : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, total);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  CampaignResult result;
  result.trials_requested = total;
  for (auto& slot : slots) {
    if (!slot) continue;
    ++result.trials_completed;
    for (auto& r : *slot) result.records.push_back(std::move(r));
  }
  result.interrupted = result.trials_completed < total;
  aggregate(result, spec);
  return result;
}

void aggregate(CampaignResult& result, const CampaignSpec& spec) {
  result.cells.clear();
  for (double sigma : spec.sigmas) {
    for (int k : spec.k_values) {
      for (Method method : spec.methods) {
        CellSummary cell;
        cell.sigma = sigma;
        cell.k = k;
        cell.method = method;
        std::vector<double> rot, pos, ratio;
        for (const auto& r : result.records) {
          if (r.sigma != sigma || r.k != k || r.method != method) continue;
          if (r.status == "ok") {
            rot.push_back(r.rotation_error);
            pos.push_back(r.position_error);
            ratio.push_back(r.interior_rank1_ratio);
          } else {
            ++cell.failed;
          }
        }
        cell.completed = static_cast<int>(rot.size());
        cell.flagged = 2 * cell.failed > cell.completed + cell.failed;
        cell.median_rotation_error = lower_median(std::move(rot));
        cell.median_position_error = lower_median(std::move(pos));
        cell.median_interior_rank1_ratio = lower_median(std::move(ratio));
        result.cells.push_back(cell);
      }
    }
  }

  std::vector<double> distances;
  int last_trial = -1;
  for (const auto& r : result.records) {
    if (r.trial == last_trial) continue;
    last_trial = r.trial;
    distances.push_back(r.mean_distance);
  }
  result.distance = DistanceStats{};
  if (!distances.empty()) {
    double sum = 0.0;
    for (double d : distances) sum += d;
    result.distance.mean = sum / static_cast<double>(distances.size());
    result.distance.min = *std::min_element(distances.begin(), distances.end());
    result.distance.max = *std::max_element(distances.begin(), distances.end());
  }
}

double lower_median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

std::string status_token(ErrorCode code) {
  std::string s = to_string(code);
  for (char& c : s) {
    if (c == ' ' || c == '-') c = '_';
  }
  return s;
}

}  // namespace doaloc
