#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "doaloc/estimation.hpp"
#include "doaloc/frames.hpp"
#include "doaloc/measurement.hpp"

namespace doaloc {

/// Kinematic random walk for a fixed-wing agent.
///
/// Each step draws a speed in [speed_min, speed_max], a heading change
/// uniform in +-max_turn_rate * interval and a climb rate uniform in
/// +-max_climb_rate (capped at the speed). The step length equals
/// speed * interval.
struct TrajectoryConfig {
  double speed_min = 40.0;              // m/s
  double speed_max = 60.0;              // m/s
  double measurement_interval = 5.0;    // s
  double max_turn_rate = 0.35;          // rad/s
  double max_climb_rate = 10.0;         // m/s
  Vec3 initial_a{0.0, 0.0, 300.0};
  Vec3 initial_b{1000.0, 0.0, 350.0};
  int k_max = 16;
  std::uint64_t seed = 0;
  /// Forces Agent A to level flight (climb rate 0).
  bool planar_a = false;

  /// Throws Error(kConfig) on an infeasible configuration.
  void validate() const;
};

/// Agent A's waypoints starting at cfg.initial_a.
std::vector<Vec3> generate_trajectory(const TrajectoryConfig& cfg);

/// Waypoints starting at `start` with the given stream seed.
std::vector<Vec3> generate_trajectory(const TrajectoryConfig& cfg, const Vec3& start,
                                      std::uint64_t seed, bool level);

inline constexpr double kDefaultTranslationBox = 500.0;

/// Haar-uniform rotation and translation uniform in [-box, box]^3.
FrameTransform sample_truth(std::uint64_t seed, double box = kDefaultTranslationBox);

struct Scenario {
  FrameTransform truth;
  std::vector<Vec3> a_global;
  std::vector<Vec3> b_global;
  MeasurementSet noiseless;
};

/// Trajectories for both agents (B's stream derived from cfg.seed) and
/// noiseless measurements under `truth`.
Scenario make_scenario(const TrajectoryConfig& cfg, const FrameTransform& truth);

/// Fixed six-instant example: Agent A waypoints from the noiseless example
/// table, Agent B global waypoints from the noisy example table, truth from
/// the printed example transform (rotation projected onto SO(3)).
Scenario representative_scenario();

/// Mean distance between the agents over the scenario.
double mean_inter_agent_distance(const Scenario& s);

enum class TruthSampling {
  /// Fresh truth and trajectories per trial.
  kRandom,
  /// representative_scenario() for every trial; only the noise varies.
  kRepresentative,
};

struct CampaignSpec {
  std::vector<double> sigmas;  // radians
  std::vector<int> k_values;
  int trials_per_cell = 100;
  std::vector<Method> methods{Method::kSdpO};
  TruthSampling truth_sampling = TruthSampling::kRandom;
  double translation_box = kDefaultTranslationBox;
  std::uint64_t seed = 0;
  /// 0 selects std::thread::hardware_concurrency().
  int threads = 0;
  EstimatorOptions estimator;

  void validate(const TrajectoryConfig& cfg) const;
};

struct TrialRecord {
  double sigma = 0.0;
  int k = 0;
  Method method = Method::kSdpO;
  int trial = 0;
  /// "ok" or a snake_case error token.
  std::string status = "ok";
  double rotation_error = 0.0;
  double position_error = 0.0;
  double rank1_ratio = 0.0;
  double interior_rank1_ratio = 0.0;
  double mean_distance = 0.0;
};

struct CellSummary {
  double sigma = 0.0;
  int k = 0;
  Method method = Method::kSdpO;
  int completed = 0;
  int failed = 0;
  /// More than half of the attempted trials failed.
  bool flagged = false;
  /// Lower medians over completed trials; NaN when none completed.
  double median_rotation_error = 0.0;
  double median_position_error = 0.0;
  double median_interior_rank1_ratio = 0.0;
};

struct DistanceStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct CampaignResult {
  /// Ordered by (trial, sigma, K, method), in spec order.
  std::vector<TrialRecord> records;
  /// Ordered by (sigma, K, method), in spec order.
  std::vector<CellSummary> cells;
  DistanceStats distance;
  int trials_completed = 0;
  int trials_requested = 0;
  bool interrupted = false;

  const CellSummary* find(double sigma, int k, Method method) const;
};

/// Seed of trial `index`; the trial can be replayed alone with run_trial.
std::uint64_t trial_seed(std::uint64_t campaign_seed, int index);

/// All (sigma, K, method) records for one trial.
std::vector<TrialRecord> run_trial(const CampaignSpec& spec, const TrajectoryConfig& cfg, int index);

struct CampaignControl {
  /// Checked between trials; set to stop early with partial results.
  const std::atomic<bool>* cancel = nullptr;
  /// Called from worker threads, serialised, after each finished trial.
  std::function<void(int completed, int total)> progress;
};

CampaignResult run_campaign(const CampaignSpec& spec, const TrajectoryConfig& cfg,
                            const CampaignControl& control = {});

/// Recomputes cells and distance statistics from records.
void aggregate(CampaignResult& result, const CampaignSpec& spec);

/// Element (n - 1) / 2 of the sorted values. NaN for an empty input.
double lower_median(std::vector<double> values);

/// "insufficient measurements" -> "insufficient_measurements".
std::string status_token(ErrorCode code);

}  // namespace doaloc
