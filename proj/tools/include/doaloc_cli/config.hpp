#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "doaloc/estimation.hpp"
#include "doaloc/measurement.hpp"
#include "doaloc/sim_harness.hpp"

namespace doaloc::cli {

enum class OutputFormat { kJson, kCsv };

OutputFormat format_from_string(const std::string& s);

enum class TruthSource { kRandom, kRepresentative, kFixed };

/// Everything a subcommand may need. Units appear in the JSON key names.
///
/// {
///   "seed": 1, "method": "SDP_O", "format": "json", "out_dir": "out",
///   "trajectory": {"speed_min_mps", "speed_max_mps", "measurement_interval_s",
///                  "max_turn_rate_rad_per_s", "max_climb_rate_mps",
///                  "initial_a_m", "initial_b_m", "k_max", "planar_a"},
///   "truth": {"sampling": "random" | "representative" | "fixed",
///             "translation_box_m", "rotation", "translation_m"},
///   "noise": {"sigma_deg"},
///   "campaign": {"sigmas_deg", "k_values", "trials_per_cell", "methods", "threads"},
///   "solver": {"feasibility_tol", "gap_tol", "max_iterations", "translation_scale_m",
///              "polish", "rank1_threshold", "rank_tol"},
///   "refine": {"max_iterations", "gradient_tol", "azimuth_weight", "elevation_weight"}
/// }
///
/// Unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  Method method = Method::kSdpO;
  OutputFormat format = OutputFormat::kJson;
  std::filesystem::path out_dir = ".";

  TrajectoryConfig trajectory;
  TruthSource truth_source = TruthSource::kRandom;
  double translation_box = kDefaultTranslationBox;
  std::optional<FrameTransform> fixed_truth;
  double sigma = 0.0;  // radians

  CampaignSpec campaign;
  EstimatorOptions estimator;

  /// Noise stream for a single simulated scenario.
  NoiseSpec noise() const;
  /// Copies seed, truth sampling and estimator options into the campaign spec.
  CampaignSpec campaign_spec() const;
};

/// Throws Error(kConfig) on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Simulated scenario described by the config.
Scenario build_scenario(const ExperimentConfig& cfg);

}  // namespace doaloc::cli
