#include "doaloc_cli/config.hpp"

#include <numbers>
#include <set>

#include "doaloc/error.hpp"
#include "doaloc/rng.hpp"
#include "doaloc_cli/io.hpp"

namespace doaloc::cli {

using nlohmann::json;

namespace {

constexpr double kRad = std::numbers::pi / 180.0;

constexpr std::uint64_t kScenarioTrajectory = 11;
constexpr std::uint64_t kScenarioTruth = 12;
constexpr std::uint64_t kScenarioNoise = 13;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::kConfig, what); }

/// Object reader that records consumed keys so leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(where() + " must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      config_error(where(key) + " has the wrong type");
    }
  }

  void read_vec3(const char* key, Vec3& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = vec3_from_json(j_.at(key));
    } catch (const std::exception&) {
      config_error(where(key) + " must be a list of 3 numbers");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) config_error("unknown " + where(key.c_str()));
    }
  }

  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? "config" : path_;
    if (key) p += path_.empty() ? std::string(" key '") + key + "'" : "." + std::string(key);
    return p;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_trajectory(const json& j, TrajectoryConfig& t) {
  Section s(j, "trajectory");
  s.read("speed_min_mps", t.speed_min);
  s.read("speed_max_mps", t.speed_max);
  s.read("measurement_interval_s", t.measurement_interval);
  s.read("max_turn_rate_rad_per_s", t.max_turn_rate);
  s.read("max_climb_rate_mps", t.max_climb_rate);
  s.read_vec3("initial_a_m", t.initial_a);
  s.read_vec3("initial_b_m", t.initial_b);
  s.read("k_max", t.k_max);
  s.read("planar_a", t.planar_a);
  s.finish();
}

void read_truth(const json& j, ExperimentConfig& c) {
  Section s(j, "truth");
  std::string sampling = "random";
  s.read("sampling", sampling);
  s.read("translation_box_m", c.translation_box);
  Mat3 r = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  const json* rot = s.child("rotation");
  s.read_vec3("translation_m", t);
  s.finish();
  if (sampling == "random") {
    c.truth_source = TruthSource::kRandom;
  } else if (sampling == "representative") {
    c.truth_source = TruthSource::kRepresentative;
  } else if (sampling == "fixed") {
    c.truth_source = TruthSource::kFixed;
    if (!rot) config_error("truth.rotation is required when truth.sampling is 'fixed'");
    try {
      r = mat3_from_json(*rot);
      c.fixed_truth = FrameTransform{Rotation3(r), t};
    } catch (const std::exception& e) {
      config_error(std::string("truth.rotation: ") + e.what());
    }
  } else {
    config_error("truth.sampling must be random, representative or fixed");
  }
  if (!(c.translation_box > 0.0)) config_error("truth.translation_box_m must be positive");
}

void read_campaign(const json& j, CampaignSpec& spec) {
  Section s(j, "campaign");
  std::vector<double> sigmas_deg;
  std::vector<std::string> methods;
  s.read("sigmas_deg", sigmas_deg);
  s.read("k_values", spec.k_values);
  s.read("trials_per_cell", spec.trials_per_cell);
  s.read("methods", methods);
  s.read("threads", spec.threads);
  s.finish();
  if (!sigmas_deg.empty()) {
    spec.sigmas.clear();
    for (double d : sigmas_deg) spec.sigmas.push_back(d * kRad);
  }
  if (!methods.empty()) {
    spec.methods.clear();
    for (const auto& m : methods) spec.methods.push_back(method_from_string(m));
  }
}

void read_solver(const json& j, EstimatorOptions& e) {
  Section s(j, "solver");
  SolverOptions& o = e.solver;
  s.read("feasibility_tol", o.feasibility_tol);
  s.read("gap_tol", o.gap_tol);
  s.read("max_iterations", o.max_iterations);
  double scale = 0.0;
  s.read("translation_scale_m", scale);
  if (scale != 0.0) o.scale = scale;
  s.read("polish", o.polish);
  s.read("rank1_threshold", o.rank1_threshold);
  s.read("rank_tol", e.rank_tol);
  s.finish();
  if (!(o.feasibility_tol > 0.0) || !(o.gap_tol > 0.0) || o.max_iterations < 1 || !(e.rank_tol > 0.0)) {
    config_error("solver tolerances and max_iterations must be positive");
  }
}

void read_refine(const json& j, RefineOptions& r) {
  Section s(j, "refine");
  s.read("max_iterations", r.max_iterations);
  s.read("gradient_tol", r.gradient_tol);
  s.read("azimuth_weight", r.azimuth_weight);
  s.read("elevation_weight", r.elevation_weight);
  s.finish();
  if (r.max_iterations < 0 || !(r.azimuth_weight >= 0.0) || !(r.elevation_weight >= 0.0)) {
    config_error("refine weights and max_iterations must be non-negative");
  }
}

}  // namespace

OutputFormat format_from_string(const std::string& s) {
  if (s == "json") return OutputFormat::kJson;
  if (s == "csv") return OutputFormat::kCsv;
  config_error("format must be csv or json, got '" + s + "'");
}

NoiseSpec ExperimentConfig::noise() const {
  return NoiseSpec{sigma, derive_seed(seed, {kScenarioNoise})};
}

CampaignSpec ExperimentConfig::campaign_spec() const {
  if (truth_source == TruthSource::kFixed) {
    config_error("campaigns support truth.sampling 'random' or 'representative'");
  }
  CampaignSpec spec = campaign;
  spec.seed = seed;
  spec.truth_sampling =
      truth_source == TruthSource::kRepresentative ? TruthSampling::kRepresentative : TruthSampling::kRandom;
  spec.translation_box = translation_box;
  spec.estimator = estimator;
  return spec;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  c.campaign.sigmas = {0.1 * kRad, 1.0 * kRad, 3.0 * kRad, 5.0 * kRad};
  c.campaign.k_values = {4, 6, 8, 12, 16};
  c.campaign.methods = {Method::kSdpO, Method::kLsO};

  Section s(j, "");
  s.read("seed", c.seed);
  std::string method = to_string(c.method);
  s.read("method", method);
  c.method = method_from_string(method);
  std::string format = "json";
  s.read("format", format);
  c.format = format_from_string(format);
  std::string out_dir = c.out_dir.string();
  s.read("out_dir", out_dir);
  c.out_dir = out_dir;

  if (const json* t = s.child("trajectory")) read_trajectory(*t, c.trajectory);
  if (const json* t = s.child("truth")) read_truth(*t, c);
  if (const json* n = s.child("noise")) {
    Section ns(*n, "noise");
    double sigma_deg = 0.0;
    ns.read("sigma_deg", sigma_deg);
    ns.finish();
    if (!(sigma_deg >= 0.0)) config_error("noise.sigma_deg must be >= 0");
    c.sigma = sigma_deg * kRad;
  }
  if (const json* t = s.child("campaign")) read_campaign(*t, c.campaign);
  if (const json* t = s.child("solver")) read_solver(*t, c.estimator);
  if (const json* t = s.child("refine")) read_refine(*t, c.estimator.refine);
  s.finish();

  c.trajectory.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return parse_config(j);
}

Scenario build_scenario(const ExperimentConfig& cfg) {
  if (cfg.truth_source == TruthSource::kRepresentative) return representative_scenario();
  TrajectoryConfig t = cfg.trajectory;
  t.seed = derive_seed(cfg.seed, {kScenarioTrajectory});
  const FrameTransform truth = cfg.fixed_truth
                                   ? *cfg.fixed_truth
                                   : sample_truth(derive_seed(cfg.seed, {kScenarioTruth}), cfg.translation_box);
  return make_scenario(t, truth);
}

}  // namespace doaloc::cli
