#include "doaloc_cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <optional>
#include <ostream>

#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "doaloc/estimation.hpp"
#include "doaloc/linear_system.hpp"
#include "doaloc/sdp_relaxation.hpp"
#include "doaloc/sim_harness.hpp"
#include "doaloc_cli/config.hpp"
#include "doaloc_cli/io.hpp"

namespace doaloc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> methods;
  std::string out_dir;
  std::string format;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? parse_config(json::object()) : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.methods.empty()) {
    c.method = method_from_string(o.methods.front());
    c.campaign.methods.clear();
    for (const auto& m : o.methods) c.campaign.methods.push_back(method_from_string(m));
  }
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (!o.format.empty()) c.format = format_from_string(o.format);
  return c;
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("doaloc", sink);
  log->set_pattern("[%l] %v");
  const char* level = std::getenv("DOA_LOG_LEVEL");
  log->set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
  return log;
}

std::string estimate_csv(const EstimateReport& r) {
  std::string head = "method";
  std::string row = to_string(r.method);
  const Mat3& m = r.r_bar.matrix();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      head += fmt::format(",r{}{}", i + 1, j + 1);
      row += ',' + format_double(m(i, j));
    }
  }
  for (int i = 0; i < 3; ++i) {
    head += fmt::format(",t{}_m", i + 1);
    row += ',' + format_double(r.t_bar(i));
  }
  const Diagnostics& d = r.diagnostics;
  head += ",objective,rank1_ratio,interior_rank1_ratio,rank,condition_number";
  row += fmt::format(",{},{},{},{},{}", format_double(d.objective), format_double(d.rank1_ratio),
                     format_double(d.interior_rank1_ratio), d.rank, format_double(d.condition_number));
  if (r.rotation_error) {
    head += ",rotation_error_rad,position_error_m";
    row += ',' + format_double(*r.rotation_error) + ',' + format_double(*r.position_error);
  }
  return head + '\n' + row + '\n';
}

int cmd_solve(const Overrides& o, const std::string& input, const std::string& truth_file,
              spdlog::logger& log, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o);
  const MeasurementSet ms = read_measurements_csv(input);
  log.info("solve: {} measurements, method {}", ms.size(), to_string(cfg.method));

  EstimateReport report = estimate(cfg.method, ms, cfg.estimator);
  if (!truth_file.empty()) {
    report = score(std::move(report), ms, truth_from_json(read_json(truth_file)));
  }
  for (int row : report.diagnostics.weak_rows) log.warn("weak elevation row {}", row);
  if (report.diagnostics.non_unique_rotation) log.warn("nearest rotation is not unique");

  const fs::path path =
      cfg.out_dir / (cfg.format == OutputFormat::kCsv ? "estimate.csv" : "estimate.json");
  write_text(path, cfg.format == OutputFormat::kCsv ? estimate_csv(report)
                                                    : estimate_to_json(report).dump(2) + '\n');
  out << "R =\n" << report.r_bar.matrix() << "\nT = " << report.t_bar.transpose() << '\n';
  if (report.rotation_error) {
    out << fmt::format("rotation error {:.6g} rad, mean position error {:.6g} m\n",
                       *report.rotation_error, *report.position_error);
  }
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_simulate(const Overrides& o, spdlog::logger& log, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o);
  const Scenario scenario = build_scenario(cfg);
  const NoiseSpec noise = cfg.noise();
  const MeasurementSet noisy = add_noise(scenario.noiseless, noise);
  NoiseColumns draws;
  for (const auto& m : scenario.noiseless) draws.push_back(draw_noise(noise, m.k));

  const fs::path meas = cfg.out_dir / "measurements.csv";
  const fs::path truth = cfg.out_dir / "truth.json";
  write_measurements_csv(meas, noisy, draws);
  json t = truth_to_json(scenario);
  t["seed"] = cfg.seed;
  t["sigma_deg"] = cfg.sigma * 180.0 / std::numbers::pi;
  write_text(truth, t.dump(2) + '\n');
  log.info("simulate: K={}, mean inter-agent distance {:.1f} m", noisy.size(),
           mean_inter_agent_distance(scenario));
  out << "wrote " << meas.string() << " and " << truth.string() << '\n';
  return kExitOk;
}

int cmd_campaign(const Overrides& o, spdlog::logger& log, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o);
  const CampaignSpec spec = cfg.campaign_spec();
  spec.validate(cfg.trajectory);

  CampaignControl control;
  control.cancel = &interrupt_flag();
  const int step = std::max(1, spec.trials_per_cell / 10);
  control.progress = [&](int done, int total) {
    if (done % step == 0 || done == total) log.info("campaign: {}/{} trials", done, total);
  };
  const CampaignResult result = run_campaign(spec, cfg.trajectory, control);

  std::vector<fs::path> written;
  auto emit = [&](const char* name, const std::string& text) {
    written.push_back(cfg.out_dir / name);
    write_text(written.back(), text);
  };
  if (cfg.format == OutputFormat::kCsv) {
    emit("trials.csv", trials_csv(result));
    emit("fig2_rotation_vs_k.csv", fig2_table(result, spec));
    emit("fig3_position_vs_k.csv", fig3_table(result, spec));
    emit("fig4_rotation_vs_sigma.csv", fig4_table(result, spec));
    json summary = campaign_to_json(result);
    summary.erase("trials");
    emit("summary.json", summary.dump(2) + '\n');
  } else {
    emit("campaign.json", campaign_to_json(result).dump(2) + '\n');
  }

  for (const auto& c : result.cells) {
    if (c.flagged) {
      log.warn("cell sigma={:.3g} deg K={} {}: {} of {} trials failed", c.sigma * 180.0 / std::numbers::pi,
               c.k, to_string(c.method), c.failed, c.failed + c.completed);
    }
  }
  out << fmt::format("{} of {} trials completed{}; mean inter-agent distance {:.1f} m\n",
                     result.trials_completed, result.trials_requested,
                     result.interrupted ? " (interrupted, partial results)" : "", result.distance.mean);
  for (const auto& p : written) out << "wrote " << p.string() << '\n';
  return result.interrupted ? 130 : kExitOk;
}

int cmd_constraints_check(const Overrides& o, const std::string& input, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o);
  const json j = read_json(input);
  UnknownVector psi;
  UnknownVector projected;
  try {
    const auto& p = j.at("psi_hat");
    if (!p.is_array() || p.size() != 12) throw Error(ErrorCode::kParse, "psi_hat must have 12 entries");
    for (std::size_t i = 0; i < 12; ++i) psi(static_cast<int>(i)) = p[i].get<double>();
    projected = pack_unknowns(mat3_from_json(j.at("rotation")), vec3_from_json(j.at("translation_m")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, input + ": " + e.what());
  }
  const auto raw = constraint_residuals(psi);
  const auto proj = constraint_residuals(projected);
  if (cfg.format == OutputFormat::kCsv) {
    out << "constraint,psi_hat,projected\n";
    for (int i = 0; i < kConstraintCount; ++i) {
      out << 'C' << i + 1 << ',' << format_double(raw(i)) << ',' << format_double(proj(i)) << '\n';
    }
  } else {
    json rows = json::array();
    for (int i = 0; i < kConstraintCount; ++i) {
      rows.push_back({{"constraint", "C" + std::to_string(i + 1)}, {"psi_hat", raw(i)}, {"projected", proj(i)}});
    }
    out << json{{"residuals", rows},
                {"max_abs_psi_hat", raw.cwiseAbs().maxCoeff()},
                {"max_abs_projected", proj.cwiseAbs().maxCoeff()}}
               .dump(2)
        << '\n';
  }
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kInvalidArgument:
      return kExitParse;
    case ErrorCode::kNongenericTrajectory:
    case ErrorCode::kInsufficientMeasurements:
    case ErrorCode::kDegenerateDisplacement:
      return kExitNongeneric;
    case ErrorCode::kSolverFailed:
    case ErrorCode::kInfeasible:
    case ErrorCode::kDegenerateExtraction:
    case ErrorCode::kIllDefinedProjection:
      return kExitSolver;
    case ErrorCode::kConfig:
      return kExitConfig;
  }
  return kExitConfig;
}

std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relative localisation from direction-of-arrival measurements", "doaloc"};
  app.require_subcommand(1);

  Overrides o;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool with_method) {
    sub->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the config seed");
    if (with_method) {
      sub->add_option("--method", o.methods, "SDP_O, LS_O or SDP_O_REFINED (comma-separated for campaign)")
          ->delimiter(',');
    }
    sub->add_option("--out-dir", o.out_dir, "Output directory");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };

  std::string input;
  std::string truth_file;
  CLI::App* solve = app.add_subcommand("solve", "Estimate R and T from a measurement CSV");
  solve->add_option("measurements", input, "Measurement CSV")->required();
  solve->add_option("--truth", truth_file, "Ground-truth JSON for scoring")->check(CLI::ExistingFile);
  add_common(solve, true);

  CLI::App* simulate = app.add_subcommand("simulate", "Write a seeded scenario");
  add_common(simulate, false);

  CLI::App* campaign = app.add_subcommand("campaign", "Run a Monte Carlo campaign");
  add_common(campaign, true);

  std::string estimate_file;
  CLI::App* check = app.add_subcommand("constraints-check", "Print constraint residuals of an estimate");
  check->add_option("estimate", estimate_file, "Estimate JSON from solve")->required();
  add_common(check, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto log = make_logger(err);
  bool seed_given = false;
  for (auto* sub : {solve, simulate, campaign, check}) seed_given |= sub->count("--seed") > 0;
  if (seed_given) o.seed = seed;

  try {
    if (*solve) return cmd_solve(o, input, truth_file, *log, out);
    if (*simulate) return cmd_simulate(o, *log, out);
    if (*campaign) return cmd_campaign(o, *log, out);
    return cmd_constraints_check(o, estimate_file, out);
  } catch (const NongenericTrajectoryError& e) {
    log->error("{}", e.what());
    return kExitNongeneric;
  } catch (const Error& e) {
    log->error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    log->error("{}", e.what());
    return kExitConfig;
  }
}

}  // namespace doaloc::cli
