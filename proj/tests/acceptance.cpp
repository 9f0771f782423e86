// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "oracles.hpp"

#include "doaloc/error.hpp"
#include "doaloc/estimation.hpp"
#include "doaloc/frames.hpp"
#include "doaloc/linear_system.hpp"
#include "doaloc/procrustes.hpp"
#include "doaloc/rng.hpp"
#include "doaloc/sdp_relaxation.hpp"
#include "doaloc/sim_harness.hpp"
#include "doaloc_cli/io.hpp"

using namespace doaloc;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("unexpected exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.empty() ? std::nan("") : v[(v.size() - 1) / 2];
}

Mat3 rotation_of(const UnknownVector& psi) {
  Mat3 r;
  for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = psi(i);
  return r;
}

Outcome noiseless_recovery() {
  oracle::Sampler s(1001);
  const auto t0 = Clock::now();
  double ls_rot = 0, ls_pos = 0, sdp_rot = 0, sdp_pos = 0;
  for (int n = 0; n < 100; ++n) {
    const auto sc = oracle::generic_scenario(s, 6);
    const UnknownVector psi = solve_noiseless(assemble(sc.ms, default_scale(sc.ms)));
    const Mat3 r_ls = rotation_of(psi);
    ls_rot = std::max({ls_rot, oracle::rotation_angle(sc.r, nearest_rotation(r_ls).matrix()),
                       (r_ls - sc.r).norm()});
    ls_pos = std::max(ls_pos, (psi.tail<3>() - sc.t).norm());
    const EstimateReport rep = estimate_sdp_o(sc.ms);
    sdp_rot = std::max(sdp_rot, oracle::rotation_angle(sc.r, rep.r_bar.matrix()));
    sdp_pos = std::max(sdp_pos, (rep.t_bar - sc.t).norm());
  }
  const double elapsed = seconds_since(t0);
  const bool pass = ls_rot < 1e-8 && ls_pos < 1e-6 && sdp_rot < 1e-6 && sdp_pos < 1e-4 && elapsed < 5.0;
  return {pass, fmt("max LS rot %.2e rad, pos %.2e m; max SDP+O rot %.2e rad, pos %.2e m; %.2f s",
                    ls_rot, ls_pos, sdp_rot, sdp_pos, elapsed)};
}

Outcome fixture_probe() {
  const MeasurementSet ms =
      cli::read_measurements_csv(std::filesystem::path(DOALOC_TEST_DATA_DIR) / "table1.csv");
  Mat3 printed_r;
  printed_r << -0.627, -0.776, 0.072, -0.747, 0.625, 0.228, -0.222, 0.090, -0.971;
  const Vec3 printed_t(247.490, 110.382, 229.784);

  double angle_gap = 0;
  for (const auto& m : ms) {
    const auto want = oracle::doa(printed_r * m.pos_a_global + printed_t - m.pos_b_ins);
    angle_gap = std::max({angle_gap, std::abs(wrap_angle(want.azimuth - m.doa.azimuth)),
                          std::abs(want.elevation - m.doa.elevation)});
  }
  const EstimateReport rep = estimate_sdp_o(ms);
  const double rot_gap = oracle::rotation_angle(nearest_rotation(printed_r).matrix(), rep.r_bar.matrix());
  const double t_gap = (rep.t_bar - printed_t).norm();
  const Mat3& r = rep.r_bar.matrix();
  std::printf("    fixture R_bar = [[%.3f %.3f %.3f] [%.3f %.3f %.3f] [%.3f %.3f %.3f]]\n", r(0, 0), r(0, 1),
              r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2));
  std::printf("    fixture T_bar = [%.3f %.3f %.3f], objective %.3e\n", rep.t_bar.x(), rep.t_bar.y(),
              rep.t_bar.z(), rep.diagnostics.objective);
  return {true, fmt("pipeline completed; printed angles vs angles recomputed from printed transform differ by "
                    "up to %.3f rad; estimate differs from printed transform by %.3f rad and %.1f m",
                    angle_gap, rot_gap, t_gap)};
}

Outcome nongeneric_detection() {
  int planar_flagged = 0, generic_flagged = 0;
  for (int n = 0; n < 50; ++n) {
    const int k = 6 + n % 15;
    for (bool planar : {true, false}) {
      TrajectoryConfig cfg;
      cfg.k_max = k;
      cfg.planar_a = planar;
      cfg.seed = derive_seed(3003, {static_cast<std::uint64_t>(n), planar ? 1u : 0u});
      const Scenario sc = make_scenario(cfg, sample_truth(derive_seed(cfg.seed, {9})));
      bool flagged = rank_diagnostics(assemble(sc.noiseless, default_scale(sc.noiseless))).rank < 12;
      try {
        estimate_sdp_o(sc.noiseless);
      } catch (const NongenericTrajectoryError&) {
        flagged = true;
      }
      (planar ? planar_flagged : generic_flagged) += flagged ? 1 : 0;
    }
  }
  return {planar_flagged == 50 && generic_flagged == 0,
          fmt("planar flagged %d/50, generic flagged %d/50", planar_flagged, generic_flagged)};
}

Outcome constraint_faithfulness() {
  oracle::Sampler s(4004);
  const auto qs = build_constraints();
  double worst = 0;
  for (int n = 0; n < 1000; ++n) {
    UnknownVector psi;
    for (int i = 0; i < 12; ++i) psi(i) = s.uniform(-3, 3);
    const Mat13 x = lift(psi);
    for (const auto& c : qs) worst = std::max(worst, std::abs(frobenius_inner(c.q, x) - oracle::constraint(c.id, psi)));
  }
  return {worst < 1e-10, fmt("max deviation %.2e over 1000 random vectors", worst)};
}

CampaignSpec base_spec(std::uint64_t seed, std::vector<double> sigmas_deg, std::vector<int> k, int trials,
                       std::vector<Method> methods) {
  CampaignSpec spec;
  for (double d : sigmas_deg) spec.sigmas.push_back(d * kDeg);
  spec.k_values = std::move(k);
  spec.trials_per_cell = trials;
  spec.methods = std::move(methods);
  spec.seed = seed;
  return spec;
}

Outcome rank1_proximity() {
  const CampaignSpec spec = base_spec(5005, {0.1, 1, 3}, {6}, 100, {Method::kSdpO});
  const CampaignResult res = run_campaign(spec, TrajectoryConfig{});
  bool pass = true;
  std::string detail;
  for (double sigma : spec.sigmas) {
    std::vector<double> interior, final_ratio;
    for (const auto& r : res.records)
      if (r.sigma == sigma && r.status == "ok") {
        interior.push_back(r.interior_rank1_ratio);
        final_ratio.push_back(r.rank1_ratio);
      }
    std::sort(interior.begin(), interior.end());
    const double med = median(interior);
    pass = pass && interior.size() >= 50 && med < 0.1;
    detail += fmt("sigma %.1f deg: n=%zu median %.2e (p90 %.2e, max %.2e, after polish %.2e); ", sigma / kDeg,
                  interior.size(), med, interior.empty() ? 0.0 : interior[interior.size() * 9 / 10],
                  interior.empty() ? 0.0 : interior.back(), median(final_ratio));
  }
  return {pass, detail + "ratio of the interior-point iterate"};
}

Outcome k4_feasibility() {
  const CampaignSpec spec = base_spec(6006, {1}, {4}, 100, {Method::kSdpO});
  const CampaignResult res = run_campaign(spec, TrajectoryConfig{});
  int ok = 0;
  for (const auto& r : res.records) ok += r.status == "ok" ? 1 : 0;
  const auto* cell = res.find(spec.sigmas[0], 4, Method::kSdpO);
  return {ok >= 90, fmt("%d/100 valid SO(3) estimates, median rotation error %.3f rad", ok,
                        cell ? cell->median_rotation_error : std::nan(""))};
}

Outcome sdp_beats_ls() {
  CampaignSpec spec = base_spec(7007, {1, 3, 5}, {6}, 20, {Method::kSdpO, Method::kLsO});
  spec.truth_sampling = TruthSampling::kRepresentative;
  const CampaignResult res = run_campaign(spec, TrajectoryConfig{});
  bool pass = true;
  std::string detail;
  for (double sigma : spec.sigmas) {
    const double sdp = res.find(sigma, 6, Method::kSdpO)->median_rotation_error;
    const double ls = res.find(sigma, 6, Method::kLsO)->median_rotation_error;
    pass = pass && sdp <= 0.8 * ls;
    detail += fmt("sigma %.0f deg: SDP+O %.3f, LS+O %.3f, LS/SDP %.2fx; ", sigma / kDeg, sdp, ls, ls / sdp);
  }
  return {pass, detail + "reference ratio about 2x"};
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return syy == 0 ? 1.0 : sxy * sxy / (sxx * syy);
}

double campaign_seconds = -1;

Outcome trend_reproduction() {
  const CampaignSpec spec =
      base_spec(8008, {0.1, 1, 3, 5}, {4, 6, 8, 12, 16}, 100, {Method::kSdpO, Method::kLsO});
  const auto t0 = Clock::now();
  const CampaignResult res = run_campaign(spec, TrajectoryConfig{});
  campaign_seconds = seconds_since(t0);

  auto med = [&](double sigma, int k) { return res.find(sigma, k, Method::kSdpO)->median_rotation_error; };
  std::printf("    median SDP+O rotation error [rad] (rows sigma, columns K 4 6 8 12 16)\n");
  bool k_trend = true, sigma_trend = true, linear = true;
  for (double sigma : spec.sigmas) {
    std::printf("      %4.1f deg:", sigma / kDeg);
    int inversions = 0;
    for (std::size_t i = 0; i < spec.k_values.size(); ++i) {
      std::printf(" %.4f", med(sigma, spec.k_values[i]));
      if (i > 0 && med(sigma, spec.k_values[i]) > med(sigma, spec.k_values[i - 1])) ++inversions;
    }
    std::printf("  (%d K inversions)\n", inversions);
    k_trend = k_trend && inversions <= 1;
  }
  std::string r2_detail;
  for (int k : spec.k_values) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < spec.sigmas.size(); ++i) {
      x.push_back(spec.sigmas[i] / kDeg);
      y.push_back(med(spec.sigmas[i], k));
      if (i > 0 && y[i] < y[i - 1]) sigma_trend = false;
    }
    const double r2 = r_squared(x, y);
    linear = linear && r2 > 0.9;
    r2_detail += fmt(" K=%d %.3f", k, r2);
  }
  int flagged = 0;
  for (const auto& c : res.cells) flagged += (c.flagged && c.method == Method::kSdpO) ? 1 : 0;
  return {k_trend && sigma_trend && linear,
          fmt("non-increasing in K: %s; non-decreasing in sigma: %s; R^2 of median vs sigma:%s (%s); "
              "flagged SDP+O cells %d; mean inter-agent distance %.0f m; %.1f s",
              k_trend ? "yes" : "no", sigma_trend ? "yes" : "no", r2_detail.c_str(),
              linear ? "all > 0.9" : "not all > 0.9", flagged, res.distance.mean, campaign_seconds)};
}

Outcome property_suites() {
  oracle::Sampler s(9009);
  Rng rng(9009);
  int fail_proc = 0, fail_frames = 0;
  for (int n = 0; n < 1000; ++n) {
    const Mat3 m = s.matrix();
    const Mat3 p = nearest_rotation(m).matrix();
    const bool valid = (p * p.transpose() - Mat3::Identity()).norm() < 1e-12 && std::abs(p.determinant() - 1) < 1e-12;
    const Mat3 horn = oracle::horn_nearest_rotation(m);
    const bool optimal = (p - m).norm() <= (horn - m).norm() + 1e-9;
    const Mat3 q = s.rotation();
    const bool fixed_point = (nearest_rotation(q).matrix() - q).norm() < 1e-12;
    const Mat3 g = s.rotation(), h = s.rotation();
    const bool equivariant = (nearest_rotation(g * m * h).matrix() - g * p * h).norm() < 1e-9;
    const bool scale_free = (nearest_rotation(3.7 * m).matrix() - p).norm() < 1e-12;
    fail_proc += (valid && optimal && fixed_point && equivariant && scale_free) ? 0 : 1;

    const Rotation3 a = random_rotation(rng), b = random_rotation(rng), c = random_rotation(rng);
    const double ab = geodesic_distance(a, b);
    const bool metric = std::abs(ab - geodesic_distance(b, a)) < 1e-12 && geodesic_distance(a, a) < 1e-7 &&
                        ab <= geodesic_distance(a, c) + geodesic_distance(c, b) + 1e-12 && ab >= 0 &&
                        ab <= std::numbers::pi + 1e-12;
    const bool invariant = std::abs(geodesic_distance(c * a, c * b) - ab) < 1e-9 &&
                           std::abs(geodesic_distance(a * c, b * c) - ab) < 1e-9;
    const bool matches_oracle = std::abs(ab - oracle::rotation_angle(a.matrix(), b.matrix())) < 1e-9;
    const Vec3 axis = s.vec(-1, 1);
    const double angle = s.uniform(0, std::numbers::pi - 1e-6);
    const bool axis_angle = (Rotation3::from_axis_angle(axis, angle).matrix() - oracle::rodrigues(axis, angle)).norm() < 1e-12 &&
                            std::abs(geodesic_distance(Rotation3(), Rotation3::from_axis_angle(axis, angle)) - angle) < 1e-9;
    const Vec3 d = s.vec(-1000, 1000);
    const DoaAngles got = angles_from_vector(d), want = oracle::doa(d);
    const bool doa_ok = std::abs(got.azimuth - want.azimuth) < 1e-12 && std::abs(got.elevation - want.elevation) < 1e-12 &&
                        (doa_unit_vector(got) - d.normalized()).norm() < 1e-12;
    const FrameTransform tf{a, s.vec(-500, 500)};
    const Vec3 pt = s.vec(-1000, 1000);
    const bool inverse = (apply_transform(invert_transform(tf), apply_transform(tf, pt)) - pt).norm() < 1e-9;
    fail_frames += (metric && invariant && matches_oracle && axis_angle && doa_ok && inverse) ? 0 : 1;
  }
  return {fail_proc == 0 && fail_frames == 0,
          fmt("procrustes failures %d/1000, frames failures %d/1000", fail_proc, fail_frames)};
}

Outcome refinement_checks() {
  oracle::Sampler s(10010);
  double worst_rel = 0;
  for (int n = 0; n < 100; ++n) {
    const auto sc = oracle::generic_scenario(s, 8);
    const MeasurementSet ms = add_noise(sc.ms, NoiseSpec{2 * kDeg, static_cast<std::uint64_t>(n)});
    const FrameTransform base{Rotation3(sc.r), sc.t};
    const BearingObjective f(ms, base, 100.0, s.uniform(0.5, 2), s.uniform(0.5, 2));
    Vec6 x;
    for (int i = 0; i < 3; ++i) x(i) = s.uniform(-0.1, 0.1);
    for (int i = 3; i < 6; ++i) x(i) = s.uniform(-1, 1);
    Vec6 g;
    f.value_and_gradient(x, g);
    Vec6 fd;
    for (int i = 0; i < 6; ++i) {
      const double h = 1e-6;
      Vec6 xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      fd(i) = (f.value(xp) - f.value(xm)) / (2 * h);
    }
    worst_rel = std::max(worst_rel, (g - fd).norm() / std::max(g.norm(), 1e-12));
  }

  TrajectoryConfig cfg;
  int increases = 0, decreases = 0, attempted = 0;
  double worst_increase = 0;
  for (int n = 0; n < 100; ++n) {
    cfg.seed = derive_seed(10010, {static_cast<std::uint64_t>(n)});
    const Scenario sc = make_scenario(cfg, sample_truth(derive_seed(cfg.seed, {1})));
    const MeasurementSet ms = add_noise(sc.noiseless.prefix(8), NoiseSpec{2 * kDeg, cfg.seed});
    EstimateReport init;
    try {
      init = estimate_sdp_o(ms);
    } catch (const Error&) {
      continue;
    }
    ++attempted;
    const EstimateReport refined = refine_mle(ms, init);
    const double c0 = BearingObjective(ms, {init.r_bar, init.t_bar}, 1.0).value(Vec6::Zero());
    const double c1 = BearingObjective(ms, {refined.r_bar, refined.t_bar}, 1.0).value(Vec6::Zero());
    if (c1 > c0) {
      ++increases;
      worst_increase = std::max(worst_increase, c1 - c0);
    }
    if (c1 < c0) ++decreases;
  }
  return {worst_rel < 1e-5 && increases == 0 && attempted >= 90,
          fmt("max relative gradient error %.2e over 100 points; refinement increased cost in %d/%d trials "
              "(worst %.1e), decreased in %d",
              worst_rel, increases, attempted, worst_increase, decreases)};
}

Outcome performance() {
  oracle::Sampler s(11011);
  double worst = 0;
  for (int n = 0; n < 20; ++n) {
    const auto sc = oracle::generic_scenario(s, 6);
    const MeasurementSet ms = add_noise(sc.ms, NoiseSpec{3 * kDeg, static_cast<std::uint64_t>(n)});
    const SdpProblem problem = build_problem(assemble(ms, default_scale(ms)));
    const auto t0 = Clock::now();
    solve_relaxed(problem);
    worst = std::max(worst, seconds_since(t0));
  }
  const bool campaign_ok = campaign_seconds >= 0 && campaign_seconds < 600;
  return {worst < 1.0 && campaign_ok,
          fmt("slowest of 20 SDP solves %.1f ms; full trend campaign %.1f s", worst * 1e3, campaign_seconds)};
}

}  // namespace

int main() {
  report(1, "noiseless exact recovery", noiseless_recovery);
  report(2, "fixture consistency probe", fixture_probe);
  report(3, "nongeneric detection", nongeneric_detection);
  report(4, "constraint faithfulness", constraint_faithfulness);
  report(5, "rank-1 proximity", rank1_proximity);
  report(6, "K=4 feasibility", k4_feasibility);
  report(7, "SDP+O beats LS+O", sdp_beats_ls);
  report(8, "trend reproduction", trend_reproduction);
  report(9, "procrustes and frames properties", property_suites);
  report(10, "MLE refinement", refinement_checks);
  report(11, "performance", performance);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
