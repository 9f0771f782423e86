#include "doaloc/estimation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "doaloc/error.hpp"
#include "doaloc/procrustes.hpp"

namespace doaloc {

namespace {

Mat3 left_jacobian(const Vec3& omega) {
  const double angle = omega.norm();
  const Mat3 k = hat(omega);
  if (angle < 1e-6) {
    return Mat3::Identity() + 0.5 * k + (1.0 / 6.0) * k * k;
  }
  const double a2 = angle * angle;
  return Mat3::Identity() + (1.0 - std::cos(angle)) / a2 * k +
         (angle - std::sin(angle)) / (a2 * angle) * k * k;
}

double resolve_scale(const MeasurementSet& ms, const SolverOptions& opts) {
  if (opts.scale) {
    if (!(*opts.scale > 0.0)) throw Error(ErrorCode::kConfig, "translation scale must be positive");
    return *opts.scale;
  }
  return default_scale(ms);
}

EstimateReport finish(Method method, const MeasurementSet& ms, const UnknownVector& psi,
                      Diagnostics diag) {
  const RotationProjection proj = project_to_rotation(rotation_block(psi));
  EstimateReport out;
  out.method = method;
  out.psi_hat = psi;
  out.r_bar = proj.rotation;
  out.t_bar = translation_block(psi);
  out.reconstructed_b_global = reconstruct_b_global(ms, out.r_bar, out.t_bar);
  diag.non_unique_rotation = proj.non_unique;
  out.diagnostics = std::move(diag);
  return out;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::kSdpO: return "SDP_O";
    case Method::kLsO: return "LS_O";
    case Method::kSdpORefined: return "SDP_O_REFINED";
  }
  return "UNKNOWN";
}

Method method_from_string(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "SDP_O") return Method::kSdpO;
  if (u == "LS_O") return Method::kLsO;
  if (u == "SDP_O_REFINED") return Method::kSdpORefined;
  throw Error(ErrorCode::kConfig, "unknown method '" + s + "' (expected SDP_O, LS_O or SDP_O_REFINED)");
}

EstimateReport estimate_sdp_o(const MeasurementSet& ms, const EstimatorOptions& opts) {
  if (ms.size() < 4) {
    throw Error(ErrorCode::kInsufficientMeasurements,
                "insufficient measurements: SDP_O needs K >= 4, got " + std::to_string(ms.size()));
  }
  const double scale = resolve_scale(ms, opts.solver);
  const LinearSystem ls = assemble(ms, scale);
  RankDiagnostics rank = rank_diagnostics(ls, opts.rank_tol);
  if (rank.rank < std::min<int>(static_cast<int>(ls.rows()), 12)) {
    throw NongenericTrajectoryError(std::move(rank));
  }

  const SdpProblem problem = build_problem(ls);
  const SdpSolution sol = solve_relaxed(problem, opts.solver);
  const Rank1Estimate est = extract_rank1(sol);

  Diagnostics diag;
  diag.objective = sol.objective;
  diag.rank1_ratio = sol.rank1_ratio;
  diag.interior_rank1_ratio = sol.interior_rank1_ratio;
  diag.rank = rank.rank;
  diag.condition_number = rank.condition_number;
  diag.solver_iterations = sol.solver_iterations;
  diag.polished = sol.polished;
  diag.scale = scale;
  diag.weak_rows = ls.weak_rows;
  return finish(Method::kSdpO, ms, est.psi_hat, std::move(diag));
}

EstimateReport estimate_ls_o(const MeasurementSet& ms, const EstimatorOptions& opts) {
  if (ms.size() < 6) {
    throw Error(ErrorCode::kInsufficientMeasurements,
                "insufficient measurements: LS_O needs K >= 6, got " + std::to_string(ms.size()));
  }
  const double scale = resolve_scale(ms, opts.solver);
  const LinearSystem ls = assemble(ms, scale);
  const RankDiagnostics rank = rank_diagnostics(ls, opts.rank_tol);
  const UnknownVector psi = solve_noiseless(ls, opts.rank_tol);

  Diagnostics diag;
  diag.objective = (ls.a * psi.cwiseQuotient(
                                (UnknownVector() << Eigen::Matrix<double, 9, 1>::Ones(),
                                 Vec3::Constant(scale)).finished()) - ls.b).squaredNorm();
  diag.rank = rank.rank;
  diag.condition_number = rank.condition_number;
  diag.scale = scale;
  diag.weak_rows = ls.weak_rows;
  return finish(Method::kLsO, ms, psi, std::move(diag));
}

EstimateReport refine_mle(const MeasurementSet& ms, const EstimateReport& initial,
                          const EstimatorOptions& opts) {
  const RefineOptions& ro = opts.refine;
  const double unit = initial.diagnostics.scale > 0.0 ? initial.diagnostics.scale : default_scale(ms);
  const BearingObjective objective(ms, FrameTransform{initial.r_bar, initial.t_bar}, unit,
                                   ro.azimuth_weight, ro.elevation_weight);

  Vec6 x = Vec6::Zero();
  Vec6 g;
  objective.value_and_gradient(x, g);
  double f = objective.value(x);
  RefinementTrace trace;
  trace.cost.push_back(f);

  double step = 1.0;
  for (int iter = 0; iter < ro.max_iterations; ++iter) {
    if (g.norm() < ro.gradient_tol) {
      trace.converged = true;
      break;
    }
    const Vec6 dir = -g;
    const double slope = g.dot(dir);
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const Vec6 x_new = x + step * dir;
      const double f_new = objective.value(x_new);
      if (std::isfinite(f_new) && f_new <= f + ro.armijo * step * slope) {
        x = x_new;
        accepted = f_new < f;
        f = f_new;
        objective.value_and_gradient(x, g);
        break;
      }
    }
    if (!accepted) {
      // No representable decrease along the gradient: stationary to rounding.
      trace.converged = true;
      break;
    }
    trace.cost.push_back(f);
    trace.iterations = iter + 1;
    step = std::min(step * 2.0, 1e6);
  }

  EstimateReport out = initial;
  out.method = Method::kSdpORefined;
  const FrameTransform refined = objective.transform_at(x);
  out.r_bar = refined.rotation;
  out.t_bar = refined.translation;
  out.psi_hat = pack_unknowns(out.r_bar.matrix(), out.t_bar);
  out.reconstructed_b_global = reconstruct_b_global(ms, out.r_bar, out.t_bar);
  out.rotation_error.reset();
  out.position_error.reset();
  out.refinement = std::move(trace);
  return out;
}

EstimateReport estimate(Method method, const MeasurementSet& ms, const EstimatorOptions& opts) {
  switch (method) {
    case Method::kSdpO: return estimate_sdp_o(ms, opts);
    case Method::kLsO: return estimate_ls_o(ms, opts);
    case Method::kSdpORefined: return refine_mle(ms, estimate_sdp_o(ms, opts), opts);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown method");
}

double rotation_error(const Rotation3& r_est, const Rotation3& r_true) {
  return geodesic_distance(r_est, r_true);
}

std::vector<Vec3> reconstruct_b_global(const MeasurementSet& ms, const Rotation3& r, const Vec3& t) {
  std::vector<Vec3> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.push_back(r.matrix().transpose() * (m.pos_b_ins - t));
  return out;
}

double position_error(const MeasurementSet& ms, const Rotation3& r_est, const Vec3& t_est,
                      const FrameTransform& truth) {
  const FrameTransform to_global = invert_transform(truth);
  double sum = 0.0;
  for (const auto& m : ms) {
    const Vec3 estimated = r_est.matrix().transpose() * (m.pos_b_ins - t_est);
    sum += (estimated - apply_transform(to_global, m.pos_b_ins)).norm();
  }
  return sum / static_cast<double>(ms.size());
}

EstimateReport score(EstimateReport report, const MeasurementSet& ms, const FrameTransform& truth) {
  report.rotation_error = rotation_error(report.r_bar, truth.rotation);
  report.position_error = position_error(ms, report.r_bar, report.t_bar, truth);
  return report;
}

BearingObjective::BearingObjective(const MeasurementSet& ms, FrameTransform base,
                                   double translation_unit, double azimuth_weight,
                                   double elevation_weight)
    : ms_(ms),
      base_(std::move(base)),
      unit_(translation_unit),
      w_az_(azimuth_weight),
      w_el_(elevation_weight) {}

FrameTransform BearingObjective::transform_at(const Vec6& x) const {
  return FrameTransform{Rotation3::exp(x.head<3>()) * base_.rotation,
                        base_.translation + unit_ * x.tail<3>()};
}

double BearingObjective::value(const Vec6& x) const {
  const FrameTransform t = transform_at(x);
  double f = 0.0;
  for (const auto& m : ms_) {
    const Vec3 d = apply_transform(t, m.pos_a_global) - m.pos_b_ins;
    const double rho = std::hypot(d.x(), d.y());
    const double e_az = wrap_angle(m.doa.azimuth - std::atan2(d.y(), d.x()));
    const double e_el = m.doa.elevation - std::atan2(d.z(), rho);
    f += w_az_ * e_az * e_az + w_el_ * e_el * e_el;
  }
  return f;
}

double BearingObjective::value_and_gradient(const Vec6& x, Vec6& gradient) const {
  const FrameTransform t = transform_at(x);
  const Mat3 jl = left_jacobian(x.head<3>());
  double f = 0.0;
  gradient.setZero();
  for (const auto& m : ms_) {
    const Vec3 rotated = t.rotation * m.pos_a_global;
    const Vec3 d = rotated + t.translation - m.pos_b_ins;
    const double rho2 = d.x() * d.x() + d.y() * d.y();
    const double rho = std::sqrt(rho2);
    const double n2 = rho2 + d.z() * d.z();
    const double e_az = wrap_angle(m.doa.azimuth - std::atan2(d.y(), d.x()));
    const double e_el = m.doa.elevation - std::atan2(d.z(), rho);
    f += w_az_ * e_az * e_az + w_el_ * e_el * e_el;

    // d(residual^2)/dd = -2 e * d(angle)/dd.
    Vec3 df = Vec3::Zero();
    if (rho2 > 0.0) {
      const Vec3 daz(-d.y() / rho2, d.x() / rho2, 0.0);
      const Vec3 del(-d.x() * d.z() / (rho * n2), -d.y() * d.z() / (rho * n2), rho / n2);
      df = -2.0 * (w_az_ * e_az * daz + w_el_ * e_el * del);
    }
    // dd/domega = -hat(R p_A) J_l(omega);  dd/ddelta = unit * I.
    gradient.head<3>() += (-hat(rotated) * jl).transpose() * df;
    gradient.tail<3>() += unit_ * df;
  }
  return f;
}

}  // namespace doaloc
