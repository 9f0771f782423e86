#include "doaloc/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "doaloc/error.hpp"
#include "doaloc/rng.hpp"

namespace doaloc {

namespace {

bool angles_valid(const DoaAngles& a) {
  return std::isfinite(a.azimuth) && std::isfinite(a.elevation) &&
         a.azimuth > -std::numbers::pi && a.azimuth <= std::numbers::pi &&
         std::abs(a.elevation) <= std::numbers::pi / 2;
}

constexpr std::uint64_t kNoiseStream = 0x6E6F697365ULL;

}  // namespace

MeasurementSet::MeasurementSet(std::vector<DoaMeasurement> items) : items_(std::move(items)) {
  if (items_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "measurement set is empty");
  }
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& m = items_[i];
    if (m.k < 1) throw Error(ErrorCode::kInvalidArgument, "time index must be >= 1");
    if (i > 0 && m.k <= items_[i - 1].k) {
      throw Error(ErrorCode::kInvalidArgument, "time indices must be strictly increasing");
    }
    if (!m.pos_a_global.allFinite() || !m.pos_b_ins.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite position");
    }
    if (!angles_valid(m.doa)) {
      throw Error(ErrorCode::kInvalidArgument, "DOA angles out of range");
    }
  }
}

MeasurementSet MeasurementSet::prefix(std::size_t count) const {
  count = std::clamp<std::size_t>(count, 1, items_.size());
  return MeasurementSet(std::vector<DoaMeasurement>(items_.begin(), items_.begin() + count));
}

std::pair<double, double> draw_noise(const NoiseSpec& spec, int k) {
  Rng rng(derive_seed(spec.seed, {kNoiseStream, static_cast<std::uint64_t>(k)}));
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  return {spec.sigma * z1, spec.sigma * z2};
}

DoaMeasurement synthesize_measurement(const FrameTransform& transform, const Vec3& pos_a_global,
                                      const Vec3& pos_b_ins, int k) {
  DoaMeasurement m;
  m.k = k;
  m.pos_a_global = pos_a_global;
  m.pos_b_ins = pos_b_ins;
  m.doa = angles_from_vector(apply_transform(transform, pos_a_global) - pos_b_ins);
  return m;
}

MeasurementSet synthesize_measurements(const FrameTransform& transform,
                                       std::span<const Vec3> a_global,
                                       std::span<const Vec3> b_global) {
  if (a_global.size() != b_global.size()) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory lengths differ");
  }
  std::vector<DoaMeasurement> out;
  out.reserve(a_global.size());
  for (std::size_t i = 0; i < a_global.size(); ++i) {
    out.push_back(synthesize_measurement(transform, a_global[i],
                                         apply_transform(transform, b_global[i]),
                                         static_cast<int>(i) + 1));
  }
  return MeasurementSet(std::move(out));
}

DoaMeasurement add_noise(const DoaMeasurement& m, const NoiseSpec& spec) {
  if (spec.sigma < 0.0 || !std::isfinite(spec.sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "noise sigma must be >= 0");
  }
  if (spec.sigma == 0.0) return m;
  const auto [za, ze] = draw_noise(spec, m.k);
  DoaMeasurement out = m;
  out.doa.azimuth = wrap_angle(m.doa.azimuth + za);
  out.doa.elevation = std::clamp(m.doa.elevation + ze, -std::numbers::pi / 2, std::numbers::pi / 2);
  return out;
}

MeasurementSet add_noise(const MeasurementSet& ms, const NoiseSpec& spec) {
  std::vector<DoaMeasurement> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.push_back(add_noise(m, spec));
  return MeasurementSet(std::move(out));
}

}  // namespace doaloc
