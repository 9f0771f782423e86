#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "doaloc/frames.hpp"

namespace doaloc {

/// One broadcast instant: Agent A's global position, Agent B's INS position
/// and the DOA measured by B towards A in B's INS-aligned frame.
struct DoaMeasurement {
  int k = 1;
  Vec3 pos_a_global = Vec3::Zero();
  Vec3 pos_b_ins = Vec3::Zero();
  DoaAngles doa;
};

/// Ordered, non-empty sequence of measurements with strictly increasing k.
class MeasurementSet {
 public:
  /// Throws Error(kInvalidArgument) when empty, unordered or non-finite.
  explicit MeasurementSet(std::vector<DoaMeasurement> items);

  std::size_t size() const { return items_.size(); }
  const DoaMeasurement& operator[](std::size_t i) const { return items_[i]; }
  std::span<const DoaMeasurement> items() const { return items_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  /// First `count` measurements (count clamped to [1, size()]).
  MeasurementSet prefix(std::size_t count) const;

 private:
  std::vector<DoaMeasurement> items_;
};

/// Gaussian angle noise with equal standard deviation on azimuth and elevation.
struct NoiseSpec {
  double sigma = 0.0;  // radians
  std::uint64_t seed = 0;
};

/// Raw draws (zeta_azimuth, zeta_elevation) for measurement index k.
/// Depends only on (spec.seed, k), scaled by spec.sigma: the same seed at a
/// different sigma yields proportional draws.
std::pair<double, double> draw_noise(const NoiseSpec& spec, int k);

DoaMeasurement synthesize_measurement(const FrameTransform& transform, const Vec3& pos_a_global,
                                      const Vec3& pos_b_ins, int k = 1);

/// Noiseless measurements for paired trajectories given in the global frame.
/// B's INS positions are obtained through `transform`.
MeasurementSet synthesize_measurements(const FrameTransform& transform,
                                       std::span<const Vec3> a_global,
                                       std::span<const Vec3> b_global);

/// Perturbs azimuth and elevation with draw_noise(spec, m.k). Azimuth is
/// re-wrapped into (-pi, pi]; elevation is clamped to [-pi/2, pi/2].
DoaMeasurement add_noise(const DoaMeasurement& m, const NoiseSpec& spec);
MeasurementSet add_noise(const MeasurementSet& ms, const NoiseSpec& spec);

}  // namespace doaloc
