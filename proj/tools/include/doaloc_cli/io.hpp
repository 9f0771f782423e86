#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "doaloc/estimation.hpp"
#include "doaloc/measurement.hpp"
#include "doaloc/sim_harness.hpp"

namespace doaloc::cli {

/// Required measurement columns, in order.
inline const std::vector<std::string> kMeasurementColumns{
    "k", "u_A", "v_A", "w_A", "x_B", "y_B", "z_B", "theta_rad", "phi_rad"};

/// Optional trailing columns holding the applied noise draws.
inline const std::vector<std::string> kNoiseColumns{"zeta_theta_rad", "zeta_phi_rad"};

/// 17 significant digits; parses back to the same double.
std::string format_double(double v);

/// Parses a measurement CSV. Blank lines and lines starting with '#' are
/// skipped. Throws Error(kParse) whose message starts with "line N:".
MeasurementSet parse_measurements_csv(std::istream& in);
MeasurementSet read_measurements_csv(const std::filesystem::path& path);

/// Per-measurement (zeta_theta, zeta_phi) written as extra columns.
using NoiseColumns = std::vector<std::pair<double, double>>;

void write_measurements_csv(std::ostream& out, const MeasurementSet& ms,
                            const std::optional<NoiseColumns>& noise = std::nullopt);
void write_measurements_csv(const std::filesystem::path& path, const MeasurementSet& ms,
                            const std::optional<NoiseColumns>& noise = std::nullopt);

nlohmann::json to_json(const Vec3& v);
nlohmann::json to_json(const Mat3& m);
Vec3 vec3_from_json(const nlohmann::json& j);
Mat3 mat3_from_json(const nlohmann::json& j);

nlohmann::json truth_to_json(const Scenario& s);
FrameTransform truth_from_json(const nlohmann::json& j);

nlohmann::json estimate_to_json(const EstimateReport& r);

/// Writes text atomically (temporary file then rename).
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

/// Long-format trial table.
std::string trials_csv(const CampaignResult& r);
/// Median rotation error against K, one column per sigma, per method.
std::string fig2_table(const CampaignResult& r, const CampaignSpec& spec);
/// Median position error against K, one column per sigma, per method.
std::string fig3_table(const CampaignResult& r, const CampaignSpec& spec);
/// Median rotation error against sigma, one column per method, per K. Adds
/// an LS_O / SDP_O ratio column when both methods are present.
std::string fig4_table(const CampaignResult& r, const CampaignSpec& spec);
nlohmann::json campaign_to_json(const CampaignResult& r);

}  // namespace doaloc::cli
