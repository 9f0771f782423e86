#include "doaloc_cli/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "doaloc/error.hpp"

namespace doaloc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what);
}

double parse_number(std::string_view field, std::size_t line, const std::string& column) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    parse_error(line, "column '" + column + "': '" + std::string(field) + "' is not a number");
  }
  return v;
}

std::string fmt_or_empty(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

template <class Value>
std::string vs_k_table(const CampaignResult& r, const CampaignSpec& spec, Value value) {
  std::string out = "method,K";
  for (double s : spec.sigmas) out += ",sigma_" + format_double(s * kDeg) + "_deg";
  out += '\n';
  for (Method m : spec.methods) {
    for (int k : spec.k_values) {
      out += std::string(to_string(m)) + ',' + std::to_string(k);
      for (double s : spec.sigmas) {
        const CellSummary* c = r.find(s, k, m);
        out += ',' + (c ? fmt_or_empty(value(*c)) : std::string());
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v == 0.0 ? 0.0 : v); }

MeasurementSet parse_measurements_csv(std::istream& in) {
  const std::size_t required = kMeasurementColumns.size();
  std::vector<DoaMeasurement> items;
  std::string raw;
  std::size_t line = 0;
  std::size_t columns = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = split(text);
    if (columns == 0) {
      if (fields.size() != required && fields.size() != required + kNoiseColumns.size()) {
        parse_error(line, fmt::format("header must be {} optionally followed by {}",
                                      fmt::join(kMeasurementColumns, ","),
                                      fmt::join(kNoiseColumns, ",")));
      }
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string& want = i < required ? kMeasurementColumns[i] : kNoiseColumns[i - required];
        if (fields[i] != want) {
          parse_error(line, "header column " + std::to_string(i + 1) + " is '" +
                                std::string(fields[i]) + "', expected '" + want + "'");
        }
      }
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) {
      parse_error(line, "expected " + std::to_string(columns) + " fields, got " +
                            std::to_string(fields.size()));
    }
    double v[9];
    for (std::size_t i = 0; i < required; ++i) v[i] = parse_number(fields[i], line, kMeasurementColumns[i]);
    for (std::size_t i = required; i < columns; ++i) {
      parse_number(fields[i], line, kNoiseColumns[i - required]);
    }

    if (v[0] != std::floor(v[0]) || v[0] < 1 || v[0] > 1e9) parse_error(line, "k must be a positive integer");
    DoaMeasurement m;
    m.k = static_cast<int>(v[0]);
    if (!items.empty() && m.k <= items.back().k) parse_error(line, "k must be strictly increasing");
    m.pos_a_global = Vec3(v[1], v[2], v[3]);
    m.pos_b_ins = Vec3(v[4], v[5], v[6]);
    m.doa = DoaAngles{v[7], v[8]};
    try {
      MeasurementSet single({m});
    } catch (const Error& e) {
      parse_error(line, e.what());
    }
    items.push_back(m);
  }
  if (columns == 0) parse_error(line, "missing header");
  if (items.empty()) parse_error(line, "no measurements");
  return MeasurementSet(std::move(items));
}

MeasurementSet read_measurements_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open " + path.string());
  try {
    return parse_measurements_csv(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_measurements_csv(std::ostream& out, const MeasurementSet& ms,
                            const std::optional<NoiseColumns>& noise) {
  if (noise && noise->size() != ms.size()) {
    throw Error(ErrorCode::kInvalidArgument, "noise column length mismatch");
  }
  out << fmt::format("{}", fmt::join(kMeasurementColumns, ","));
  if (noise) out << ',' << fmt::format("{}", fmt::join(kNoiseColumns, ","));
  out << '\n';
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto& m = ms[i];
    out << m.k;
    for (int j = 0; j < 3; ++j) out << ',' << format_double(m.pos_a_global(j));
    for (int j = 0; j < 3; ++j) out << ',' << format_double(m.pos_b_ins(j));
    out << ',' << format_double(m.doa.azimuth) << ',' << format_double(m.doa.elevation);
    if (noise) out << ',' << format_double((*noise)[i].first) << ',' << format_double((*noise)[i].second);
    out << '\n';
  }
}

void write_measurements_csv(const fs::path& path, const MeasurementSet& ms,
                            const std::optional<NoiseColumns>& noise) {
  std::ostringstream os;
  write_measurements_csv(os, ms, noise);
  write_text(path, os.str());
}

json to_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

json to_json(const Mat3& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(json::array({m(i, 0), m(i, 1), m(i, 2)}));
  return rows;
}

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kParse, "expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Mat3 mat3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kParse, "expected a 3x3 matrix");
  Mat3 m;
  for (std::size_t i = 0; i < 3; ++i) m.row(static_cast<int>(i)) = vec3_from_json(j[i]).transpose();
  return m;
}

json truth_to_json(const Scenario& s) {
  json a = json::array();
  json b = json::array();
  for (const auto& p : s.a_global) a.push_back(to_json(p));
  for (const auto& p : s.b_global) b.push_back(to_json(p));
  return json{{"rotation", to_json(s.truth.rotation.matrix())},
              {"translation_m", to_json(s.truth.translation)},
              {"a_global_m", a},
              {"b_global_m", b},
              {"mean_inter_agent_distance_m", mean_inter_agent_distance(s)}};
}

FrameTransform truth_from_json(const json& j) {
  try {
    return FrameTransform{Rotation3(mat3_from_json(j.at("rotation"))),
                          vec3_from_json(j.at("translation_m"))};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("truth: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("truth: ") + e.what());
  }
}

json estimate_to_json(const EstimateReport& r) {
  const Diagnostics& d = r.diagnostics;
  json psi = json::array();
  for (int i = 0; i < 12; ++i) psi.push_back(r.psi_hat(i));
  json recon = json::array();
  for (const auto& p : r.reconstructed_b_global) recon.push_back(to_json(p));
  json out{
      {"method", to_string(r.method)},
      {"rotation", to_json(r.r_bar.matrix())},
      {"translation_m", to_json(r.t_bar)},
      {"psi_hat", psi},
      {"reconstructed_b_global_m", recon},
      {"diagnostics",
       {{"objective", d.objective},
        {"rank1_ratio", d.rank1_ratio},
        {"interior_rank1_ratio", d.interior_rank1_ratio},
        {"rank", d.rank},
        {"condition_number", d.condition_number},
        {"solver_iterations", d.solver_iterations},
        {"polished", d.polished},
        {"non_unique_rotation", d.non_unique_rotation},
        {"translation_scale_m", d.scale},
        {"weak_rows", d.weak_rows}}},
  };
  if (r.rotation_error) out["rotation_error_rad"] = *r.rotation_error;
  if (r.position_error) out["position_error_m"] = *r.position_error;
  if (r.refinement) {
    out["refinement"] = {{"cost", r.refinement->cost},
                         {"iterations", r.refinement->iterations},
                         {"converged", r.refinement->converged}};
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kConfig, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::kConfig, "write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

std::string trials_csv(const CampaignResult& r) {
  std::string out = "sigma_deg,K,method,trial,rotation_error_rad,position_error_m,status\n";
  for (const auto& t : r.records) {
    out += fmt::format("{},{},{},{},{},{},{}\n", format_double(t.sigma * kDeg), t.k,
                       to_string(t.method), t.trial, fmt_or_empty(t.rotation_error),
                       fmt_or_empty(t.position_error), t.status);
  }
  return out;
}

std::string fig2_table(const CampaignResult& r, const CampaignSpec& spec) {
  return vs_k_table(r, spec, [](const CellSummary& c) { return c.median_rotation_error; });
}

std::string fig3_table(const CampaignResult& r, const CampaignSpec& spec) {
  return vs_k_table(r, spec, [](const CellSummary& c) { return c.median_position_error; });
}

std::string fig4_table(const CampaignResult& r, const CampaignSpec& spec) {
  auto has = [&](Method m) {
    return std::find(spec.methods.begin(), spec.methods.end(), m) != spec.methods.end();
  };
  const bool ratio = has(Method::kSdpO) && has(Method::kLsO);
  std::string out = "K,sigma_deg";
  for (Method m : spec.methods) out += std::string(",") + to_string(m);
  if (ratio) out += ",ratio_LS_O_over_SDP_O";
  out += '\n';
  for (int k : spec.k_values) {
    for (double s : spec.sigmas) {
      out += std::to_string(k) + ',' + format_double(s * kDeg);
      for (Method m : spec.methods) {
        const CellSummary* c = r.find(s, k, m);
        out += ',' + (c ? fmt_or_empty(c->median_rotation_error) : std::string());
      }
      if (ratio) {
        const CellSummary* sdp = r.find(s, k, Method::kSdpO);
        const CellSummary* ls = r.find(s, k, Method::kLsO);
        out += ',' + (sdp && ls ? fmt_or_empty(ls->median_rotation_error / sdp->median_rotation_error)
                                : std::string());
      }
      out += '\n';
    }
  }
  return out;
}

json campaign_to_json(const CampaignResult& r) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"sigma_deg", c.sigma * kDeg},
                     {"K", c.k},
                     {"method", to_string(c.method)},
                     {"completed", c.completed},
                     {"failed", c.failed},
                     {"flagged", c.flagged},
                     {"median_rotation_error_rad", num(c.median_rotation_error)},
                     {"median_position_error_m", num(c.median_position_error)},
                     {"median_interior_rank1_ratio", num(c.median_interior_rank1_ratio)}});
  }
  json trials = json::array();
  for (const auto& t : r.records) {
    trials.push_back({{"sigma_deg", t.sigma * kDeg},
                      {"K", t.k},
                      {"method", to_string(t.method)},
                      {"trial", t.trial},
                      {"rotation_error_rad", num(t.rotation_error)},
                      {"position_error_m", num(t.position_error)},
                      {"status", t.status}});
  }
  return json{{"trials_completed", r.trials_completed},
              {"trials_requested", r.trials_requested},
              {"interrupted", r.interrupted},
              {"inter_agent_distance_m",
               {{"mean", r.distance.mean}, {"min", r.distance.min}, {"max", r.distance.max}}},
              {"cells", cells},
              {"trials", trials}};
}

}  // namespace doaloc::cli
