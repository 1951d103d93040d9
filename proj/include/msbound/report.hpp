#pragma once

#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "msbound/policy.hpp"
#include "msbound/sim.hpp"

namespace msbound {

/// %.17g, enough digits to round-trip a double.
std::string format_double(double v);

/// Header "t,mean_sq_norm,stderr,mean_norm,max_u_norm", one row per t.
void write_moment_csv(std::ostream& out, const MomentSeries& series);

struct ComparisonSeries {
  std::string label;
  double authority = 1.0;
  MomentSeries series;
};

/// "no_control", "full_authority", "tenth_authority" or "authority_<scale>".
std::string authority_label(double scale);

/// Columns t, then mean_sq_<label> and stderr_<label> per series.
void write_comparison_csv(std::ostream& out, std::span<const ComparisonSeries> series);

/// Self-contained line chart of E||x_t||^2 on a log axis.
void write_svg(std::ostream& out, std::span<const ComparisonSeries> series,
               const std::string& title);

nlohmann::json to_json(const SynthesisReport& report);
/// Summary fields only; the per-time series go to CSV.
nlohmann::json to_json(const MomentSeries& series);
nlohmann::json to_json(const DriftReport& report);
nlohmann::json to_json(const BoundednessReport& report);

/// Two-row CSV (header, values) of a drift report.
void write_drift_csv(std::ostream& out, const DriftReport& report);

/// Writes `content` to `path`; kIo on failure.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace msbound
