#include "msbound/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace msbound {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_moment_csv(std::ostream& out, const MomentSeries& s) {
  out << "t,mean_sq_norm,stderr,mean_norm,max_u_norm\n";
  for (std::size_t t = 0; t < s.mean_sq.size(); ++t) {
    out << t << ',' << format_double(s.mean_sq[t]) << ',' << format_double(s.stderr_sq[t]) << ','
        << format_double(s.mean_norm[t]) << ',' << format_double(s.max_u_norm[t]) << '\n';
  }
}

std::string authority_label(double scale) {
  if (scale == 0.0) return "no_control";
  if (scale == 1.0) return "full_authority";
  if (scale == 0.1) return "tenth_authority";
  return "authority_" + format_double(scale);
}

void write_comparison_csv(std::ostream& out, std::span<const ComparisonSeries> series) {
  out << 't';
  std::size_t len = 0;
  for (const auto& c : series) {
    out << ",mean_sq_" << c.label << ",stderr_" << c.label;
    len = std::max(len, c.series.mean_sq.size());
  }
  out << '\n';
  for (std::size_t t = 0; t < len; ++t) {
    out << t;
    for (const auto& c : series) {
      if (t < c.series.mean_sq.size()) {
        out << ',' << format_double(c.series.mean_sq[t]) << ','
            << format_double(c.series.stderr_sq[t]);
      } else {
        out << ",,";
      }
    }
    out << '\n';
  }
}

void write_svg(std::ostream& out, std::span<const ComparisonSeries> series,
               const std::string& title) {
  constexpr double kWidth = 800, kHeight = 480;
  constexpr double kLeft = 70, kRight = 180, kTop = 40, kBottom = 50;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t len = 2;
  for (const auto& c : series) {
    len = std::max(len, c.series.mean_sq.size());
    for (double v : c.series.mean_sq) {
      if (v > 0.0 && std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!std::isfinite(lo)) {
    lo = 1.0;
    hi = 10.0;
  }
  const double dlo = std::floor(std::log10(lo));
  const double dhi = std::max(dlo + 1.0, std::ceil(std::log10(hi)));
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double t) { return kLeft + pw * t / static_cast<double>(len - 1); };
  auto py = [&](double v) {
    const double l = std::log10(std::max(v, std::pow(10.0, dlo)));
    return kTop + ph * (1.0 - (l - dlo) / (dhi - dlo));
  };

  char buf[64];
  auto f = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft << "\" y=\"22\" font-size=\"14\">" << title << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double e = dlo; e <= dhi; e += 1.0) {
    const double y = py(std::pow(10.0, e));
    out << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << f(y)
        << "\" y2=\"" << f(y) << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << f(y + 4)
        << "\" text-anchor=\"end\">1e" << static_cast<int>(e) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double t = std::round(static_cast<double>(len - 1) * i / 5.0);
    out << "<text x=\"" << f(px(t)) << "\" y=\"" << kTop + ph + 18
        << "\" text-anchor=\"middle\">" << static_cast<long>(t) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">t</text>\n";
  out << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\" text-anchor=\"middle\">mean ||x_t||^2</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i].series.mean_sq;
    const char* color = colors[i % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t t = 0; t < s.size(); ++t) {
      if (!std::isfinite(s[t])) continue;
      out << f(px(static_cast<double>(t))) << ',' << f(py(s[t])) << ' ';
    }
    out << "\"/>\n";
    const double ly = kTop + 16 + 20 * static_cast<double>(i);
    out << "<line x1=\"" << kLeft + pw + 12 << "\" x2=\"" << kLeft + pw + 36 << "\" y1=\"" << ly
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kLeft + pw + 42 << "\" y=\"" << ly + 4 << "\">" << series[i].label
        << "</text>\n";
  }
  out << "</svg>\n";
}

json to_json(const SynthesisReport& r) {
  return json{{"variant", to_string(r.variant)},
              {"r", r.r},
              {"sigma_d", r.sigma_d},
              {"R", r.R},
              {"k", r.k},
              {"c1_estimate", r.c1_estimate},
              {"c1_circle", r.c1_circle},
              {"margin", r.margin},
              {"cond_T", r.cond_T},
              {"warnings", r.warnings}};
}

json to_json(const MomentSeries& s) {
  return json{{"horizon", s.horizon},
              {"runs", s.runs},
              {"diverged_runs", s.diverged_runs},
              {"diverged_run_ids", s.diverged_run_ids},
              {"excluded_diverged", s.excluded_diverged},
              {"completeness", s.completeness},
              {"max_control_norm", s.max_control_norm},
              {"final_mean_sq_norm", s.mean_sq.empty() ? 0.0 : s.mean_sq.back()},
              {"tail_start", s.tail_start},
              {"tail_runs", s.tail_runs},
              {"tail_slope_mean", s.tail_slope_mean},
              {"tail_slope_stderr", s.tail_slope_stderr},
              {"tail_level_mean", s.tail_level_mean},
              {"tail_level_stderr", s.tail_level_stderr}};
}

json to_json(const DriftReport& r) {
  return json{{"J", r.J},
              {"r", r.r},
              {"c1", r.c1},
              {"b_hat", r.b_hat},
              {"b_stderr", r.b_stderr},
              {"bound", r.bound},
              {"m4_hat", r.m4_hat},
              {"events", r.events},
              {"transitions", r.transitions},
              {"verdict", to_string(r.verdict)}};
}

json to_json(const BoundednessReport& r) {
  json j{{"verdict", to_string(r.verdict)},
         {"slope", r.slope},
         {"slope_stderr", r.slope_stderr},
         {"ci_low", r.ci_low},
         {"ci_high", r.ci_high},
         {"window_start", r.window_start},
         {"window_end", r.window_end},
         {"note", r.note}};
  j["reference_slope"] = r.reference_slope ? json(*r.reference_slope) : json(nullptr);
  return j;
}

void write_drift_csv(std::ostream& out, const DriftReport& r) {
  out << "J,r,c1,b_hat,b_stderr,bound,m4_hat,events,transitions,verdict\n";
  out << format_double(r.J) << ',' << format_double(r.r) << ',' << format_double(r.c1) << ','
      << format_double(r.b_hat) << ',' << format_double(r.b_stderr) << ','
      << format_double(r.bound) << ',' << format_double(r.m4_hat) << ',' << r.events << ','
      << r.transitions << ',' << to_string(r.verdict) << '\n';
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  out << content;
  out.close();
  if (!out) fail(ErrorKind::kIo, "failed writing '" + path + "'");
}

}  // namespace msbound
