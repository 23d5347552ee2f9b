#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "spectra/error.hpp"
#include "spectra/montecarlo.hpp"

namespace spectra {

inline constexpr const char* kCsvHeader =
    "experiment,kind,n,p,p1,p2,T,sigma,dist,function_or_lambda,replications,seed,"
    "empirical_mean,empirical_var,empirical_rate,theoretical,mc_stderr";

// Six significant digits, shortest %g-style form, independent of locale.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  std::string s(buf, res.ptr);
  if (s == "-0") s = "0";
  return s;
}

inline std::string sigma_column(const ExperimentConfig& cfg) {
  if (cfg.kind == ExperimentKind::separable) {
    const std::string left = cfg.sigma1 ? cfg.sigma1->label() : "?";
    return "kron(" + left + ";toeplitz(" + format_number(cfg.rho) + "))";
  }
  return cfg.sigma ? cfg.sigma->label() : "";
}

namespace detail {

// Quotes a field only when it would otherwise break the row.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace detail

inline std::string render_csv(const MCSummary& summary) {
  const ExperimentConfig& cfg = summary.config;
  const bool sep = cfg.kind == ExperimentKind::separable;
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const MCCell& c : summary.cells) {
    out << detail::csv_field(cfg.name) << ',' << to_string(cfg.kind) << ',';
    if (sep) {
      out << ",," << cfg.p1 << ',' << cfg.p2 << ',' << cfg.T << ',';
    } else {
      out << cfg.n << ',' << cfg.p << ",,,,";
    }
    out << detail::csv_field(sigma_column(cfg)) << ',' << detail::csv_field(cfg.dist.tag) << ','
        << detail::csv_field(c.label) << ',' << c.replications << ',' << cfg.master_seed << ','
        << detail::opt_number(c.empirical_mean) << ',' << detail::opt_number(c.empirical_var) << ','
        << detail::opt_number(c.empirical_rate) << ',' << detail::opt_number(c.theoretical) << ','
        << (c.replications > 1 ? format_number(c.mc_stderr) : "") << '\n';
  }
  return out.str();
}

inline void emit_csv(const MCSummary& summary, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  const std::string text = render_csv(summary);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.close();
  if (!f) throw IoError("failed writing '" + path + "'");
}

// Fixed-width table for terminal output.
inline std::string render_table(const MCSummary& summary) {
  std::ostringstream out;
  const ExperimentConfig& cfg = summary.config;
  out << cfg.name << " [" << to_string(cfg.kind) << "] sigma=" << sigma_column(cfg)
      << " dist=" << cfg.dist.tag << " seed=" << cfg.master_seed << '\n';
  char line[256];
  std::snprintf(line, sizeof line, "  %-16s %10s %10s %10s %10s %10s %8s\n", "cell", "mean", "var", "rate",
                "theory", "stderr", "reps");
  out << line;
  auto cellstr = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("-"); };
  for (const MCCell& c : summary.cells) {
    std::snprintf(line, sizeof line, "  %-16s %10s %10s %10s %10s %10s %8zu\n", c.label.c_str(),
                  cellstr(c.empirical_mean).c_str(), cellstr(c.empirical_var).c_str(),
                  cellstr(c.empirical_rate).c_str(), cellstr(c.theoretical).c_str(),
                  format_number(c.mc_stderr).c_str(), c.replications);
    out << line;
  }
  return out.str();
}

}  // namespace spectra
