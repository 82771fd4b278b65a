#include "contrastlab/harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "contrastlab/error.hpp"

namespace contrastlab::harness {

namespace {

constexpr const char* kHeader =
    "experiment,solver,sweep_var,sweep_value,replicate,seed,sin_theta_f,excess_risk,stderr,"
    "wall_time_ms,status";

std::string fmt(const char* spec, double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  return std::stod(s);
}

}  // namespace

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out = kHeader;
  out += '\n';
  for (const ResultRow& r : rows) {
    out += r.experiment + ',' + r.solver + ',' + r.sweep_var + ',' + fmt("%.17g", r.sweep_value) +
           ',' + std::to_string(r.replicate) + ',' + std::to_string(r.seed) + ',' +
           fmt("%.17g", r.sin_theta_f) + ',' + fmt("%.17g", r.excess_risk) + ',' +
           fmt("%.17g", r.std_error) + ',' + fmt("%.17g", r.wall_time_ms) + ',' + r.status + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kHeader, ErrorKind::Io,
          "results CSV header mismatch");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_fields(line);
    require(f.size() == 11, ErrorKind::Io, "results CSV row has the wrong field count");
    ResultRow r;
    r.experiment = f[0];
    r.solver = f[1];
    r.sweep_var = f[2];
    r.sweep_value = to_double(f[3]);
    r.replicate = std::stoi(f[4]);
    r.seed = std::stoull(f[5]);
    r.sin_theta_f = to_double(f[6]);
    r.excess_risk = to_double(f[7]);
    r.std_error = to_double(f[8]);
    r.wall_time_ms = to_double(f[9]);
    r.status = f[10];
    rows.push_back(std::move(r));
  }
  return rows;
}

CellStat aggregate(const std::vector<double>& values) {
  CellStat c;
  c.count = static_cast<int>(values.size());
  if (c.count == 0) {
    c.mean = std::nan("");
    c.std_error = std::nan("");
    return c;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  c.mean = sum / c.count;
  if (c.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - c.mean) * (v - c.mean);
    c.std_error = std::sqrt(ss / (c.count - 1) / c.count);
  }
  return c;
}

std::string format_summary(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
  const std::vector<double> grid = cfg.sweep_values();
  std::ostringstream md;
  md << "# " << to_string(cfg.experiment) << "\n\n";
  md << "r = " << cfg.r << ", nu = " << fmt("%g", cfg.nu) << ", replicates = " << cfg.replicates
     << ", seed = " << cfg.seed;
  if (cfg.experiment == ExperimentKind::TransferSweepAlpha) md << ", T = " << cfg.t;
  md << "\n\n";

  int failed = 0;
  for (const ResultRow& r : rows) failed += r.status != "ok";

  struct Metric {
    const char* title;
    double ResultRow::*field;
  };
  for (const Metric metric : {Metric{"sin_theta_f", &ResultRow::sin_theta_f},
                              Metric{"excess_risk", &ResultRow::excess_risk}}) {
    md << "## " << metric.title << "\n\n| solver |";
    for (double g : grid) md << ' ' << cfg.sweep_variable() << " = " << fmt("%g", g) << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < grid.size(); ++i) md << "---|";
    md << '\n';
    for (SolverKind s : cfg.solvers) {
      const std::string name(to_string(s));
      md << "| " << name << " |";
      for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<double> vals;
        for (const ResultRow& r : rows)
          if (r.solver == name && r.sweep_value == grid[g] && r.status == "ok" &&
              !std::isnan(r.*(metric.field)))
            vals.push_back(r.*(metric.field));
        const CellStat c = aggregate(vals);
        if (c.count == 0) md << " n/a |";
        else md << ' ' << fmt("%.15g", c.mean) << " ± " << fmt("%.3g", c.std_error) << " |";
      }
      md << '\n';
    }
    md << '\n';
  }
  md << "rows: " << rows.size() << ", failed: " << failed << "\n";
  return md.str();
}

void write_outputs(const std::string& dir, const ExperimentConfig& cfg,
                   const std::vector<ResultRow>& rows) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    fail(ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& content) {
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
  };
  write("results.csv", format_csv(rows));
  write("summary.md", format_summary(cfg, rows));
}

}  // namespace contrastlab::harness
