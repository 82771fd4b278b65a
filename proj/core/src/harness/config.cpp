#include "contrastlab/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "contrastlab/error.hpp"

namespace contrastlab::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  fail(ErrorKind::Config, "key '" + key + "': cannot parse '" + value + "' as " + want);
}

long parse_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    bad_value(key, v, "an unsigned integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    bad_value(key, v, "a number");
  }
  if (pos != v.size() || !std::isfinite(out)) bad_value(key, v, "a finite number");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const std::string& item : split_list(v)) out.push_back(static_cast<int>(parse_long(key, item)));
  if (out.empty()) fail(ErrorKind::Config, "key '" + key + "' needs at least one value");
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& item : split_list(v)) out.push_back(parse_double(key, item));
  if (out.empty()) fail(ErrorKind::Config, "key '" + key + "' needs at least one value");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

bool is_recovery(ExperimentKind k) {
  return k == ExperimentKind::RecoverSweepD || k == ExperimentKind::RecoverSweepN;
}

}  // namespace

std::string_view to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::RecoverSweepD: return "recover-sweep-d";
    case ExperimentKind::RecoverSweepN: return "recover-sweep-n";
    case ExperimentKind::TransferSweepAlpha: return "transfer-sweep-alpha";
    case ExperimentKind::SupconSweepM: return "supcon-sweep-m";
    case ExperimentKind::Validate: return "validate";
  }
  return "unknown";
}

std::string_view to_string(SolverKind k) noexcept {
  switch (k) {
    case SolverKind::ClMasking: return "cl-masking";
    case SolverKind::ClGd: return "cl-gd";
    case SolverKind::Autoencoder: return "autoencoder";
    case SolverKind::MaskedAe: return "masked-ae";
    case SolverKind::Supcon: return "supcon";
    case SolverKind::Transfer: return "transfer";
  }
  return "unknown";
}

std::string_view to_string(NoiseProfile k) noexcept {
  switch (k) {
    case NoiseProfile::TwoLevel: return "two-level";
    case NoiseProfile::Constant: return "constant";
    case NoiseProfile::Linear: return "linear";
  }
  return "unknown";
}

ExperimentKind parse_experiment(std::string_view s) {
  for (ExperimentKind k : {ExperimentKind::RecoverSweepD, ExperimentKind::RecoverSweepN,
                           ExperimentKind::TransferSweepAlpha, ExperimentKind::SupconSweepM,
                           ExperimentKind::Validate})
    if (s == to_string(k)) return k;
  fail(ErrorKind::Config, "unknown experiment '" + std::string(s) + "'");
}

SolverKind parse_solver(std::string_view s) {
  for (SolverKind k : {SolverKind::ClMasking, SolverKind::ClGd, SolverKind::Autoencoder,
                       SolverKind::MaskedAe, SolverKind::Supcon, SolverKind::Transfer})
    if (s == to_string(k)) return k;
  fail(ErrorKind::Config, "unknown solver '" + std::string(s) + "'");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "experiment", "d",          "n",          "m",         "t",        "r",
      "nu",         "sigma",      "noise_profile", "noise_tail", "sigma_eps", "replicates",
      "seed",       "threads",    "solvers",    "alpha_grid", "probe",    "probe_m",
      "test_task",  "gd_iters",   "gd_step_scale", "timing",  "out"};
  return keys;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  switch (kind) {
    case ExperimentKind::RecoverSweepD:
      cfg.d = {20, 40, 80};
      break;
    case ExperimentKind::RecoverSweepN:
      cfg.n = {2000, 8000, 20000};
      break;
    case ExperimentKind::TransferSweepAlpha:
      cfg.r = 10;
      cfg.t = 8;
      cfg.n = {1000};
      cfg.m = {1000};
      cfg.solvers = {SolverKind::Transfer};
      break;
    case ExperimentKind::SupconSweepM:
      cfg.m = {500, 2000, 8000};
      cfg.solvers = {SolverKind::Supcon, SolverKind::ClMasking};
      break;
    case ExperimentKind::Validate:
      cfg.solvers.clear();
      break;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::Config, msg);
  };
  need(!d.empty() && !n.empty() && !m.empty(), "grids must be nonempty");
  need(replicates >= 1, "replicates must be >= 1");
  need(r >= 1, "r must be >= 1");
  for (int v : d) need(v > r, "every d must exceed r");
  for (int v : n) need(v >= 2, "every n must be >= 2");
  for (int v : m) need(v >= 2, "every m must be >= 2");
  need(nu > 0.0, "nu must be > 0");
  need(sigma >= 0.0, "sigma must be >= 0");
  need(noise_tail >= 0.0, "noise_tail must be >= 0");
  need(sigma_eps >= 0.0, "sigma_eps must be >= 0");
  need(threads >= 0, "threads must be >= 0");
  need(probe_m >= 2, "probe_m must be >= 2");
  need(gd_iters >= 1, "gd_iters must be >= 1");
  need(gd_step_scale > 0.0, "gd_step_scale must be > 0");
  need(!alpha_grid.empty(), "alpha_grid must be nonempty");
  need(!out.empty(), "out must be nonempty");
  if (!sigma_vec.empty()) {
    need(d.size() == 1 && static_cast<int>(sigma_vec.size()) == d.front(),
         "a sigma vector needs a single d with one entry per coordinate");
    for (double s : sigma_vec) need(s >= 0.0, "sigma entries must be >= 0");
  }
  if (experiment == ExperimentKind::Validate) return;
  need(!solvers.empty(), "solvers must be nonempty");
  for (SolverKind s : solvers) {
    const std::string name(to_string(s));
    switch (experiment) {
      case ExperimentKind::RecoverSweepD:
      case ExperimentKind::RecoverSweepN:
        need(s != SolverKind::Supcon && s != SolverKind::Transfer,
             "solver " + name + " needs labeled data; not valid in a recovery sweep");
        break;
      case ExperimentKind::TransferSweepAlpha:
        need(s == SolverKind::Transfer || s == SolverKind::ClMasking,
             "solver " + name + " is not valid in transfer-sweep-alpha");
        break;
      case ExperimentKind::SupconSweepM:
        need(s != SolverKind::Transfer && s != SolverKind::ClGd,
             "solver " + name + " is not valid in supcon-sweep-m");
        break;
      case ExperimentKind::Validate:
        break;
    }
  }
  if (experiment == ExperimentKind::TransferSweepAlpha) need(t >= 1, "t must be >= 1");
  if (is_recovery(experiment) || experiment == ExperimentKind::TransferSweepAlpha) {
    need(nu > 0.0, "regression tasks need nu > 0");
  }
}

Eigen::VectorXd ExperimentConfig::noise_sigma(int dim) const {
  if (!sigma_vec.empty()) return Eigen::Map<const Eigen::VectorXd>(sigma_vec.data(), sigma_vec.size());
  Eigen::VectorXd s(dim);
  switch (noise_profile) {
    case NoiseProfile::Constant:
      s.setConstant(sigma);
      break;
    case NoiseProfile::TwoLevel:
      for (int i = 0; i < dim; ++i) s(i) = i < r ? sigma : sigma * noise_tail;
      break;
    case NoiseProfile::Linear:
      for (int i = 0; i < dim; ++i) {
        const double frac = dim > 1 ? static_cast<double>(i) / (dim - 1) : 0.0;
        s(i) = sigma * (1.0 + frac * (noise_tail - 1.0));
      }
      break;
  }
  return s;
}

std::string ExperimentConfig::sweep_variable() const {
  switch (experiment) {
    case ExperimentKind::RecoverSweepD: return "d";
    case ExperimentKind::RecoverSweepN: return "n";
    case ExperimentKind::TransferSweepAlpha: return "log_alpha";
    case ExperimentKind::SupconSweepM: return "m";
    case ExperimentKind::Validate: return "none";
  }
  return "none";
}

std::vector<double> ExperimentConfig::sweep_values() const {
  switch (experiment) {
    case ExperimentKind::RecoverSweepD: return {d.begin(), d.end()};
    case ExperimentKind::RecoverSweepN: return {n.begin(), n.end()};
    case ExperimentKind::TransferSweepAlpha: return alpha_grid;
    case ExperimentKind::SupconSweepM: return {m.begin(), m.end()};
    case ExperimentKind::Validate: return {};
  }
  return {};
}

ExperimentConfig config_from_pairs(const std::map<std::string, std::string>& kv) {
  const auto& keys = config_keys();
  for (const auto& [k, v] : kv) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      fail(ErrorKind::Config, "unknown key '" + k + "'");
  }
  const auto exp_it = kv.find("experiment");
  if (exp_it == kv.end()) fail(ErrorKind::Config, "missing required key 'experiment'");
  ExperimentConfig cfg = default_config(parse_experiment(exp_it->second));

  for (const auto& [k, v] : kv) {
    if (k == "experiment") continue;
    if (k == "d") cfg.d = parse_int_list(k, v);
    else if (k == "n") cfg.n = parse_int_list(k, v);
    else if (k == "m") cfg.m = parse_int_list(k, v);
    else if (k == "t") cfg.t = static_cast<int>(parse_long(k, v));
    else if (k == "r") cfg.r = static_cast<int>(parse_long(k, v));
    else if (k == "nu") cfg.nu = parse_double(k, v);
    else if (k == "sigma") {
      const std::vector<double> vals = parse_double_list(k, v);
      if (vals.size() == 1) cfg.sigma = vals.front();
      else cfg.sigma_vec = vals;
    } else if (k == "noise_profile") {
      if (v == "two-level") cfg.noise_profile = NoiseProfile::TwoLevel;
      else if (v == "constant") cfg.noise_profile = NoiseProfile::Constant;
      else if (v == "linear") cfg.noise_profile = NoiseProfile::Linear;
      else bad_value(k, v, "two-level, constant or linear");
    } else if (k == "noise_tail") cfg.noise_tail = parse_double(k, v);
    else if (k == "sigma_eps") cfg.sigma_eps = parse_double(k, v);
    else if (k == "replicates") cfg.replicates = static_cast<int>(parse_long(k, v));
    else if (k == "seed") cfg.seed = parse_u64(k, v);
    else if (k == "threads") cfg.threads = static_cast<int>(parse_long(k, v));
    else if (k == "solvers") {
      cfg.solvers.clear();
      for (const std::string& s : split_list(v)) cfg.solvers.push_back(parse_solver(s));
    } else if (k == "alpha_grid") cfg.alpha_grid = parse_double_list(k, v);
    else if (k == "probe") {
      if (v == "population") cfg.probe = ProbeMode::Population;
      else if (v == "refit") cfg.probe = ProbeMode::Refit;
      else bad_value(k, v, "population or refit");
    } else if (k == "probe_m") cfg.probe_m = static_cast<int>(parse_long(k, v));
    else if (k == "test_task") {
      if (v == "haar") cfg.test_task = TestTask::Haar;
      else if (v == "sphere-mean") cfg.test_task = TestTask::SphereMean;
      else if (v == "source-rule") cfg.test_task = TestTask::SourceRule;
      else bad_value(k, v, "haar, sphere-mean or source-rule");
    } else if (k == "gd_iters") cfg.gd_iters = parse_long(k, v);
    else if (k == "gd_step_scale") cfg.gd_step_scale = parse_double(k, v);
    else if (k == "timing") cfg.timing = parse_bool(k, v);
    else if (k == "out") cfg.out = v;
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second)
      fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return config_from_pairs(kv);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace contrastlab::harness
