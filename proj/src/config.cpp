#include "specshift/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "specshift/csv.hpp"

namespace specshift {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  if (v == "auto") return -1.0;
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": " + v);
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": " + v);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad seed for " + key + ": " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad bool for " + key + ": " + v);
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& key, const std::string& v,
                          F parse_one) {
  std::vector<T> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_one(key, trim(item)));
  }
  if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
  return out;
}

std::string fmt_auto(double v) { return v < 0.0 ? "auto" : fmt_double(v); }

}  // namespace

RunConfig::RunConfig() {
  const char* env = std::getenv("SPECSHIFT_OUT");
  out_dir = (env != nullptr && *env != '\0') ? env : "out";
}

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  const std::string k = trim(dotted_key);
  const std::string v = trim(value);

  if (k == "kernel.beta") kernel_beta = parse_double(k, v);
  else if (k == "kernel.j_max") kernel_j_max = parse_int(k, v);
  else if (k == "source.r") source_r = parse_double(k, v);
  else if (k == "source.eps_u") source_eps_u = parse_double(k, v);
  else if (k == "source.scale") source_scale = parse_double(k, v);
  else if (k == "scenario.kind") scenario_kind = v;
  else if (k == "scenario.p") scenario_p = parse_double(k, v);
  else if (k == "filter.kind") filter_kind = v;
  else if (k == "filter.tau") filter_tau = parse_double(k, v);
  else if (k == "sweep.schedule") sweep_schedule = v;
  else if (k == "sweep.eps") sweep_eps = parse_double(k, v);
  else if (k == "sweep.m") sweep_m = parse_int(k, v);
  else if (k == "sweep.manual_s") sweep_manual_s = parse_double(k, v);
  else if (k == "sweep.n_grid") sweep_n_grid = parse_list<int>(k, v, parse_int);
  else if (k == "sweep.gamma_list")
    sweep_gamma_list = parse_list<double>(k, v, parse_double);
  else if (k == "sweep.trials") sweep_trials = parse_int(k, v);
  else if (k == "sweep.noise_bound") sweep_noise_bound = parse_double(k, v);
  else if (k == "sweep.master_seed") sweep_master_seed = parse_u64(k, v);
  else if (k == "sweep.workers") sweep_workers = parse_int(k, v);
  else if (k == "fit.n") fit_n = parse_int(k, v);
  else if (k == "fit.lambda") fit_lambda = parse_double(k, v);
  else if (k == "fit.grid_points") fit_grid_points = parse_int(k, v);
  else if (k == "filtercheck.lambda_count") fc_lambda_count = parse_int(k, v);
  else if (k == "filtercheck.lambda_min") fc_lambda_min = parse_double(k, v);
  else if (k == "filtercheck.lambda_max") fc_lambda_max = parse_double(k, v);
  else if (k == "filtercheck.t_count") fc_t_count = parse_int(k, v);
  else if (k == "filtercheck.theta_step") fc_theta_step = parse_double(k, v);
  else if (k == "filtercheck.force_E") fc_force_E = parse_double(k, v);
  else if (k == "filtercheck.force_F") fc_force_F = parse_double(k, v);
  else if (k == "moments.m_max") moments_m_max = parse_int(k, v);
  else if (k == "moments.L") moments_L = parse_double(k, v);
  else if (k == "moments.sigma") moments_sigma = parse_double(k, v);
  else if (k == "moments.expect_fail") moments_expect_fail = parse_bool(k, v);
  else if (k == "report.tolerance") report_tolerance = parse_double(k, v);
  else if (k == "report.delta") report_delta = parse_double(k, v);
  else if (k == "output.out_dir") out_dir = v;
  else throw std::invalid_argument("config: unknown key: " + k);
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot read " + path);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("config: malformed section at line " +
                                    std::to_string(lineno));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: expected key=value at line " +
                                  std::to_string(lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw std::invalid_argument("config: key outside any section at line " +
                                  std::to_string(lineno));
    }
    set(section + "." + key, value);
  }
}

void RunConfig::echo(std::ostream& os) const {
  os << "[kernel]\n"
     << "beta = " << fmt_double(kernel_beta) << "\n"
     << "j_max = " << kernel_j_max << "\n\n";
  os << "[source]\n"
     << "r = " << fmt_double(source_r) << "\n"
     << "eps_u = " << fmt_double(source_eps_u) << "\n"
     << "scale = " << fmt_double(source_scale) << "\n\n";
  os << "[scenario]\n"
     << "kind = " << scenario_kind << "\n"
     << "p = " << fmt_double(scenario_p) << "\n\n";
  os << "[filter]\n"
     << "kind = " << filter_kind << "\n"
     << "tau = " << fmt_double(filter_tau) << "\n\n";
  os << "[sweep]\n"
     << "schedule = " << sweep_schedule << "\n"
     << "eps = " << fmt_auto(sweep_eps) << "\n"
     << "m = " << sweep_m << "\n"
     << "manual_s = " << fmt_double(sweep_manual_s) << "\n";
  os << "n_grid = ";
  for (std::size_t i = 0; i < sweep_n_grid.size(); ++i) {
    os << (i ? "," : "") << sweep_n_grid[i];
  }
  os << "\ngamma_list = ";
  for (std::size_t i = 0; i < sweep_gamma_list.size(); ++i) {
    os << (i ? "," : "") << fmt_double(sweep_gamma_list[i]);
  }
  os << "\ntrials = " << sweep_trials << "\n"
     << "noise_bound = " << fmt_double(sweep_noise_bound) << "\n"
     << "master_seed = " << sweep_master_seed << "\n"
     << "workers = " << sweep_workers << "\n\n";
  os << "[fit]\n"
     << "n = " << fit_n << "\n"
     << "lambda = " << fmt_auto(fit_lambda) << "\n"
     << "grid_points = " << fit_grid_points << "\n\n";
  os << "[filtercheck]\n"
     << "lambda_count = " << fc_lambda_count << "\n"
     << "lambda_min = " << fmt_double(fc_lambda_min) << "\n"
     << "lambda_max = " << fmt_double(fc_lambda_max) << "\n"
     << "t_count = " << fc_t_count << "\n"
     << "theta_step = " << fmt_double(fc_theta_step) << "\n"
     << "force_E = " << fmt_auto(fc_force_E) << "\n"
     << "force_F = " << fmt_auto(fc_force_F) << "\n\n";
  os << "[moments]\n"
     << "m_max = " << moments_m_max << "\n"
     << "L = " << fmt_auto(moments_L) << "\n"
     << "sigma = " << fmt_auto(moments_sigma) << "\n"
     << "expect_fail = " << (moments_expect_fail ? "true" : "false") << "\n\n";
  os << "[report]\n"
     << "tolerance = " << fmt_double(report_tolerance) << "\n"
     << "delta = " << fmt_double(report_delta) << "\n\n";
  os << "[output]\n"
     << "out_dir = " << out_dir << "\n";
}

ShiftScenario RunConfig::build_scenario() const {
  if (scenario_kind == "none") return ShiftScenario::none();
  if (scenario_kind == "bounded_linear") return ShiftScenario::bounded_linear();
  if (scenario_kind == "log_tail") return ShiftScenario::log_tail(scenario_p);
  throw std::invalid_argument("config: unknown scenario.kind: " + scenario_kind);
}

KernelSpec RunConfig::build_kernel() const {
  return KernelSpec::make(kernel_beta, kernel_j_max);
}

FilterSpec RunConfig::build_filter() const {
  if (filter_kind == "ridge") return FilterSpec::ridge();
  if (filter_kind == "gradient_flow") return FilterSpec::gradient_flow(filter_tau);
  if (filter_kind == "spectral_cutoff")
    return FilterSpec::spectral_cutoff(filter_tau);
  throw std::invalid_argument("config: unknown filter.kind: " + filter_kind);
}

ExperimentPlan RunConfig::build_plan() const {
  ExperimentPlan plan;
  plan.scenario = build_scenario();
  plan.kernel = build_kernel();
  plan.filter = build_filter();
  plan.source = SourceCondition{source_r, source_eps_u, source_scale};
  plan.p = scenario_p;
  plan.gamma_list = sweep_gamma_list;
  plan.n_grid = sweep_n_grid;
  plan.trials = sweep_trials;
  if (sweep_schedule == "thm1") plan.schedule = Schedule::thm1;
  else if (sweep_schedule == "thm2") plan.schedule = Schedule::thm2;
  else if (sweep_schedule == "manual") plan.schedule = Schedule::manual;
  else throw std::invalid_argument("config: unknown sweep.schedule: " + sweep_schedule);
  plan.eps = sweep_eps;
  plan.m = sweep_m;
  plan.manual_s = sweep_manual_s;
  plan.master_seed = sweep_master_seed;
  plan.noise_bound = sweep_noise_bound;
  plan.workers = sweep_workers;
  return plan;
}

}  // namespace specshift
