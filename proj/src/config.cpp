#include "wash/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace wash {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& s) {
  T value{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw std::invalid_argument("not a number: '" + s + "'");
  return value;
}

double positive(double v) {
  if (!(v > 0.0)) throw std::invalid_argument("must be positive");
  return v;
}

template <typename T>
T at_least(T v, T lo) {
  if (v < lo) throw std::invalid_argument("must be at least " + std::to_string(lo));
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(positive(parse_number<double>(trim(item))));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

struct Key {
  const char* name;
  const char* help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"command", "subcommand this file is for",
       [](RunConfig& c, const std::string& v) {
         if (v.empty()) throw std::invalid_argument("empty command");
         c.command = v;
       },
       [](const RunConfig& c) { return c.command; }},
      {"gamma", "friction (default 0.1)", [](RunConfig& c, const std::string& v) { c.gamma = positive(parse_number<double>(v)); },
       [](const RunConfig& c) { return fmt(c.gamma); }},
      {"epsilon", "noise amplitude (default 1e-4)",
       [](RunConfig& c, const std::string& v) { c.epsilon = positive(parse_number<double>(v)); },
       [](const RunConfig& c) { return fmt(c.epsilon); }},
      {"nu", "window exponent (default 0.44)", [](RunConfig& c, const std::string& v) { c.nu = positive(parse_number<double>(v)); },
       [](const RunConfig& c) { return fmt(c.nu); }},
      {"dt", "time step, or derived for min(1e-3, eta^2/4) (default derived)",
       [](RunConfig& c, const std::string& v) {
         if (v == "derived")
           c.dt.reset();
         else
           c.dt = positive(parse_number<double>(v));
       },
       [](const RunConfig& c) { return c.dt ? fmt(*c.dt) : std::string("derived"); }},
      {"t_max", "time cap per trial, 0 for 200 ln(1/eps)/l+ (default 0)",
       [](RunConfig& c, const std::string& v) { c.t_max = at_least(parse_number<double>(v), 0.0); },
       [](const RunConfig& c) { return fmt(c.t_max); }},
      {"scheme", "splitting | euler-maruyama (default splitting)",
       [](RunConfig& c, const std::string& v) {
         if (v == "splitting")
           c.scheme = Scheme::Splitting;
         else if (v == "euler-maruyama")
           c.scheme = Scheme::EulerMaruyama;
         else
           throw std::invalid_argument("unknown scheme '" + v + "'");
       },
       [](const RunConfig& c) { return to_string(c.scheme); }},
      {"n_trials", "trials per batch (default 10000)",
       [](RunConfig& c, const std::string& v) { c.n_trials = at_least(parse_number<long>(v), 1L); },
       [](const RunConfig& c) { return std::to_string(c.n_trials); }},
      {"k_max", "crossings before a trial is stopped (default 12)",
       [](RunConfig& c, const std::string& v) { c.k_max = at_least(parse_number<int>(v), 1); },
       [](const RunConfig& c) { return std::to_string(c.k_max); }},
      {"master_seed", "batch seed (default 1)",
       [](RunConfig& c, const std::string& v) { c.master_seed = parse_number<std::uint64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.master_seed); }},
      {"threads", "worker threads, 0 for all cores (default 0)",
       [](RunConfig& c, const std::string& v) { c.threads = at_least(parse_number<int>(v), 0); },
       [](const RunConfig& c) { return std::to_string(c.threads); }},
      {"output_dir", "artifact directory (default out)",
       [](RunConfig& c, const std::string& v) {
         if (v.empty()) throw std::invalid_argument("empty path");
         c.output_dir = v;
       },
       [](const RunConfig& c) { return c.output_dir; }},
      {"tol_alpha", "critical tilt bracket width (default 1e-10)",
       [](RunConfig& c, const std::string& v) { c.tol_alpha = at_least(parse_number<double>(v), 1e-12); },
       [](const RunConfig& c) { return fmt(c.tol_alpha); }},
      {"gamma_list", "frictions for the alpha curve", [](RunConfig& c, const std::string& v) { c.gamma_list = parse_list(v); },
       [](const RunConfig& c) { return fmt_list(c.gamma_list); }},
      {"orbit_grid", "heteroclinic grid size (default 4097)",
       [](RunConfig& c, const std::string& v) { c.orbit_grid = at_least(parse_number<int>(v), 256); },
       [](const RunConfig& c) { return std::to_string(c.orbit_grid); }},
      {"eta_list", "window widths for exponent fits (default 1e-2, 3e-3, 1e-3)",
       [](RunConfig& c, const std::string& v) { c.eta_list = parse_list(v); },
       [](const RunConfig& c) { return fmt_list(c.eta_list); }},
      {"trace_stride", "steps between trace rows (default 100)",
       [](RunConfig& c, const std::string& v) { c.trace_stride = at_least(parse_number<int>(v), 1); },
       [](const RunConfig& c) { return std::to_string(c.trace_stride); }},
      {"epsilon_list", "noise levels for the time-scale scan (default 1e-3, 1e-4, 1e-5)",
       [](RunConfig& c, const std::string& v) { c.epsilon_list = parse_list(v); },
       [](const RunConfig& c) { return fmt_list(c.epsilon_list); }},
      {"scan_trials", "trials per noise level in the scan (default 2000)",
       [](RunConfig& c, const std::string& v) { c.scan_trials = at_least(parse_number<long>(v), 100L); },
       [](const RunConfig& c) { return std::to_string(c.scan_trials); }},
      {"ou_samples", "samples for the OU variance check (default 100000)",
       [](RunConfig& c, const std::string& v) { c.ou_samples = at_least(parse_number<long>(v), 2L); },
       [](const RunConfig& c) { return std::to_string(c.ou_samples); }},
      {"ms_samples", "samples for the Marcus-Shepp check (default 100000)",
       [](RunConfig& c, const std::string& v) { c.ms_samples = at_least(parse_number<long>(v), 1L); },
       [](const RunConfig& c) { return std::to_string(c.ms_samples); }},
      {"ms_lambdas", "tail levels (default 3, 4)", [](RunConfig& c, const std::string& v) { c.ms_lambdas = parse_list(v); },
       [](const RunConfig& c) { return fmt_list(c.ms_lambdas); }},
      {"comparison_paths", "paths for the comparison check (default 1000)",
       [](RunConfig& c, const std::string& v) { c.comparison_paths = at_least(parse_number<long>(v), 1L); },
       [](const RunConfig& c) { return std::to_string(c.comparison_paths); }},
      {"portrait_grid", "vector-field points per axis (default 41)",
       [](RunConfig& c, const std::string& v) { c.portrait_grid = at_least(parse_number<int>(v), 2); },
       [](const RunConfig& c) { return std::to_string(c.portrait_grid); }},
  };
  return table;
}

}  // namespace

double RunConfig::resolved_dt(const ModelParams& m) const { return dt ? *dt : default_dt(m); }

SimSettings RunConfig::sim_settings(const ModelParams& m) const {
  SimSettings s;
  s.dt = resolved_dt(m);
  s.t_max = t_max;
  s.k_max = k_max;
  s.scheme = scheme;
  return s;
}

RunConfig parse_config(std::string_view text, std::string_view default_command) {
  RunConfig c;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = std::find_if(keys().begin(), keys().end(), [&](const Key& k) { return key == k.name; });
    if (it == keys().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      it->set(c, value);
    } catch (const std::exception& e) {
      throw ConfigError(where + "bad value for '" + key + "': " + e.what());
    }
  }
  if (c.command.empty()) c.command = std::string(default_command);
  if (c.command.empty()) throw ConfigError("missing required key 'command'");
  if (!default_command.empty() && c.command != default_command)
    throw ConfigError("config is for command '" + c.command + "', not '" + std::string(default_command) + "'");
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), c.command) == names.end())
    throw ConfigError("unknown command '" + c.command + "'");
  return c;
}

std::string to_config_text(const RunConfig& c) {
  std::string out;
  for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(c) + "\n";
  return out;
}

std::string config_help() {
  std::ostringstream os;
  os << "Config keys (key = value, '#' comments):\n";
  for (const Key& k : keys()) os << "  " << std::left << std::setw(18) << k.name << k.help << "\n";
  return os.str();
}

}  // namespace wash
