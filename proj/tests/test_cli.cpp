#include "wash/commands.hpp"
#include "wash/config.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wash;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("wash_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(WASH_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

// First line that is not a '#' comment.
std::string columns(const fs::path& csv) {
  std::ifstream f(csv);
  std::string line;
  while (std::getline(f, line))
    if (line.empty() || line[0] != '#') return line;
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig ok = parse_config("command = simulate\n# comment\n  epsilon = 1e-3  # trailing\ndt = 2e-4\n");
  CHECK(ok.command == "simulate");
  CHECK(ok.epsilon == 1e-3);
  CHECK(ok.dt.value() == 2e-4);
  CHECK(parse_config("epsilon = 1e-3\n", "validate").command == "validate");
}

TEST_CASE("config errors name the line") {
  auto message = [](const std::string& text, const std::string& cmd = "") {
    try {
      parse_config(text, cmd);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("command = simulate\nepsilom = 1e-3\n").find("line 2: unknown key 'epsilom'") != std::string::npos);
  CHECK(message("command = simulate\nk_max = 3\nk_max = 4\n").find("line 3: duplicate key 'k_max'") != std::string::npos);
  CHECK(message("command = simulate\nepsilon = -1\n").find("line 2: bad value for 'epsilon'") != std::string::npos);
  CHECK(message("command = simulate\nn_trials = ten\n").find("line 2") != std::string::npos);
  CHECK(message("command = simulate\njust words\n").find("line 2: expected 'key = value'") != std::string::npos);
  CHECK(message("epsilon = 1e-3\n").find("missing required key 'command'") != std::string::npos);
  CHECK(message("command = simulate\n", "validate").find("not 'validate'") != std::string::npos);
  CHECK(message("command = fly\n").find("unknown command 'fly'") != std::string::npos);
  CHECK(message("command = simulate\nscheme = rk4\n").find("unknown scheme") != std::string::npos);
}

TEST_CASE("resolved config text reads back to the same config") {
  RunConfig c = parse_config("command = validate\nepsilon = 3e-5\nmaster_seed = 18446744073709551615\n"
                             "eta_list = 0.02, 0.002, 0.0002\ndt = 1e-4\nscheme = euler-maruyama\n");
  for (int pass = 0; pass < 2; ++pass) {
    const std::string text = to_config_text(c);
    const RunConfig back = parse_config(text);
    CHECK(to_config_text(back) == text);
    CHECK(back.master_seed == c.master_seed);
    CHECK(back.eta_list == c.eta_list);
    CHECK(back.epsilon == c.epsilon);
    c.dt.reset();
  }
}

TEST_CASE("critical-tilt writes the alpha curve") {
  const fs::path d = scratch_dir("tilt");
  const fs::path cfg = write_config(d, "command = critical-tilt\ngamma_list = 0.05, 0.1, 0.2\n");
  REQUIRE(run("critical-tilt --config " + cfg.string() + " --out " + (d / "out").string(), d / "log") == 0);
  const fs::path csv = d / "out" / "alpha_curve.csv";
  CHECK(slurp(csv).rfind("# wash csv schema 1: alpha_curve\n", 0) == 0);
  CHECK(slurp(csv).find("# gamma_list = 0.05, 0.1, 0.2\n") != std::string::npos);
  CHECK(columns(csv) == "gamma,alpha_gamma");
  const auto j = nlohmann::json::parse(slurp(d / "out" / "summary.json"));
  CHECK(j["schema_version"] == kSchemaVersion);
  CHECK(j["alpha_gamma"].get<double>() == doctest::Approx(0.1270088598).epsilon(1e-9));
  CHECK(j["config"]["command"] == "critical-tilt");
}

TEST_CASE("heteroclinic and simulate artifacts follow their schemas") {
  const fs::path d = scratch_dir("orbit");
  const fs::path cfg = write_config(d, "command = heteroclinic\norbit_grid = 1025\n");
  REQUIRE(run("heteroclinic --config " + cfg.string() + " --out " + (d / "h").string(), d / "log") == 0);
  CHECK(columns(d / "h" / "orbit.csv") == "x,p");
  const auto j = nlohmann::json::parse(slurp(d / "h" / "orbit.json"));
  for (const char* key : {"k", "alpha_used", "left_slope", "right_slope", "flux_integral"}) CHECK(j.contains(key));

  const fs::path cfg2 = write_config(d, "command = simulate\nepsilon = 1e-3\ntrace_stride = 10\n");
  REQUIRE(run("simulate --config " + cfg2.string() + " --out " + (d / "s").string(), d / "log") == 0);
  CHECK(columns(d / "s" / "trace.csv") == "t,x,p,z,v,k,phase");
  CHECK(columns(d / "s" / "events.csv") == "trial,k,S_k,T_k1,z_at_S,v_at_T,crossed");
}

TEST_CASE("crossing-stats is reproducible and seed dependent") {
  const fs::path d = scratch_dir("stats");
  const fs::path cfg = write_config(d, "command = crossing-stats\nepsilon = 1e-3\nn_trials = 300\nthreads = 2\n");
  const std::string base = "crossing-stats --config " + cfg.string() + " --out " + (d / "out").string();
  run(base, d / "log1");
  const std::string first = slurp(d / "out" / "summary.json");
  const std::string batch = slurp(d / "out" / "batch.csv");
  run(base, d / "log2");
  CHECK(!first.empty());
  CHECK(slurp(d / "out" / "summary.json") == first);
  CHECK(slurp(d / "out" / "batch.csv") == batch);
  CHECK(columns(d / "out" / "batch.csv") == "seed,N,T_final,x_final,p_final,n_events,outcome");

  run(base + " --seed 2", d / "log3");
  CHECK(slurp(d / "out" / "summary.json") != first);
  CHECK(slurp(d / "out" / "summary.json").find("\"master_seed\": 2") != std::string::npos);
}

TEST_CASE("bad invocations fail with a message") {
  const fs::path d = scratch_dir("bad");
  const fs::path cfg = write_config(d, "command = simulate\nepsilon = often\n");
  CHECK(run("simulate --config " + cfg.string(), d / "log") == 2);
  CHECK(slurp(d / "log").find("line 2") != std::string::npos);
  CHECK(run("validate --config " + cfg.string(), d / "log") == 2);
  CHECK(run("simulate --config " + (d / "missing.cfg").string(), d / "log") != 0);
  CHECK(run("teleport --config " + cfg.string(), d / "log") != 0);
  CHECK(run("", d / "log") != 0);
}
