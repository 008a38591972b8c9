// Command-line front end. Subcommands map one-to-one onto the report builders
// in the library; every run with a fixed seed writes byte-identical output,
// whatever HOPFSIM_THREADS says.

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hopfsim/reports.hpp"
#include "hopfsim/selftest.hpp"
#include "hopfsim/stations.hpp"
#include "hopfsim/version.hpp"

namespace {

using hopfsim::reports::ordered_json;

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + out_path);
  f << text;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

// "host:port" with a mandatory port field.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon + 1 == s.size())
    throw std::domain_error("endpoint must be host:port, got: " + s);
  const std::string host = s.substr(0, colon);
  const int port = std::stoi(s.substr(colon + 1));
  if (port < 0 || port > 65535) throw std::domain_error("port out of range in: " + s);
  return {host.empty() ? std::string("127.0.0.1") : host, static_cast<std::uint16_t>(port)};
}

int run_verify() {
  const auto checks = hopfsim::selftest::run_self_checks();
  bool all = true;
  for (const auto& c : checks) {
    std::printf("%s %-24s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    all = all && c.pass;
  }
  if (all)
    std::printf("all %zu identity families passed\n", checks.size());
  else
    std::printf("FAILURES among %zu identity families\n", checks.size());
  return all ? 0 : 1;
}

struct StationsArgs {
  std::string run_id = "run";
  std::uint64_t trials = 1000;
  std::uint64_t seed = 42;
  std::vector<double> angles_a{0.0, 45.0};
  std::vector<double> angles_b{22.5, 67.5};
  std::string mode = "inproc";
  std::string listen;
  std::string connect;
  std::string match = "by-trial";
  std::int64_t window_ns = 500;
  std::int64_t jitter_ns = 0;
  std::string out_a;
  std::string out_b;
  std::string out;
};

hopfsim::stations::MatchPolicy make_policy(const StationsArgs& a) {
  hopfsim::stations::MatchPolicy policy;
  policy.mode = a.match == "by-time" ? hopfsim::stations::MatchPolicy::Mode::by_time_window
                                     : hopfsim::stations::MatchPolicy::Mode::by_trial_id;
  policy.window_ns = a.window_ns;
  policy.jitter_ns = a.jitter_ns;
  return policy;
}

ordered_json stations_summary(const StationsArgs& a, const hopfsim::stations::MatchResult& res) {
  ordered_json out{{"run", a.run_id},
                   {"trials", a.trials},
                   {"match_mode", a.match},
                   {"jitter_ns", a.jitter_ns}};
  if (a.match == "by-time") out["window_ns"] = a.window_ns;
  const ordered_json match_part = hopfsim::reports::match_report_json(res);
  for (const auto& [k, v] : match_part.items()) out[k] = v;
  out["provenance"] = hopfsim::reports::provenance_json(a.seed, a.trials, "stations");
  return out;
}

int run_stations_cmd(const StationsArgs& a) {
  namespace st = hopfsim::stations;
  st::StationsConfig cfg{a.run_id, a.trials, a.seed, a.angles_a, a.angles_b};
  const st::MatchPolicy policy = make_policy(a);

  auto maybe_write_log = [](const std::string& path, std::span<const st::StationEvent> log) {
    if (path.empty()) return;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    st::write_ndjson(f, log);
  };

  if (a.mode == "inproc") {
    const st::StationLogs logs = st::run_stations(cfg, policy);
    maybe_write_log(a.out_a, logs.a);
    maybe_write_log(a.out_b, logs.b);
    const st::MatchResult res = st::match_coincidences(logs.a, logs.b, policy);
    write_output(dump(stations_summary(a, res)), a.out);
    return 0;
  }

  if (a.mode != "tcp") throw std::domain_error("stations: mode must be inproc or tcp");
  if (!a.listen.empty()) {
    // This process runs station A, receives station B's log over the socket,
    // and performs the match.
    auto [host, port] = parse_endpoint(a.listen);
    const int fd = st::tcp_listen(host, port);
    std::fprintf(stderr, "listening on %s:%u\n", host.c_str(), port);
    const auto log_a = st::single_station_log('A', cfg, policy);
    const auto log_b = st::tcp_receive_log(fd);
    ::close(fd);
    maybe_write_log(a.out_a, log_a);
    maybe_write_log(a.out_b, log_b);
    const st::MatchResult res = st::match_coincidences(log_a, log_b, policy);
    write_output(dump(stations_summary(a, res)), a.out);
    return 0;
  }
  if (!a.connect.empty()) {
    const auto [host, port] = parse_endpoint(a.connect);
    const auto log_b = st::single_station_log('B', cfg, policy);
    maybe_write_log(a.out_b, log_b);
    st::tcp_send_log(host, port, log_b);
    return 0;
  }
  throw std::domain_error("stations: tcp mode needs --listen or --connect");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geometric-algebra simulation of a two-station polarization experiment"};
  app.set_version_flag("--version", hopfsim::kVersion);
  app.require_subcommand(1);

  app.add_subcommand("verify", "run the runtime identity suite");

  auto* sim = app.add_subcommand("simulate", "correlation estimates at one setting pair");
  double alpha_deg = 0.0, beta_deg = 22.5;
  std::uint64_t trials = 1000, seed = 42;
  std::string estimator = "standard", format = "json", out_path;
  sim->add_option("--alpha-deg", alpha_deg, "station A polarizer angle, degrees");
  sim->add_option("--beta-deg", beta_deg, "station B polarizer angle, degrees");
  sim->add_option("--trials", trials)->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed);
  sim->add_option("--estimator", estimator)
      ->check(CLI::IsMember({"standard", "raw_normalized", "coincidence", "all"}));
  sim->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  sim->add_option("--out", out_path, "output file (stdout when omitted)");

  auto* curve = app.add_subcommand("curve", "standardized correlation swept over beta");
  double c_alpha = 0.0, beta_start = 0.0, beta_end = 180.0, beta_step = 5.0;
  std::uint64_t c_trials = 1000, c_seed = 42;
  std::string c_format = "csv", c_out;
  curve->add_option("--alpha-deg", c_alpha);
  curve->add_option("--beta-start", beta_start);
  curve->add_option("--beta-end", beta_end);
  curve->add_option("--beta-step", beta_step)->check(CLI::PositiveNumber);
  curve->add_option("--trials", c_trials)->check(CLI::PositiveNumber);
  curve->add_option("--seed", c_seed);
  curve->add_option("--format", c_format)->check(CLI::IsMember({"csv", "json"}));
  curve->add_option("--out", c_out);

  auto* chsh = app.add_subcommand("chsh", "CHSH string value and its ceiling at one quad");
  std::vector<double> angles{0.0, 45.0, 22.5, 67.5};
  std::uint64_t h_trials = 10000, h_seed = 42;
  bool analytic = false;
  std::string h_out;
  chsh->add_option("--angles", angles, "a,a',b,b' in degrees")->delimiter(',')->expected(4);
  chsh->add_option("--trials", h_trials)->check(CLI::PositiveNumber);
  chsh->add_option("--seed", h_seed);
  chsh->add_flag("--analytic", analytic, "closed-form correlation instead of sampling");
  chsh->add_option("--out", h_out);

  auto* scan = app.add_subcommand("scan", "exhaustive maximum of |S| over a setting grid");
  double grid_step = 7.5;
  std::uint64_t s_trials = 0, s_seed = 42;
  std::string s_out;
  scan->add_option("--grid-step", grid_step, "grid step in degrees, must divide 360")
      ->check(CLI::PositiveNumber);
  scan->add_option("--trials", s_trials, "0 scans the closed form");
  scan->add_option("--seed", s_seed);
  scan->add_option("--out", s_out);

  auto* stations = app.add_subcommand("stations", "two-station run with event logs");
  StationsArgs st_args;
  stations->add_option("--run-id", st_args.run_id);
  stations->add_option("--trials", st_args.trials)->check(CLI::PositiveNumber);
  stations->add_option("--seed", st_args.seed);
  stations->add_option("--angles-a", st_args.angles_a, "station A angle list, degrees")
      ->delimiter(',');
  stations->add_option("--angles-b", st_args.angles_b, "station B angle list, degrees")
      ->delimiter(',');
  stations->add_option("--mode", st_args.mode)->check(CLI::IsMember({"inproc", "tcp"}));
  stations->add_option("--listen", st_args.listen, "host:port to accept the partner log on");
  stations->add_option("--connect", st_args.connect, "host:port to send this station's log to");
  stations->add_option("--match", st_args.match)->check(CLI::IsMember({"by-trial", "by-time"}));
  stations->add_option("--window-ns", st_args.window_ns);
  stations->add_option("--jitter-ns", st_args.jitter_ns);
  stations->add_option("--out-a", st_args.out_a, "write station A's event log here");
  stations->add_option("--out-b", st_args.out_b, "write station B's event log here");
  stations->add_option("--out", st_args.out, "summary JSON (stdout when omitted)");

  auto* match = app.add_subcommand("match", "match two event-log files into coincidences");
  std::string in_a, in_b, m_match = "by-trial", m_out;
  std::int64_t m_window = 500;
  match->add_option("--in-a", in_a)->required()->check(CLI::ExistingFile);
  match->add_option("--in-b", in_b)->required()->check(CLI::ExistingFile);
  match->add_option("--match", m_match)->check(CLI::IsMember({"by-trial", "by-time"}));
  match->add_option("--window-ns", m_window);
  match->add_option("--out", m_out);

  auto* errorprop = app.add_subcommand("errorprop", "linear error propagation through f(w) = vw");
  double p = 1.0;
  std::vector<double> n_vec{0.0, 0.0, 1.0};
  std::uint64_t e_samples = 100000, e_seed = 42;
  std::string e_out;
  errorprop->add_option("--p", p)->check(CLI::Range(0.0, 1.0));
  errorprop->add_option("--n-vec", n_vec, "axis x,y,z")->delimiter(',')->expected(3);
  errorprop->add_option("--samples", e_samples)->check(CLI::PositiveNumber);
  errorprop->add_option("--seed", e_seed);
  errorprop->add_option("--out", e_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("verify")) return run_verify();
    if (app.got_subcommand(sim)) {
      const ordered_json rep =
          hopfsim::reports::simulate_report(alpha_deg, beta_deg, trials, seed, estimator);
      write_output(format == "csv" ? hopfsim::reports::simulate_csv(rep) : dump(rep), out_path);
    } else if (app.got_subcommand(curve)) {
      const auto points =
          hopfsim::reports::sweep_curve(c_alpha, beta_start, beta_end, beta_step, c_trials, c_seed);
      write_output(c_format == "csv"
                       ? hopfsim::reports::curve_csv(points)
                       : dump(hopfsim::reports::curve_json(c_alpha, points, c_trials, c_seed)),
                   c_out);
    } else if (app.got_subcommand(chsh)) {
      const std::array<double, 4> quad{angles[0], angles[1], angles[2], angles[3]};
      write_output(dump(hopfsim::reports::chsh_report_json(quad, h_trials, h_seed, analytic)),
                   h_out);
    } else if (app.got_subcommand(scan)) {
      write_output(dump(hopfsim::reports::scan_report_json(grid_step, s_trials, s_seed)), s_out);
    } else if (app.got_subcommand(stations)) {
      return run_stations_cmd(st_args);
    } else if (app.got_subcommand(match)) {
      std::ifstream fa(in_a), fb(in_b);
      const auto log_a = hopfsim::stations::read_ndjson(fa);
      const auto log_b = hopfsim::stations::read_ndjson(fb);
      hopfsim::stations::MatchPolicy policy;
      policy.mode = m_match == "by-time" ? hopfsim::stations::MatchPolicy::Mode::by_time_window
                                         : hopfsim::stations::MatchPolicy::Mode::by_trial_id;
      policy.window_ns = m_window;
      const auto res = hopfsim::stations::match_coincidences(log_a, log_b, policy);
      ordered_json rep = hopfsim::reports::match_report_json(res);
      rep["match_mode"] = m_match;
      write_output(dump(rep), m_out);
    } else if (app.got_subcommand(errorprop)) {
      const hopfsim::Vector3 n_hat{n_vec[0], n_vec[1], n_vec[2]};
      write_output(dump(hopfsim::reports::errorprop_report_json(p, n_hat, e_samples, e_seed)),
                   e_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
