#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hopfsim/stations.hpp"

using namespace hopfsim;
using namespace hopfsim::stations;

namespace {

bool same_trial(const MatchedTrial& x, const MatchedTrial& y) {
  return x.outcome.lambda == y.outcome.lambda && x.outcome.alpha == y.outcome.alpha &&
         x.outcome.beta == y.outcome.beta && x.outcome.raw_a == y.outcome.raw_a &&
         x.outcome.raw_b == y.outcome.raw_b && x.setting_a == y.setting_a &&
         x.setting_b == y.setting_b;
}

std::string serialize(std::span<const StationEvent> events) {
  std::ostringstream os;
  write_ndjson(os, events);
  return os.str();
}

StationsConfig demo_config(std::uint64_t trials) {
  StationsConfig cfg;
  cfg.run_id = "demo";
  cfg.trials = trials;
  cfg.master_seed = 42;
  cfg.angles_a_deg = {0.0, 45.0};
  cfg.angles_b_deg = {22.5, 67.5};
  return cfg;
}

}  // namespace

TEST_CASE("events serialize to one frozen NDJSON line each") {
  StationEvent e;
  e.run = "r1";
  e.trial = 3;
  e.station = 'A';
  e.setting = 1;
  e.angle_deg = 45.0;
  e.outcome = -1;
  e.t_ns = 3250;
  CHECK(to_ndjson_line(e) ==
        "{\"run\":\"r1\",\"trial\":3,\"station\":\"A\",\"setting\":1,"
        "\"angle_deg\":45.0,\"outcome\":-1,\"t_ns\":3250}\n");

  SECTION("round trip") {
    std::istringstream is(to_ndjson_line(e));
    const auto back = read_ndjson(is);
    REQUIRE(back.size() == 1);
    CHECK(to_ndjson_line(back[0]) == to_ndjson_line(e));
  }
}

TEST_CASE("log parsing reports the offending line and field") {
  SECTION("broken json carries the line number") {
    std::istringstream is("{\"run\":\"r\",\"trial\":0,\"station\":\"A\",\"setting\":0,"
                          "\"angle_deg\":0.0,\"outcome\":1,\"t_ns\":0}\nnot json\n");
    try {
      read_ndjson(is);
      FAIL("expected a parse error");
    } catch (const std::runtime_error& ex) {
      CHECK(std::string(ex.what()).find("line 2") != std::string::npos);
    }
  }
  SECTION("blank lines are skipped") {
    std::istringstream is("\n{\"run\":\"r\",\"trial\":0,\"station\":\"B\",\"setting\":0,"
                          "\"angle_deg\":0.0,\"outcome\":1,\"t_ns\":0}\n\n");
    CHECK(read_ndjson(is).size() == 1);
  }
  SECTION("out-of-range outcome") {
    std::istringstream is("{\"run\":\"r\",\"trial\":0,\"station\":\"A\",\"setting\":0,"
                          "\"angle_deg\":0.0,\"outcome\":2,\"t_ns\":0}\n");
    CHECK_THROWS_AS(read_ndjson(is), std::runtime_error);
  }
  SECTION("unknown station tag") {
    std::istringstream is("{\"run\":\"r\",\"trial\":0,\"station\":\"C\",\"setting\":0,"
                          "\"angle_deg\":0.0,\"outcome\":1,\"t_ns\":0}\n");
    CHECK_THROWS_AS(read_ndjson(is), std::runtime_error);
  }
  SECTION("missing field") {
    std::istringstream is("{\"run\":\"r\",\"trial\":0}\n");
    try {
      read_ndjson(is);
      FAIL("expected a field error");
    } catch (const std::runtime_error& ex) {
      CHECK(std::string(ex.what()).find("malformed station event") != std::string::npos);
    }
  }
}

TEST_CASE("station logs follow their own streams over the shared source") {
  StationsConfig cfg;
  cfg.run_id = "run";
  cfg.trials = 64;
  cfg.master_seed = 42;
  cfg.angles_a_deg = {0.0};
  cfg.angles_b_deg = {22.5};
  const StationLogs logs = run_stations(cfg, MatchPolicy{});

  REQUIRE(logs.a.size() == 64);
  REQUIRE(logs.b.size() == 64);
  const RngStream source{42, kStreamSource};
  for (std::uint64_t i = 0; i < 64; ++i) {
    CHECK(logs.a[i].station == 'A');
    CHECK(logs.a[i].trial == i);
    CHECK(logs.a[i].setting == 0);
    CHECK(logs.a[i].angle_deg == 0.0);
    CHECK(logs.a[i].outcome == source.sign(i));
    CHECK(logs.a[i].t_ns == static_cast<std::int64_t>(i) * kTrialPeriodNs);
    CHECK(logs.b[i].station == 'B');
    CHECK(logs.b[i].angle_deg == 22.5);
    CHECK(logs.b[i].outcome == -source.sign(i));
  }
}

TEST_CASE("configuration validation") {
  StationsConfig cfg = demo_config(0);
  CHECK_THROWS_AS(run_stations(cfg, MatchPolicy{}), std::domain_error);
  cfg = demo_config(4);
  cfg.angles_b_deg.clear();
  CHECK_THROWS_AS(run_stations(cfg, MatchPolicy{}), std::domain_error);

  MatchPolicy bad_window;
  bad_window.mode = MatchPolicy::Mode::by_time_window;
  bad_window.window_ns = 0;
  CHECK_THROWS_AS(run_stations(demo_config(4), bad_window), std::domain_error);

  MatchPolicy bad_jitter;
  bad_jitter.jitter_ns = -1;
  CHECK_THROWS_AS(run_stations(demo_config(4), bad_jitter), std::domain_error);

  CHECK_THROWS_AS(single_station_log('C', demo_config(4), MatchPolicy{}), std::domain_error);
}

TEST_CASE("setting choices are near-uniform over the angle list") {
  const StationsConfig cfg = demo_config(100000);
  const StationLogs logs = run_stations(cfg, MatchPolicy{});
  std::uint64_t zeros = 0;
  for (const auto& e : logs.a)
    if (e.setting == 0) ++zeros;
  // Binomial(n, 1/2) five-sigma band around n/2.
  const double sd = std::sqrt(100000.0 / 4.0);
  CHECK(std::abs(static_cast<double>(zeros) - 50000.0) <= 5.0 * sd);
}

TEST_CASE("matching by trial id reassembles every pair") {
  const StationsConfig cfg = demo_config(500);
  const StationLogs logs = run_stations(cfg, MatchPolicy{});
  const MatchResult res = match_coincidences(logs.a, logs.b, MatchPolicy{});

  REQUIRE(res.trials.size() == 500);
  CHECK(res.unmatched_a == 0);
  CHECK(res.unmatched_b == 0);

  SECTION("every pair is perfectly anticorrelated") {
    for (const auto& pe : per_pair_estimates(res.trials)) {
      CHECK(pe.coincidence == -1.0);
      CHECK(pe.counts.pp == 0);
      CHECK(pe.counts.mm == 0);
    }
  }
  SECTION("argument order does not matter") {
    const MatchResult rev = match_coincidences(logs.b, logs.a, MatchPolicy{});
    REQUIRE(rev.trials.size() == res.trials.size());
    for (std::size_t i = 0; i < res.trials.size(); ++i)
      CHECK(same_trial(res.trials[i], rev.trials[i]));
    CHECK(rev.unmatched_a == res.unmatched_a);
    CHECK(rev.unmatched_b == res.unmatched_b);
  }
  SECTION("a dropped event is counted, not invented") {
    std::vector<StationEvent> b_short(logs.b.begin(), logs.b.end() - 1);
    const MatchResult part = match_coincidences(logs.a, b_short, MatchPolicy{});
    CHECK(part.trials.size() == 499);
    CHECK(part.unmatched_a == 1);
    CHECK(part.unmatched_b == 0);
  }
}

TEST_CASE("matching rejects inconsistent logs") {
  const StationsConfig cfg = demo_config(8);
  const StationLogs logs = run_stations(cfg, MatchPolicy{});

  SECTION("duplicate trial id") {
    auto dup = logs.b;
    dup.push_back(dup.front());
    CHECK_THROWS_AS(match_coincidences(logs.a, dup, MatchPolicy{}), std::domain_error);
  }
  SECTION("disagreeing run ids") {
    auto other = logs.b;
    for (auto& e : other) e.run = "other";
    CHECK_THROWS_AS(match_coincidences(logs.a, other, MatchPolicy{}), std::domain_error);
  }
  SECTION("mixed run ids inside one log") {
    auto mixed = logs.b;
    mixed.back().run = "other";
    CHECK_THROWS_AS(match_coincidences(logs.a, mixed, MatchPolicy{}), std::domain_error);
  }
  SECTION("two logs from the same station") {
    CHECK_THROWS_AS(match_coincidences(logs.a, logs.a, MatchPolicy{}), std::domain_error);
  }
  SECTION("corrupted outcome") {
    auto bad = logs.b;
    bad.front().outcome = 0;
    CHECK_THROWS_AS(match_coincidences(logs.a, bad, MatchPolicy{}), std::domain_error);
  }
}

TEST_CASE("time-window matching reduces to trial matching without jitter") {
  const StationsConfig cfg = demo_config(300);
  const StationLogs logs = run_stations(cfg, MatchPolicy{});

  MatchPolicy by_time;
  by_time.mode = MatchPolicy::Mode::by_time_window;
  by_time.window_ns = kTrialPeriodNs / 2;
  const MatchResult timed = match_coincidences(logs.a, logs.b, by_time);
  const MatchResult keyed = match_coincidences(logs.a, logs.b, MatchPolicy{});

  REQUIRE(timed.trials.size() == keyed.trials.size());
  for (std::size_t i = 0; i < timed.trials.size(); ++i)
    CHECK(same_trial(timed.trials[i], keyed.trials[i]));
  CHECK(timed.unmatched_a == 0);
  CHECK(timed.unmatched_b == 0);
}

TEST_CASE("jitter past the window makes matches drop out") {
  const StationsConfig cfg = demo_config(400);
  MatchPolicy policy;
  policy.mode = MatchPolicy::Mode::by_time_window;
  policy.window_ns = 500;
  policy.jitter_ns = 1000;  // twice the window
  const StationLogs logs = run_stations(cfg, policy);

  SECTION("the two stations draw different jitter") {
    bool any_diff = false;
    for (std::size_t i = 0; i < logs.a.size(); ++i)
      any_diff = any_diff || logs.a[i].t_ns != logs.b[i].t_ns;
    CHECK(any_diff);
  }
  SECTION("accounting stays exact while coverage drops") {
    const MatchResult res = match_coincidences(logs.a, logs.b, policy);
    CHECK(res.trials.size() < 400);
    CHECK(res.trials.size() + res.unmatched_a == 400);
    CHECK(res.trials.size() + res.unmatched_b == 400);
  }
}

TEST_CASE("station A's log is untouched by station B's configuration") {
  StationsConfig cfg = demo_config(256);
  const std::string baseline = serialize(run_stations(cfg, MatchPolicy{}).a);

  cfg.angles_b_deg = {67.5, 22.5};  // permuted
  CHECK(serialize(run_stations(cfg, MatchPolicy{}).a) == baseline);

  cfg.angles_b_deg = {10.0, 80.0, 33.0};  // replaced outright
  CHECK(serialize(run_stations(cfg, MatchPolicy{}).a) == baseline);
}

TEST_CASE("stations plus matching reproduce the single-loop reference exactly") {
  const StationsConfig cfg = demo_config(4000);
  const StationLogs logs = run_stations(cfg, MatchPolicy{});
  const MatchResult res = match_coincidences(logs.a, logs.b, MatchPolicy{});
  const std::vector<MatchedTrial> mono = run_monolithic(cfg);

  REQUIRE(res.trials.size() == mono.size());
  for (std::size_t i = 0; i < mono.size(); ++i) {
    INFO("trial " << i);
    REQUIRE(same_trial(res.trials[i], mono[i]));
  }

  SECTION("per-pair estimates are bit-identical") {
    const auto from_stations = per_pair_estimates(res.trials);
    const auto from_mono = per_pair_estimates(mono);
    REQUIRE(from_stations.size() == 4);
    REQUIRE(from_mono.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& s = from_stations[i];
      const auto& m = from_mono[i];
      CHECK(s.setting_a == m.setting_a);
      CHECK(s.setting_b == m.setting_b);
      CHECK(s.alpha_deg == m.alpha_deg);
      CHECK(s.beta_deg == m.beta_deg);
      CHECK(s.n == m.n);
      CHECK(s.counts.pp == m.counts.pp);
      CHECK(s.counts.pm == m.counts.pm);
      CHECK(s.counts.mp == m.counts.mp);
      CHECK(s.counts.mm == m.counts.mm);
      CHECK(s.coincidence == m.coincidence);
      CHECK(s.standardized_scalar == m.standardized_scalar);
      CHECK(s.standardized_residual.yz == m.standardized_residual.yz);
      CHECK(s.standardized_residual.zx == m.standardized_residual.zx);
      CHECK(s.standardized_residual.xy == m.standardized_residual.xy);
      CHECK(s.coincidence == -1.0);
    }
  }
}

TEST_CASE("a log survives the TCP hop byte for byte") {
  StationsConfig cfg = demo_config(200);
  cfg.run_id = "tcp";
  const MatchPolicy policy{};
  const auto log_b = single_station_log('B', cfg, policy);

  std::uint16_t port = 0;
  const int listen_fd = tcp_listen("127.0.0.1", port);
  REQUIRE(port != 0);

  std::thread sender([&] { tcp_send_log("127.0.0.1", port, log_b); });
  const auto received = tcp_receive_log(listen_fd);
  sender.join();
  ::close(listen_fd);

  REQUIRE(received.size() == log_b.size());
  CHECK(serialize(received) == serialize(log_b));

  SECTION("matching the received log equals the in-process run") {
    const auto log_a = single_station_log('A', cfg, policy);
    const MatchResult over_tcp = match_coincidences(log_a, received, policy);
    const StationLogs local = run_stations(cfg, policy);
    const MatchResult inproc = match_coincidences(local.a, local.b, policy);
    REQUIRE(over_tcp.trials.size() == inproc.trials.size());
    for (std::size_t i = 0; i < inproc.trials.size(); ++i)
      CHECK(same_trial(over_tcp.trials[i], inproc.trials[i]));
  }
}
