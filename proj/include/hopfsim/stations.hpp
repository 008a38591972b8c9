#pragma once
// Two-station event protocol. Each station owns its random streams and its
// event log; the only shared input is the read-only orientation sequence the
// source emitted. Logs serialize as newline-delimited JSON, one event per
// line, and can be re-matched from files or across a TCP stream socket
// without changing a single byte of the analysis inputs.

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "json.hpp"

#include "hopfsim/epr.hpp"
#include "hopfsim/multivector.hpp"
#include "hopfsim/rng.hpp"
#include "hopfsim/stats.hpp"

namespace hopfsim::stations {

inline constexpr std::int64_t kTrialPeriodNs = 1000;

struct StationEvent {
  std::string run;
  std::uint64_t trial = 0;
  char station = 'A';        // 'A' or 'B'
  std::uint32_t setting = 0; // index into the station's angle list
  double angle_deg = 0.0;
  int outcome = 0;           // -1 or +1
  std::int64_t t_ns = 0;
};

// Wire format: {"run","trial","station","setting","angle_deg","outcome","t_ns"}
inline nlohmann::ordered_json to_json(const StationEvent& e) {
  return nlohmann::ordered_json{{"run", e.run},
                                {"trial", e.trial},
                                {"station", std::string(1, e.station)},
                                {"setting", e.setting},
                                {"angle_deg", e.angle_deg},
                                {"outcome", e.outcome},
                                {"t_ns", e.t_ns}};
}

inline std::string to_ndjson_line(const StationEvent& e) { return to_json(e).dump() + "\n"; }

inline StationEvent event_from_json(const nlohmann::json& j) {
  StationEvent e;
  try {
    e.run = j.at("run").get<std::string>();
    e.trial = j.at("trial").get<std::uint64_t>();
    const auto st = j.at("station").get<std::string>();
    if (st != "A" && st != "B") throw std::runtime_error("station must be \"A\" or \"B\"");
    e.station = st[0];
    e.setting = j.at("setting").get<std::uint32_t>();
    e.angle_deg = j.at("angle_deg").get<double>();
    e.outcome = j.at("outcome").get<int>();
    if (e.outcome != -1 && e.outcome != +1) throw std::runtime_error("outcome must be -1 or +1");
    e.t_ns = j.at("t_ns").get<std::int64_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw std::runtime_error(std::string("malformed station event: ") + ex.what());
  }
  return e;
}

inline void write_ndjson(std::ostream& os, std::span<const StationEvent> events) {
  for (const auto& e : events) os << to_ndjson_line(e);
}

inline std::vector<StationEvent> read_ndjson(std::istream& is) {
  std::vector<StationEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": " + ex.what());
    }
    out.push_back(event_from_json(j));
  }
  return out;
}

struct StationsConfig {
  std::string run_id;
  std::uint64_t trials = 0;
  std::uint64_t master_seed = 0;
  std::vector<double> angles_a_deg;
  std::vector<double> angles_b_deg;

  void validate() const {
    if (trials == 0) throw std::domain_error("StationsConfig: trials must be >= 1");
    if (angles_a_deg.empty() || angles_b_deg.empty())
      throw std::domain_error("StationsConfig: both stations need at least one angle");
  }
};

struct MatchPolicy {
  enum class Mode { by_trial_id, by_time_window };
  Mode mode = Mode::by_trial_id;
  std::int64_t window_ns = kTrialPeriodNs / 2;  // time mode only
  std::int64_t jitter_ns = 0;                   // injected into each event timestamp

  void validate() const {
    if (mode == Mode::by_time_window && window_ns <= 0)
      throw std::domain_error("MatchPolicy: time-window matching needs window_ns > 0");
    if (jitter_ns < 0) throw std::domain_error("MatchPolicy: jitter must be >= 0");
  }
};

namespace detail {

// One station's full event log. Receives nothing of the other station: only
// the shared orientation sequence, its own angle list and its own streams.
inline std::vector<StationEvent> station_log(char station, const StationsConfig& cfg,
                                             std::int64_t jitter_ns,
                                             std::span<const std::int8_t> lambdas) {
  const bool is_a = station == 'A';
  const auto& angles = is_a ? cfg.angles_a_deg : cfg.angles_b_deg;
  const RngStream settings{cfg.master_seed, is_a ? kStreamSettingsA : kStreamSettingsB};
  const RngStream jitter{cfg.master_seed, is_a ? kStreamJitterA : kStreamJitterB};

  std::vector<StationEvent> log;
  log.reserve(cfg.trials);
  for (std::uint64_t i = 0; i < cfg.trials; ++i) {
    const int lam = lambdas[i];
    const auto setting = static_cast<std::uint32_t>(settings.pick(i, angles.size()));
    const double angle_deg = angles[setting];
    const int outcome = is_a ? lam : -lam;
    if (i % kValidateStride == 0) {
      const Orientation o(lam);
      const int full = is_a ? raw_score_A(deg_to_rad(angle_deg), o)
                            : raw_score_B(deg_to_rad(angle_deg), o);
      if (full != outcome) throw std::logic_error("station_log: outcome validation failed");
    }
    log.push_back(StationEvent{cfg.run_id, i, station, setting, angle_deg, outcome,
                               static_cast<std::int64_t>(i) * kTrialPeriodNs +
                                   jitter.jitter(i, jitter_ns)});
  }
  return log;
}

}  // namespace detail

struct StationLogs {
  std::vector<StationEvent> a;
  std::vector<StationEvent> b;
};

// Runs both stations over one shared orientation sequence. The stations run
// on separate threads and share no mutable state; each log is a pure function
// of (seed, own streams, own angle list).
inline StationLogs run_stations(const StationsConfig& cfg, const MatchPolicy& policy) {
  cfg.validate();
  policy.validate();
  const RngStream source{cfg.master_seed, kStreamSource};
  std::vector<std::int8_t> lambdas(cfg.trials);
  for (std::uint64_t i = 0; i < cfg.trials; ++i)
    lambdas[i] = static_cast<std::int8_t>(source.sign(i));

  StationLogs logs;
  std::exception_ptr b_error;
  std::thread b_thread([&] {
    try {
      logs.b = detail::station_log('B', cfg, policy.jitter_ns, lambdas);
    } catch (...) {
      b_error = std::current_exception();
    }
  });
  logs.a = detail::station_log('A', cfg, policy.jitter_ns, lambdas);
  b_thread.join();
  if (b_error) std::rethrow_exception(b_error);
  return logs;
}

// One station's log alone, for a process hosting a single station.
inline std::vector<StationEvent> single_station_log(char station, const StationsConfig& cfg,
                                                    const MatchPolicy& policy) {
  cfg.validate();
  policy.validate();
  if (station != 'A' && station != 'B')
    throw std::domain_error("single_station_log: station must be 'A' or 'B'");
  const RngStream source{cfg.master_seed, kStreamSource};
  std::vector<std::int8_t> lambdas(cfg.trials);
  for (std::uint64_t i = 0; i < cfg.trials; ++i)
    lambdas[i] = static_cast<std::int8_t>(source.sign(i));
  return detail::station_log(station, cfg, policy.jitter_ns, lambdas);
}

struct MatchedTrial {
  TrialOutcome outcome;
  std::uint32_t setting_a = 0;
  std::uint32_t setting_b = 0;
};

struct MatchResult {
  std::vector<MatchedTrial> trials;
  std::uint64_t unmatched_a = 0;
  std::uint64_t unmatched_b = 0;
};

namespace detail {

inline MatchedTrial pair_events(const StationEvent& ea, const StationEvent& eb) {
  if (ea.station != 'A' || eb.station != 'B')
    throw std::domain_error("match_coincidences: log passed for the wrong station");
  if (ea.outcome != -1 && ea.outcome != +1)
    throw std::domain_error("match_coincidences: outcome is not +-1");
  MatchedTrial m;
  // The source's orientation is recoverable from station A's raw score.
  m.outcome.lambda = static_cast<std::int8_t>(ea.outcome);
  m.outcome.alpha = deg_to_rad(ea.angle_deg);
  m.outcome.beta = deg_to_rad(eb.angle_deg);
  m.outcome.raw_a = static_cast<std::int8_t>(ea.outcome);
  m.outcome.raw_b = static_cast<std::int8_t>(eb.outcome);
  m.setting_a = ea.setting;
  m.setting_b = eb.setting;
  return m;
}

}  // namespace detail

// Accepts the two logs in either order; the result is keyed by station tag,
// so match(A,B) and match(B,A) are identical.
inline MatchResult match_coincidences(std::span<const StationEvent> first,
                                      std::span<const StationEvent> second,
                                      const MatchPolicy& policy) {
  policy.validate();
  auto check_log = [](std::span<const StationEvent> log) {
    for (const auto& e : log) {
      if (e.station != log.front().station)
        throw std::domain_error("match_coincidences: one log mixes station tags");
      if (e.run != log.front().run)
        throw std::domain_error("match_coincidences: one log mixes run ids");
      if (e.outcome != -1 && e.outcome != +1)
        throw std::domain_error("match_coincidences: outcome is not +-1");
    }
  };
  check_log(first);
  check_log(second);
  if (!first.empty() && !second.empty()) {
    if (first.front().run != second.front().run)
      throw std::domain_error("match_coincidences: run ids disagree between logs");
    if (first.front().station == second.front().station)
      throw std::domain_error("match_coincidences: both logs carry the same station tag");
  }
  const bool swapped = !first.empty() && first.front().station == 'B';
  const std::span<const StationEvent> log_a = swapped ? second : first;
  const std::span<const StationEvent> log_b = swapped ? first : second;

  MatchResult res;
  if (policy.mode == MatchPolicy::Mode::by_trial_id) {
    std::map<std::uint64_t, const StationEvent*> b_by_trial;
    for (const auto& e : log_b)
      if (!b_by_trial.emplace(e.trial, &e).second)
        throw std::domain_error("match_coincidences: duplicate trial id in station B log");
    std::map<std::uint64_t, const StationEvent*> a_by_trial;
    for (const auto& e : log_a)
      if (!a_by_trial.emplace(e.trial, &e).second)
        throw std::domain_error("match_coincidences: duplicate trial id in station A log");

    for (const auto& [trial, ea] : a_by_trial) {
      const auto it = b_by_trial.find(trial);
      if (it == b_by_trial.end()) {
        ++res.unmatched_a;
        continue;
      }
      res.trials.push_back(detail::pair_events(*ea, *it->second));
    }
    res.unmatched_b = log_b.size() - res.trials.size();
    return res;
  }

  auto by_time = [](std::span<const StationEvent> log) {
    std::vector<const StationEvent*> v;
    v.reserve(log.size());
    for (const auto& e : log) v.push_back(&e);
    std::sort(v.begin(), v.end(), [](const StationEvent* x, const StationEvent* y) {
      return x->t_ns != y->t_ns ? x->t_ns < y->t_ns : x->trial < y->trial;
    });
    return v;
  };
  const auto a_sorted = by_time(log_a);
  const auto b_sorted = by_time(log_b);

  std::size_t i = 0, j = 0;
  while (i < a_sorted.size() && j < b_sorted.size()) {
    const std::int64_t dt = a_sorted[i]->t_ns - b_sorted[j]->t_ns;
    if (dt > policy.window_ns) {
      ++j;
      ++res.unmatched_b;
    } else if (-dt > policy.window_ns) {
      ++i;
      ++res.unmatched_a;
    } else {
      res.trials.push_back(detail::pair_events(*a_sorted[i], *b_sorted[j]));
      ++i;
      ++j;
    }
  }
  res.unmatched_a += a_sorted.size() - i;
  res.unmatched_b += b_sorted.size() - j;
  return res;
}

// Single-loop reference: the same trials the two stations would log, produced
// by one walk over the shared streams. Stations mode must reproduce these
// records bit for bit.
inline std::vector<MatchedTrial> run_monolithic(const StationsConfig& cfg) {
  cfg.validate();
  const RngStream source{cfg.master_seed, kStreamSource};
  const RngStream set_a{cfg.master_seed, kStreamSettingsA};
  const RngStream set_b{cfg.master_seed, kStreamSettingsB};

  std::vector<MatchedTrial> out;
  out.reserve(cfg.trials);
  for (std::uint64_t i = 0; i < cfg.trials; ++i) {
    const int lam = source.sign(i);
    const auto sa = static_cast<std::uint32_t>(set_a.pick(i, cfg.angles_a_deg.size()));
    const auto sb = static_cast<std::uint32_t>(set_b.pick(i, cfg.angles_b_deg.size()));
    MatchedTrial m;
    m.outcome.lambda = static_cast<std::int8_t>(lam);
    m.outcome.alpha = deg_to_rad(cfg.angles_a_deg[sa]);
    m.outcome.beta = deg_to_rad(cfg.angles_b_deg[sb]);
    m.outcome.raw_a = static_cast<std::int8_t>(lam);
    m.outcome.raw_b = static_cast<std::int8_t>(-lam);
    if (i % kValidateStride == 0) {
      const Orientation o(lam);
      if (raw_score_A(m.outcome.alpha, o) != m.outcome.raw_a ||
          raw_score_B(m.outcome.beta, o) != m.outcome.raw_b)
        throw std::logic_error("run_monolithic: outcome validation failed");
    }
    m.setting_a = sa;
    m.setting_b = sb;
    out.push_back(m);
  }
  return out;
}

struct PairEstimate {
  std::uint32_t setting_a = 0;
  std::uint32_t setting_b = 0;
  double alpha_deg = 0.0;
  double beta_deg = 0.0;
  std::uint64_t n = 0;
  CoincidenceCounts counts;
  double coincidence = 0.0;
  double standardized_scalar = 0.0;
  Bivector standardized_residual;
};

// Groups matched trials by setting pair and runs both estimators per group.
// Accumulation is per group in trial order, so results do not depend on how
// the records were produced.
inline std::vector<PairEstimate> per_pair_estimates(std::span<const MatchedTrial> trials) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<TrialOutcome>> groups;
  for (const auto& t : trials) groups[{t.setting_a, t.setting_b}].push_back(t.outcome);

  std::vector<PairEstimate> out;
  out.reserve(groups.size());
  for (const auto& [key, records] : groups) {
    PairEstimate pe;
    pe.setting_a = key.first;
    pe.setting_b = key.second;
    pe.alpha_deg = rad_to_deg(records.front().alpha);
    pe.beta_deg = rad_to_deg(records.front().beta);
    pe.n = records.size();
    pe.counts = coincidence_counts(records);
    pe.coincidence = coincidence_correlate(records);

    const ScoreProductParts parts =
        score_product_parts(records.front().alpha, records.front().beta);
    std::int64_t lam_sum = 0;
    for (const auto& r : records) lam_sum += r.lambda;
    pe.standardized_scalar = parts.scalar;
    pe.standardized_residual =
        parts.bivector_at_plus *
        (static_cast<double>(lam_sum) / static_cast<double>(records.size()));
    out.push_back(pe);
  }
  return out;
}

// TCP transport. One side listens and collects, the other connects and
// streams its NDJSON log. The payload on the wire is byte-identical to the
// file format, so a captured stream is itself a valid log file.

inline int tcp_listen(const std::string& host, std::uint16_t& port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("tcp_listen: socket() failed");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::runtime_error("tcp_listen: bad host address " + host);
  }
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    throw std::runtime_error("tcp_listen: bind failed on " + host + ":" + std::to_string(port));
  }
  if (::listen(fd, 1) != 0) {
    ::close(fd);
    throw std::runtime_error("tcp_listen: listen failed");
  }
  if (port == 0) {
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len) != 0) {
      ::close(fd);
      throw std::runtime_error("tcp_listen: getsockname failed");
    }
    port = ntohs(bound.sin_port);
  }
  return fd;
}

inline std::vector<StationEvent> tcp_receive_log(int listen_fd) {
  const int conn = ::accept(listen_fd, nullptr, nullptr);
  if (conn < 0) throw std::runtime_error("tcp_receive_log: accept failed");
  std::string buf;
  char chunk[4096];
  for (;;) {
    const ssize_t got = ::read(conn, chunk, sizeof chunk);
    if (got < 0) {
      if (errno == EINTR) continue;
      ::close(conn);
      throw std::runtime_error("tcp_receive_log: read failed");
    }
    if (got == 0) break;
    buf.append(chunk, static_cast<std::size_t>(got));
  }
  ::close(conn);
  std::istringstream is(buf);
  return read_ndjson(is);
}

inline void tcp_send_log(const std::string& host, std::uint16_t port,
                         std::span<const StationEvent> events) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw std::runtime_error("tcp_send_log: bad host address " + host);

  int fd = -1;
  // The listener may still be setting up; retry the connect briefly.
  for (int attempt = 0; attempt < 50; ++attempt) {
    fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("tcp_send_log: socket() failed");
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) break;
    ::close(fd);
    fd = -1;
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  if (fd < 0)
    throw std::runtime_error("tcp_send_log: could not connect to " + host + ":" +
                             std::to_string(port));

  std::string payload;
  for (const auto& e : events) payload += to_ndjson_line(e);
  std::size_t off = 0;
  while (off < payload.size()) {
    const ssize_t sent = ::send(fd, payload.data() + off, payload.size() - off, 0);
    if (sent < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw std::runtime_error("tcp_send_log: send failed");
    }
    off += static_cast<std::size_t>(sent);
  }
  ::close(fd);
}

}  // namespace hopfsim::stations
