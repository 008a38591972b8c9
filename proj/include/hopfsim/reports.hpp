#pragma once
// JSON and CSV views of library results. The command-line tool and the test
// harness share these builders so both surfaces agree on field names and on
// number formatting down to the byte. All numbers are serialized through
// nlohmann::json, which emits the shortest digit string that round-trips.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hopfsim/chsh.hpp"
#include "hopfsim/epr.hpp"
#include "hopfsim/error_prop.hpp"
#include "hopfsim/rng.hpp"
#include "hopfsim/stations.hpp"
#include "hopfsim/stats.hpp"
#include "hopfsim/version.hpp"

namespace hopfsim::reports {

using nlohmann::ordered_json;

inline std::string format_number(double x) { return nlohmann::json(x).dump(); }

inline ordered_json bivector_json(const Bivector& b) {
  return ordered_json{{"yz", b.yz}, {"zx", b.zx}, {"xy", b.xy}};
}

inline ordered_json quaternion_json(const Quaternion& q) {
  return ordered_json{
      {"scalar", q.s}, {"yz", q.b.yz}, {"zx", q.b.zx}, {"xy", q.b.xy}};
}

inline ordered_json estimate_json(const CorrelationEstimate& e) {
  return ordered_json{{"scalar_part", e.scalar_part},
                      {"bivector_residual", bivector_json(e.bivector_residual)},
                      {"residual_norm", e.residual_norm()},
                      {"stderr", e.standard_error},
                      {"n", e.n}};
}

inline ordered_json provenance_json(std::uint64_t seed, std::uint64_t trials,
                                    const std::string& command) {
  return ordered_json{
      {"seed", seed}, {"trials", trials}, {"version", kVersion}, {"command", command}};
}

namespace detail {

struct RawProductSummary {
  double mean = 0.0;
  bool alternates = false;
};

// Mean of the per-trial raw product A*B and whether its sign ever changes.
// On model records the product is the constant -1; the summary states that as
// a measurement rather than an assumption.
inline RawProductSummary raw_product_summary(double alpha, double beta, std::uint64_t n,
                                             const RngStream& source) {
  if (n == 0) throw std::domain_error("raw_product_summary: need at least one trial");
  std::int64_t sum = 0;
  int first = 0;
  bool alternates = false;
  for (std::uint64_t i = 0; i < n; ++i) {
    const int lam = source.sign(i);
    int prod = lam * -lam;
    if (i % kValidateStride == 0) {
      const Orientation o(lam);
      prod = raw_score_A(alpha, o) * raw_score_B(beta, o);
    }
    if (first == 0) first = prod;
    if (prod != first) alternates = true;
    sum += prod;
  }
  return {static_cast<double>(sum) / static_cast<double>(n), alternates};
}

}  // namespace detail

// One pair of settings, all estimators requested by name ("standard",
// "raw_normalized", "coincidence", or "all").
inline ordered_json simulate_report(double alpha_deg, double beta_deg, std::uint64_t trials,
                                    std::uint64_t seed, const std::string& estimator) {
  const double alpha = deg_to_rad(alpha_deg);
  const double beta = deg_to_rad(beta_deg);
  const RngStream source{seed, kStreamSource};
  const bool all = estimator == "all";

  ordered_json est = ordered_json::object();
  if (all || estimator == "standard")
    est["standard"] = estimate_json(correlate_standard(alpha, beta, trials, source));
  if (all || estimator == "raw_normalized")
    est["raw_normalized"] = estimate_json(correlate_raw_normalized(alpha, beta, trials, source));
  if (all || estimator == "coincidence") {
    const auto records = sample_trial_records(alpha, beta, trials, source);
    const CoincidenceCounts c = coincidence_counts(records);
    est["coincidence"] =
        ordered_json{{"value", coincidence_correlate(records)},
                     {"counts",
                      ordered_json{{"pp", c.pp}, {"pm", c.pm}, {"mp", c.mp}, {"mm", c.mm}}},
                     // The standardized estimate at the same angles, printed
                     // next to the count-based one so the discrepancy between
                     // them is visible in every report.
                     {"standardized_scalar",
                      correlate_standard(alpha, beta, trials, source).scalar_part},
                     {"n", records.size()}};
  }
  if (est.empty()) throw std::domain_error("simulate_report: unknown estimator " + estimator);

  const auto raw = detail::raw_product_summary(alpha, beta, trials, source);
  return ordered_json{{"alpha_deg", alpha_deg},
                      {"beta_deg", beta_deg},
                      {"analytic_scalar", analytic_correlation(alpha, beta)},
                      {"estimators", est},
                      {"raw_product_mean", raw.mean},
                      {"raw_product_alternates", raw.alternates},
                      {"provenance", provenance_json(seed, trials, "simulate")}};
}

// CSV projection of a simulate report: one row per estimator.
inline std::string simulate_csv(const ordered_json& report) {
  std::string out = "estimator,scalar,residual_norm,stderr,n\n";
  for (const auto& [name, e] : report.at("estimators").items()) {
    if (name == "coincidence") {
      out += name + "," + format_number(e.at("value").get<double>()) + ",0,0," +
             std::to_string(e.at("n").get<std::uint64_t>()) + "\n";
    } else {
      out += name + "," + format_number(e.at("scalar_part").get<double>()) + "," +
             format_number(e.at("residual_norm").get<double>()) + "," +
             format_number(e.at("stderr").get<double>()) + "," +
             std::to_string(e.at("n").get<std::uint64_t>()) + "\n";
    }
  }
  return out;
}

struct CurvePoint {
  double beta_deg = 0.0;
  CorrelationEstimate estimate;
};

// Standardized correlation swept over beta at fixed alpha. All points share
// one orientation sample, so the sweep is a function of the settings alone.
inline std::vector<CurvePoint> sweep_curve(double alpha_deg, double beta_start_deg,
                                           double beta_end_deg, double beta_step_deg,
                                           std::uint64_t trials, std::uint64_t seed) {
  if (!(beta_step_deg > 0.0)) throw std::domain_error("sweep_curve: step must be positive");
  if (beta_end_deg < beta_start_deg)
    throw std::domain_error("sweep_curve: end angle precedes start angle");
  const RngStream source{seed, kStreamSource};
  const auto steps =
      static_cast<std::uint64_t>((beta_end_deg - beta_start_deg) / beta_step_deg + 1e-9);
  std::vector<CurvePoint> out;
  out.reserve(steps + 1);
  for (std::uint64_t i = 0; i <= steps; ++i) {
    const double beta_deg = beta_start_deg + static_cast<double>(i) * beta_step_deg;
    out.push_back(CurvePoint{
        beta_deg, correlate_standard(deg_to_rad(alpha_deg), deg_to_rad(beta_deg), trials, source)});
  }
  return out;
}

inline std::string curve_csv(std::span<const CurvePoint> points) {
  std::string out = "beta_deg,scalar,residual_norm,stderr,n\n";
  for (const auto& p : points) {
    out += format_number(p.beta_deg) + "," + format_number(p.estimate.scalar_part) + "," +
           format_number(p.estimate.residual_norm()) + "," +
           format_number(p.estimate.standard_error) + "," + std::to_string(p.estimate.n) + "\n";
  }
  return out;
}

inline ordered_json curve_json(double alpha_deg, std::span<const CurvePoint> points,
                               std::uint64_t trials, std::uint64_t seed) {
  ordered_json rows = ordered_json::array();
  for (const auto& p : points) {
    rows.push_back(ordered_json{{"beta_deg", p.beta_deg},
                                {"scalar_part", p.estimate.scalar_part},
                                {"residual_norm", p.estimate.residual_norm()},
                                {"stderr", p.estimate.standard_error},
                                {"n", p.estimate.n}});
  }
  return ordered_json{{"alpha_deg", alpha_deg},
                      {"points", rows},
                      {"provenance", provenance_json(seed, trials, "curve")}};
}

inline ordered_json chsh_json(const ChshReport& rep) {
  return ordered_json{
      {"string_value", rep.string_value},
      {"bound_sine", rep.bound_sine},
      {"bound_cross", rep.bound_cross},
      {"qm_limit", rep.qm_limit},
      {"commutator_norms", ordered_json::array({rep.commutator_norms[0], rep.commutator_norms[1]})}};
}

inline ordered_json chsh_report_json(const std::array<double, 4>& angles_deg,
                                     std::uint64_t trials, std::uint64_t seed, bool analytic) {
  const AngleQuad q{deg_to_rad(angles_deg[0]), deg_to_rad(angles_deg[1]),
                    deg_to_rad(angles_deg[2]), deg_to_rad(angles_deg[3])};
  const ChshReport rep = analytic
                             ? analytic_chsh_report(q)
                             : variance_inequality_report(q, trials, RngStream{seed, kStreamSource});
  ordered_json out = chsh_json(rep);
  ordered_json full{{"angles_deg", ordered_json::array({angles_deg[0], angles_deg[1],
                                                        angles_deg[2], angles_deg[3]})},
                    {"mode", analytic ? "analytic" : "sampled"}};
  for (auto& [k, v] : out.items()) full[k] = v;
  full["provenance"] = provenance_json(seed, analytic ? 0 : trials, "chsh");
  return full;
}

inline ordered_json scan_report_json(double grid_step_deg, std::uint64_t trials,
                                     std::uint64_t seed) {
  const bool analytic = trials == 0;
  Correlator corr;
  if (analytic) {
    corr = analytic_correlation;
  } else {
    const RngStream source{seed, kStreamSource};
    corr = [trials, source](double a, double b) {
      return correlate_standard(a, b, trials, source).scalar_part;
    };
  }
  const ScanResult r = scan_max(grid_step_deg, corr);
  // Angles came off the grid, so snap the report back onto it instead of
  // printing radian round-trip noise.
  const auto snap = [grid_step_deg](double rad) {
    return grid_step_deg * static_cast<double>(std::llround(rad_to_deg(rad) / grid_step_deg));
  };
  return ordered_json{
      {"grid_step_deg", grid_step_deg},
      {"mode", analytic ? "analytic" : "sampled"},
      {"max_abs_string", r.value},
      {"max_quad_deg", ordered_json::array({snap(r.quad.alpha), snap(r.quad.alpha_p),
                                            snap(r.quad.beta), snap(r.quad.beta_p)})},
      {"bound_at_max", chsh_bound_sine(r.quad)},
      {"qm_limit", kQuantumLimit},
      {"provenance", provenance_json(seed, trials, "scan")}};
}

inline ordered_json pair_estimate_json(const stations::PairEstimate& pe) {
  return ordered_json{
      {"setting_a", pe.setting_a},
      {"setting_b", pe.setting_b},
      {"alpha_deg", pe.alpha_deg},
      {"beta_deg", pe.beta_deg},
      {"n", pe.n},
      {"counts", ordered_json{{"pp", pe.counts.pp},
                              {"pm", pe.counts.pm},
                              {"mp", pe.counts.mp},
                              {"mm", pe.counts.mm}}},
      {"coincidence", pe.coincidence},
      {"standardized_scalar", pe.standardized_scalar},
      {"standardized_residual", bivector_json(pe.standardized_residual)}};
}

inline ordered_json match_report_json(const stations::MatchResult& res) {
  const auto pairs = stations::per_pair_estimates(res.trials);
  ordered_json rows = ordered_json::array();
  for (const auto& pe : pairs) rows.push_back(pair_estimate_json(pe));
  return ordered_json{{"matched", res.trials.size()},
                      {"unmatched_a", res.unmatched_a},
                      {"unmatched_b", res.unmatched_b},
                      {"pairs", rows}};
}

inline ordered_json errorprop_report_json(double p, const Vector3& n_hat, std::uint64_t samples,
                                          std::uint64_t seed) {
  const RandomBivectorSpec spec{p, n_hat};
  spec.validate();
  const Bivector v = dual(n_hat);
  const RngStream source{seed, kStreamSource};
  const PropagationResult res = propagate(v, spec, samples, source);
  const double taylor = taylor_linear_check(v, spec, samples, source);
  return ordered_json{{"p", p},
                      {"n_hat", ordered_json::array({n_hat.x, n_hat.y, n_hat.z})},
                      {"v", bivector_json(v)},
                      {"m_w", bivector_json(res.m_w)},
                      {"sigma_w", res.sigma_w},
                      {"m_A", res.m_A},
                      {"sigma_A", bivector_json(res.sigma_A)},
                      {"q_minus", quaternion_json(res.q_minus)},
                      {"q_plus", quaternion_json(res.q_plus)},
                      {"fraction_within_sigma", res.fraction_within_sigma},
                      {"slope", bivector_json(v)},
                      {"taylor_max_deviation", taylor},
                      {"n", res.n},
                      {"provenance", provenance_json(seed, samples, "errorprop")}};
}

}  // namespace hopfsim::reports
