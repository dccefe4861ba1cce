// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "srfc/cli.hpp"
#include "srfc/qp_oracle.hpp"
#include "support.hpp"

using namespace srfc;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kConvergenceRatio = 1e-2;
constexpr double kVelocityFraction = 0.05;
constexpr double kFinalWindow = 0.2;
constexpr double kSaturationTol = 1e-12;
constexpr int kQpTrials = 1000;
constexpr int kOracleGrid = 2000;
constexpr double kKktTol = 1e-9;
constexpr int kGradientTrials = 1000;
constexpr double kFdStep = 1e-6;
constexpr double kFdRelTol = 1e-6;
constexpr double kOrderLo = 1.7, kOrderHi = 2.3;
constexpr double kFitSlack = 1.25;
constexpr double kEstimatorTol = 1e-3;
constexpr double kPeakFraction = 0.05;
constexpr double kFilteredFraction = 0.05;
constexpr double kWarmup = 1.0;

struct Outcome {
  bool pass;
  std::string detail;
};

struct Run {
  Scenario scenario;
  TrajectoryLog log;
  std::optional<std::string> abort;
};

Run simulate(Scenario s) {
  Run r{std::move(s), {}, std::nullopt};
  try {
    r.log = srfc::run(r.scenario);
  } catch (const SimulationAbort& e) {
    r.log = e.log();
    r.abort = std::string(to_string(e.kind())) + " " + e.what();
  }
  return r;
}

std::map<std::string, Run>& shipped() {
  static std::map<std::string, Run> runs = [] {
    std::map<std::string, Run> m;
    for (const auto& name : fixtures::shipped_scenarios()) m.emplace(name, simulate(fixtures::load(name)));
    return m;
  }();
  return runs;
}

std::string fmt(double v) { return format_number(v); }

bool any_abort(std::string& why) {
  for (const auto& [name, r] : shipped())
    if (r.abort) {
      why = name + " aborted: " + *r.abort;
      return true;
    }
  return false;
}

Outcome nominal_convergence() {
  const Run& r = shipped().at("a_nominal.json");
  if (r.abort) return {false, "aborted: " + *r.abort};
  const auto& recs = r.log.records;
  const double e0 = recs.front().formation_error, eT = recs.back().formation_error;
  const bool leaders_in = recs.back().all_leaders_in_region;
  if (!r.log.t_f) return {false, "leaders never all inside the target"};
  const double T = recs.back().t;
  const double v0 = r.scenario.reference.v0;
  double worst = 0.0;
  for (const auto& rec : recs) {
    if (rec.t < (1.0 - kFinalWindow) * T || rec.t < *r.log.t_f) continue;
    const Vec2 vd = reference_velocity(r.scenario.reference, rec.t).velocity;
    for (const auto& a : rec.agents) worst = std::max(worst, norm(a.velocity - vd));
  }
  const double vlim = kVelocityFraction * std::max(1.0, v0);
  const bool ok = eT <= kConvergenceRatio * e0 && leaders_in && worst <= vlim;
  return {ok, "e_f(T)/e_f(0)=" + fmt(eT / e0) + " leaders_in=" + (leaders_in ? "yes" : "no") + " t_f=" +
                  fmt(*r.log.t_f) + " max|v-v_d| (final window)=" + fmt(worst) + " limit " + fmt(vlim)};
}

Outcome connectivity() {
  std::string why;
  if (any_abort(why)) return {false, why};
  std::size_t steps = 0;
  for (const auto& [name, r] : shipped()) {
    const auto& initial = r.log.records.front().edges;
    for (const auto& rec : r.log.records) {
      ++steps;
      if (!rec.connected) return {false, name + " disconnected at t=" + fmt(rec.t)};
      for (const auto& e : initial)
        if (std::find(rec.edges.begin(), rec.edges.end(), e) == rec.edges.end())
          return {false, name + " lost initial edge " + std::to_string(e.first) + "-" + std::to_string(e.second) +
                             " at t=" + fmt(rec.t)};
    }
  }
  return {true, std::to_string(steps) + " records over " + std::to_string(shipped().size()) + " scenarios"};
}

Outcome safety() {
  std::ostringstream msg;
  bool ok = true;
  for (const auto& [name, r] : shipped()) {
    if (r.scenario.obstacles.empty()) continue;
    const auto& p = r.scenario.params;
    if (p.k1 != 5 || p.k0 != 1 || p.delta_ex != 0.5 || p.delta_in != 0.1) {
      ok = false;
      msg << name << ": unexpected barrier parameters; ";
    }
    if (r.abort) {
      ok = false;
      msg << name << " aborted: " << *r.abort << "; ";
      continue;
    }
    double dmin = kEmptyMargin, hmin = kEmptyMargin;
    for (const auto& rec : r.log.records) {
      dmin = std::min(dmin, rec.min_pair_distance);
      hmin = std::min(hmin, rec.min_h_external);
    }
    const auto relaxed = r.log.count(Event::Kind::relaxed_qp);
    const bool pass = dmin >= p.delta_in - kDiscretizationTol && hmin >= -kDiscretizationTol && relaxed == 0;
    ok = ok && pass;
    msg << name << ": min dist " << fmt(dmin) << ", min h_ext " << fmt(hmin) << ", relaxed " << relaxed << "; ";
  }
  return {ok, msg.str()};
}

Outcome saturation() {
  double worst = -kEmptyMargin;
  std::string where;
  for (const auto& [name, r] : shipped()) {
    for (const auto& rec : r.log.records)
      for (const auto& a : rec.agents) {
        const double excess = inf_norm(a.control) - r.scenario.params.u_max;
        if (excess > worst) {
          worst = excess;
          where = name + " t=" + fmt(rec.t);
        }
      }
  }
  return {worst <= kSaturationTol, "max(|u|_inf - u_max)=" + fmt(worst) + " at " + where};
}

Outcome qp_correctness() {
  std::mt19937_64 rng(20240517);
  const double gap_tol = std::pow(2.0 * 5.0 / kOracleGrid, 2);
  int relaxed = 0, worst_k = -1;
  double worst_gap = 0.0;
  for (int k = 0; k < kQpTrials; ++k) {
    const QpProblem p = fixtures::random_problem(rng);
    const QpSolution s = solve(p);
    const OracleResult o = oracle_solve_detailed(p, kOracleGrid);
    double gap = std::abs(objective(p, s.z) - objective(p, o.z));
    if (s.status == QpStatus::optimal) {
      if (!o.feasible) return {false, "trial " + std::to_string(k) + ": oracle found no feasible point"};
      const auto kkt = certify(p, s);
      if (!kkt.passes(kKktTol))
        return {false, "trial " + std::to_string(k) + ": KKT stationarity " + fmt(kkt.stationarity) + " primal " +
                           fmt(kkt.primal) + " dual " + fmt(kkt.dual) + " compl " + fmt(kkt.complementarity)};
    } else {
      ++relaxed;
      if (o.feasible) return {false, "trial " + std::to_string(k) + ": relaxed but oracle is feasible"};
      gap = std::max(gap, std::abs(s.slack - o.violation));
    }
    if (gap > worst_gap) {
      worst_gap = gap;
      worst_k = k;
    }
  }
  return {worst_gap <= gap_tol, std::to_string(kQpTrials) + " problems (" + std::to_string(relaxed) +
                                    " relaxed), worst gap " + fmt(worst_gap) + " (trial " + std::to_string(worst_k) +
                                    ") limit " + fmt(gap_tol)};
}

double pair_sum(const std::vector<Vec2>& p, const std::vector<Edge>& edges, const Scenario& s) {
  double f = 0.0;
  for (const auto& [i, j] : edges)
    f += potential(p[i], p[j], s.formation.displacement(i, j), s.params.r, s.params.mu);
  return f;
}

double pair_sum_rate(const StepRecord& rec, const Scenario& s) {
  std::vector<Vec2> p;
  for (const auto& a : rec.agents) p.push_back(a.position);
  double rate = 0.0;
  for (const auto& [i, j] : rec.edges) {
    rate += dot(rec.agents[i].velocity, potential_gradient(p[i], p[j], s.formation.displacement(i, j), s.params.r, s.params.mu));
    rate += dot(rec.agents[j].velocity, potential_gradient(p[j], p[i], s.formation.displacement(j, i), s.params.r, s.params.mu));
  }
  return rate;
}

Outcome gradient_oracle() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double two_pi = 2.0 * std::acos(-1.0);
  double worst = 0.0;
  for (int k = 0; k < kGradientTrials; ++k) {
    const double r = 2.0 + 8.0 * u01(rng);
    const double mu = r * r * (1e-3 + 0.05 * u01(rng));
    auto in_disc = [&](double radius) {
      const double rho = radius * std::sqrt(u01(rng)), th = two_pi * u01(rng);
      return Vec2{rho * std::cos(th), rho * std::sin(th)};
    };
    const Vec2 pj = in_disc(10.0);
    const Vec2 pi = pj + in_disc(0.9 * r);
    const Vec2 d = in_disc(0.9 * r);
    const Vec2 g = potential_gradient(pi, pj, d, r, mu);
    const Vec2 ex{kFdStep, 0.0}, ey{0.0, kFdStep};
    const Vec2 fd{(potential(pi + ex, pj, d, r, mu) - potential(pi - ex, pj, d, r, mu)) / (2 * kFdStep),
                  (potential(pi + ey, pj, d, r, mu) - potential(pi - ey, pj, d, r, mu)) / (2 * kFdStep)};
    worst = std::max(worst, norm(fd - g) / norm(g));
  }
  if (worst > kFdRelTol) return {false, "worst relative error " + fmt(worst)};

  // One-step identity f(t+h) - f(t) = h * rate(t) + O(h^2) along the nominal run.
  const Run& run = shipped().at("a_nominal.json");
  if (run.abort) return {false, "nominal run aborted"};
  const auto& recs = run.log.records;
  const double dt = run.scenario.dt;
  auto positions = [&](std::size_t k) {
    std::vector<Vec2> p;
    for (const auto& a : recs[k].agents) p.push_back(a.position);
    return p;
  };
  std::ostringstream msg;
  msg << "gradient worst rel err " << fmt(worst) << "; orders";
  bool ok = true;
  for (const std::size_t k : {500u, 1000u, 2000u, 3000u}) {
    if (k + 4 >= recs.size()) return {false, "trajectory too short"};
    const auto& edges = recs[k].edges;
    const double f0 = pair_sum(positions(k), edges, run.scenario);
    const double rate = pair_sum_rate(recs[k], run.scenario);
    double err[3];
    for (int m = 0; m < 3; ++m) {
      const std::size_t step = 1u << m;
      err[m] = std::abs(pair_sum(positions(k + step), edges, run.scenario) - f0 - step * dt * rate);
    }
    const double c_fit = err[2] / std::pow(4 * dt, 2);
    const double o1 = std::log2(err[1] / err[0]), o2 = std::log2(err[2] / err[1]);
    ok = ok && o1 >= kOrderLo && o1 <= kOrderHi && o2 >= kOrderLo && o2 <= kOrderHi &&
         err[0] <= kFitSlack * c_fit * dt * dt && err[1] <= kFitSlack * c_fit * 4 * dt * dt;
    msg << " t=" << fmt(recs[k].t) << ":" << fmt(std::round(o1 * 100) / 100) << "/"
        << fmt(std::round(o2 * 100) / 100) << " (C=" << fmt(std::round(c_fit * 1e4) / 1e4) << ")";
  }
  return {ok, msg.str()};
}

Outcome estimator_bound() {
  std::string why;
  if (any_abort(why)) return {false, why};
  std::ostringstream msg;
  bool ok = true;
  for (const auto& [name, r] : shipped()) {
    double worst = 0.0;
    for (const auto& rec : r.log.records) worst = std::max(worst, rec.max_estimator_error);
    const double limit = error_bound(r.scenario.params.u_max, r.scenario.params.eta) + kEstimatorTol;
    ok = ok && worst <= limit;
    msg << name << ": " << fmt(worst) << "/" << fmt(limit) << "; ";
  }
  return {ok, msg.str()};
}

int count_peaks(const TrajectoryLog& log) {
  const auto& rs = log.records;
  const double floor = kPeakFraction * rs.front().formation_error;
  int peaks = 0;
  for (std::size_t k = 1; k + 1 < rs.size(); ++k) {
    const double e = rs[k].formation_error;
    if (e > floor && e > rs[k - 1].formation_error && e >= rs[k + 1].formation_error) ++peaks;
  }
  return peaks;
}

Outcome ablation() {
  std::vector<int> counts;
  std::ostringstream msg;
  for (const double c2 : {0.06, 0.1, 0.2}) {
    Scenario s = fixtures::load("a_nominal.json");
    s.params.c2 = c2;
    const Run r = simulate(s);
    if (r.abort) return {false, "c2=" + fmt(c2) + " aborted: " + *r.abort};
    counts.push_back(count_peaks(r.log));
    msg << "c2=" << fmt(c2) << ": " << counts.back() << " peaks; ";
  }
  return {counts[0] > counts[1] && counts[1] > counts[2], msg.str()};
}

Outcome minimal_invasiveness() {
  std::size_t unfiltered = 0, mismatched = 0;
  for (const auto& [name, r] : shipped())
    for (const auto& rec : r.log.records)
      for (const auto& a : rec.agents)
        if (a.nominal_feasible) {
          ++unfiltered;
          if (std::bit_cast<std::uint64_t>(a.control.x) != std::bit_cast<std::uint64_t>(a.nominal.x) ||
              std::bit_cast<std::uint64_t>(a.control.y) != std::bit_cast<std::uint64_t>(a.nominal.y))
            ++mismatched;
        }
  const Run& r = shipped().at("a_nominal.json");
  std::size_t steps = 0, filtered = 0;
  for (const auto& rec : r.log.records) {
    if (rec.t <= kWarmup) continue;
    ++steps;
    if (std::any_of(rec.agents.begin(), rec.agents.end(), [](const AgentRecord& a) { return !a.nominal_feasible; }))
      ++filtered;
  }
  const double frac = steps ? static_cast<double>(filtered) / steps : 1.0;
  return {mismatched == 0 && frac < kFilteredFraction,
          std::to_string(mismatched) + " of " + std::to_string(unfiltered) +
              " unfiltered agent-steps altered; filtered step fraction after 1 s: " + fmt(frac)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("srfc_acceptance_" + std::to_string(::getpid()));
  std::ostringstream sink;
  cli::RunOptions o1, o2;
  o1.out_dir = (root / "first").string();
  o2.out_dir = (root / "second").string();
  const std::string path = fixtures::scenario_path("c_single_obstacle.json");
  const int c1 = cli::cmd_run(path, o1, sink), c2 = cli::cmd_run(path, o2, sink);
  bool same = c1 == 0 && c2 == 0;
  std::string detail;
  for (const char* f : {"trajectory.csv", "metrics.csv", "events.csv", "summary.json", "scenario.json"}) {
    const bool eq = read_file((root / "first" / f).string()) == read_file((root / "second" / f).string());
    same = same && eq;
    detail += std::string(f) + (eq ? " identical; " : " DIFFERS; ");
  }
  fs::remove_all(root);
  return {same, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"nominal convergence", nominal_convergence},
      {"connectivity", connectivity},
      {"obstacle safety", safety},
      {"input saturation", saturation},
      {"qp vs oracle", qp_correctness},
      {"gradient and one-step identity", gradient_oracle},
      {"estimator error bound", estimator_bound},
      {"velocity-consensus ablation", ablation},
      {"minimal invasiveness", minimal_invasiveness},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
