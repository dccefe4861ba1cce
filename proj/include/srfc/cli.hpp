#pragma once
//------------------------------------------------------------------------------
// Command implementations behind the `srfc` executable.
//
// Exit codes: 0 success, 1 validation failure, 2 safety/connectivity abort,
// 3 I/O or parse error.
//------------------------------------------------------------------------------
#include <algorithm>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "srfc/io.hpp"
#include "srfc/plot.hpp"
#include "srfc/sim.hpp"
#include "srfc/world.hpp"

namespace srfc::cli {

enum ExitCode : int { kOk = 0, kInvalid = 1, kAborted = 2, kIoError = 3 };

inline constexpr const char* kPlotFiles[] = {"trajectory.svg", "formation_error.svg", "min_distance.svg",
                                             "velocity.svg", "control.svg"};

struct RunOptions {
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::optional<double> dt;
  std::optional<double> duration;
};

// Reads a scenario file and applies overrides on the raw tree before decoding.
inline Scenario load_scenario(const std::string& path, const RunOptions& opts = {}) {
  const std::string text = read_file(path);
  json tree = parse_json_text(text);
  for (const auto& o : opts.overrides) apply_override(tree, o);
  if (opts.dt) tree["dt"] = *opts.dt;
  if (opts.duration) tree["duration"] = *opts.duration;
  return scenario_from_json(tree);
}

inline void print_violations(const std::vector<Violation>& vs, std::ostream& out) {
  for (const auto& v : vs) out << "  " << v.field << ": " << v.message << "\n";
}

inline int cmd_check(const std::string& path, std::ostream& out, const RunOptions& opts = {}) {
  Scenario s;
  try {
    s = load_scenario(path, opts);
  } catch (const ScenarioError& e) {
    out << path << ": " << e.what() << "\n";
    return kIoError;
  } catch (const std::ios_base::failure& e) {
    out << e.what() << "\n";
    return kIoError;
  }
  const auto violations = validate(s);
  for (const auto& w : warnings(s)) out << "warning: " << w << "\n";
  if (violations.empty()) {
    out << path << ": ok (0 violations)\n";
    return kOk;
  }
  out << path << ": " << violations.size() << " violation(s)\n";
  print_violations(violations, out);
  return kInvalid;
}

inline void write_bundle(const std::filesystem::path& dir, const Scenario& s, const TrajectoryLog& log,
                         const RunSummary& summary) {
  std::filesystem::create_directories(dir);
  write_file((dir / "scenario.json").string(), serialize_scenario(s));
  write_file((dir / "trajectory.csv").string(), trajectory_table(log));
  write_file((dir / "metrics.csv").string(), metrics_table(log));
  write_file((dir / "events.csv").string(), events_table(log));
  write_file((dir / "summary.json").string(), summary_to_json(summary).dump(2) + "\n");
}

inline void print_summary(const RunSummary& s, std::ostream& out) {
  out << "records:                 " << s.records << "\n"
      << "formation error (t=0):   " << format_number(s.initial_formation_error) << "\n"
      << "formation error (final): " << format_number(s.final_formation_error) << "\n"
      << "t_f:                     " << (s.t_f ? format_number(*s.t_f) : std::string("not reached")) << "\n"
      << "min pair distance:       " << format_number(s.min_pair_distance) << "\n"
      << "min h external:          " << format_number(s.min_h_external) << "\n"
      << "min h internal:          " << format_number(s.min_h_internal) << "\n"
      << "relaxed QP steps:        " << s.relaxed_qp_count << "\n";
  if (!s.completed) out << "aborted:                 " << s.abort_reason << "\n";
}

inline int cmd_run(const std::string& path, const RunOptions& opts, std::ostream& out) {
  Scenario s;
  try {
    s = load_scenario(path, opts);
  } catch (const ScenarioError& e) {
    out << path << ": " << e.what() << "\n";
    return kIoError;
  } catch (const std::ios_base::failure& e) {
    out << e.what() << "\n";
    return kIoError;
  }
  if (const auto vs = validate(s); !vs.empty()) {
    out << path << ": scenario is invalid\n";
    print_violations(vs, out);
    return kInvalid;
  }

  TrajectoryLog log;
  int code = kOk;
  RunSummary summary;
  try {
    log = run(s);
    summary = summarize(log);
  } catch (const SimulationAbort& abort) {
    log = abort.log();
    summary = summarize(log);
    summary.completed = false;
    summary.abort_reason = std::string(to_string(abort.kind())) + " at " + abort.what();
    code = kAborted;
  }
  try {
    write_bundle(opts.out_dir, s, log, summary);
  } catch (const std::exception& e) {
    out << "output: " << e.what() << "\n";
    return kIoError;
  }
  print_summary(summary, out);
  return code;
}

inline int cmd_plot(const std::string& bundle_dir, std::ostream& out) {
  namespace fs = std::filesystem;
  const fs::path dir(bundle_dir);
  for (const char* name : {"trajectory.csv", "metrics.csv", "scenario.json"}) {
    if (!fs::exists(dir / name)) {
      out << "missing table: " << (dir / name).string() << "\n";
      return kIoError;
    }
  }
  try {
    const Scenario s = parse_scenario(read_file((dir / "scenario.json").string()));
    const CsvTable traj = parse_csv(read_file((dir / "trajectory.csv").string()));
    const CsvTable metrics = parse_csv(read_file((dir / "metrics.csv").string()));
    const std::size_t n = s.agents.size();

    const auto id = traj.numbers("agent_id");
    const auto tt = traj.numbers("t");
    const auto px = traj.numbers("px"), py = traj.numbers("py");
    const auto vx = traj.numbers("vx"), vy = traj.numbers("vy");
    const auto ux = traj.numbers("ux"), uy = traj.numbers("uy");
    std::vector<std::vector<Vec2>> paths(n);
    std::vector<double> t;
    std::vector<plot::Series> sx(n), sy(n), cx(n), cy(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string label = "agent " + std::to_string(i);
      sx[i].name = sy[i].name = cx[i].name = cy[i].name = label;
    }
    for (std::size_t r = 0; r < id.size(); ++r) {
      const auto i = static_cast<std::size_t>(id[r]);
      if (i >= n) throw std::out_of_range("agent id " + std::to_string(i) + " not in scenario");
      if (i == 0) t.push_back(tt[r]);
      paths[i].push_back({px[r], py[r]});
      sx[i].y.push_back(vx[r]);
      sy[i].y.push_back(vy[r]);
      cx[i].y.push_back(ux[r]);
      cy[i].y.push_back(uy[r]);
    }

    const auto mt = metrics.numbers("t");
    const auto ef = metrics.numbers("e_f");
    const auto dmin = metrics.numbers("min_pair_dist");
    std::vector<double> delta(mt.size(), s.params.delta_in);

    const std::string title = s.name.empty() ? std::string("run") : s.name;
    write_file((dir / "trajectory.svg").string(), plot::trajectory(title + ": trajectories", s, paths));
    write_file((dir / "formation_error.svg").string(),
               plot::time_series(title + ": formation error", mt, {{"e_f [m^2]", {{"e_f", ef}}}}));
    write_file((dir / "min_distance.svg").string(),
               plot::time_series(title + ": minimum inter-agent distance", mt,
                                 {{"distance [m]", {{"min distance", dmin}, {"delta_in", delta}}}}));
    write_file((dir / "velocity.svg").string(),
               plot::time_series(title + ": velocity", t, {{"v_x [m/s]", sx}, {"v_y [m/s]", sy}}));
    write_file((dir / "control.svg").string(),
               plot::time_series(title + ": control input", t, {{"u_x [m/s^2]", cx}, {"u_y [m/s^2]", cy}}));
  } catch (const std::exception& e) {
    out << "plot: " << e.what() << "\n";
    return kIoError;
  }
  for (const char* f : kPlotFiles) out << (dir / f).string() << "\n";
  return kOk;
}

// Independent runs over a worker pool; each scenario lands in
// <out_root>/<scenario file stem>. Returns the largest exit code.
inline int cmd_batch(const std::vector<std::string>& paths, const RunOptions& opts, unsigned jobs,
                     std::ostream& out) {
  namespace fs = std::filesystem;
  std::vector<std::string> logs(paths.size());
  std::vector<int> codes(paths.size(), kOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < paths.size(); k = next++) {
      RunOptions o = opts;
      o.out_dir = (fs::path(opts.out_dir) / fs::path(paths[k]).stem()).string();
      std::ostringstream ss;
      codes[k] = cmd_run(paths[k], o, ss);
      logs[k] = ss.str();
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(paths.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  int worst = kOk;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    out << "== " << paths[k] << " (exit " << codes[k] << ")\n" << logs[k];
    worst = std::max(worst, codes[k]);
  }
  return worst;
}

}  // namespace srfc::cli
