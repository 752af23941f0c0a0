// Command-line front end: plan / run / batch / report.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "quadplan/scenario.hpp"
#include "quadplan/simulator.hpp"
#include "quadplan/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace quadplan;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t a = std::stoull(text.substr(0, dots));
    const std::uint64_t b = std::stoull(text.substr(dots + 2));
    if (b < a) throw std::runtime_error("seed range must be ascending");
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) throw std::runtime_error("no seeds given");
  return seeds;
}

void apply_overrides(ScenarioSpec& spec, const std::string& variant, const std::string& gpio,
                     std::int64_t seed) {
  if (variant == "cbf") {
    spec.variant.cbf = true;
  } else if (variant == "dc") {
    spec.variant.cbf = false;
  } else if (!variant.empty()) {
    throw std::runtime_error("unknown variant '" + variant + "' (expected cbf or dc)");
  }
  spec.cbf.use_cbf = spec.variant.cbf;
  if (gpio == "on") {
    spec.variant.gpio = true;
  } else if (gpio == "off") {
    spec.variant.gpio = false;
  } else if (!gpio.empty()) {
    throw std::runtime_error("unknown gpio flag '" + gpio + "' (expected on or off)");
  }
  if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);
}

/* the effective scenario of a finished run: generated forest baked into the
 * cylinder list so the report can draw it without re-planning */
std::string effective_meta(const ScenarioSpec& spec, const EpisodeResult& r) {
  ScenarioSpec eff = spec;
  eff.cylinders = r.plan.cylinders;
  eff.forest.enabled = false;
  return scenario_to_json_text(eff);
}

void write_run_outputs(const fs::path& dir, const std::string& stem, const ScenarioSpec& spec,
                       const EpisodeResult& r) {
  fs::create_directories(dir);
  write_file(dir / (stem + ".csv"), run_log_csv(r));
  write_file(dir / (stem + "_solves.csv"), solve_log_csv(r));
  write_file(dir / "meta.json", effective_meta(spec, r));
}

void print_metrics(const EpisodeResult& r) {
  const std::string status = r.success ? "success" : "failed: " + r.reason;
  char hs[24];
  if (std::isfinite(r.min_h_static))
    std::snprintf(hs, sizeof hs, "%.3f", r.min_h_static);
  else
    std::snprintf(hs, sizeof hs, "-");  // no static obstacles in this scenario
  std::printf("%s  duration %.2f s  avg %.3f m/s  peak %.3f m/s  risk %.4f  min_h_s %s  "
              "degraded %d  solve %.2f ms\n",
              status.c_str(), r.duration, r.avg_velocity, r.peak_velocity, r.risk, hs,
              r.degraded_steps, r.mean_solve_ms);
}

/* minimal reader for our own log format: header names -> column vectors */
std::map<std::string, std::vector<double>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path.string());
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
  }
  std::map<std::string, std::vector<double>> cols;
  std::vector<std::vector<double>*> ptrs;
  for (const std::string& n : names) ptrs.push_back(&cols[n]);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(ss, cell, ',') && i < ptrs.size()) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      ptrs[i++]->push_back(end == cell.c_str() ? std::nan("") : v);
    }
  }
  return cols;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

int do_report(const fs::path& dir) {
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 4 && name.rfind("run", 0) == 0 &&
        name.find("solves") == std::string::npos &&
        name.substr(name.size() - 4) == ".csv")
      logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  if (logs.empty()) {
    std::fprintf(stderr, "report: no run*.csv files in %s\n", dir.string().c_str());
    return 1;
  }

  std::vector<PlotCircle> circles;
  if (fs::exists(dir / "meta.json")) {
    std::ifstream in(dir / "meta.json");
    std::stringstream ss;
    ss << in.rdbuf();
    const ScenarioSpec spec = scenario_from_json_text(ss.str());
    for (const CylinderSpec& c : spec.cylinders)
      circles.push_back({c.cx, c.cy, c.diameter / 2.0});
  }

  std::vector<PlotSeries> top, speed, barrier, sigma;
  std::printf("%-28s %8s %8s %8s %8s %8s\n", "log", "dur_s", "avg_v", "peak_v", "risk",
              "min_h_s");
  for (std::size_t i = 0; i < logs.size(); ++i) {
    auto cols = read_csv(logs[i]);
    const std::string color = kPalette[i % 10];
    const auto& t = cols["t"];
    if (t.empty()) continue;
    top.push_back({cols["px"], cols["py"], color, 1.5, logs[i].stem().string()});

    std::vector<double> sp(t.size()), hmin(t.size()), shat(t.size()), strue(t.size());
    double avg = 0.0, peak = 0.0, risk = 0.0, minh = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < t.size(); ++k) {
      sp[k] = std::sqrt(cols["vx"][k] * cols["vx"][k] + cols["vy"][k] * cols["vy"][k] +
                        cols["vz"][k] * cols["vz"][k]);
      hmin[k] = std::min(cols["h_static"][k], cols["h_dyn"][k]);
      shat[k] = std::sqrt(cols["sighat_x"][k] * cols["sighat_x"][k] +
                          cols["sighat_y"][k] * cols["sighat_y"][k] +
                          cols["sighat_z"][k] * cols["sighat_z"][k]);
      strue[k] = std::sqrt(cols["sig_x"][k] * cols["sig_x"][k] +
                           cols["sig_y"][k] * cols["sig_y"][k] +
                           cols["sig_z"][k] * cols["sig_z"][k]);
      avg += sp[k];
      peak = std::max(peak, sp[k]);
      risk += cols["risk"][k];
      minh = std::min(minh, hmin[k]);
    }
    avg /= static_cast<double>(t.size());
    risk /= static_cast<double>(t.size());
    std::printf("%-28s %8.2f %8.3f %8.3f %8.4f %8.3f\n", logs[i].stem().string().c_str(),
                t.back(), avg, peak, risk, minh);
    speed.push_back({t, sp, color, 1.5, logs[i].stem().string()});
    barrier.push_back({t, hmin, color, 1.5, logs[i].stem().string()});
    if (i == 0) {
      sigma.push_back({t, shat, "#d62728", 1.5, "estimate"});
      sigma.push_back({t, strue, "#1f77b4", 1.5, "true"});
    }
  }

  PlotConfig top_cfg{"trajectories (top view)", "x [m]", "y [m]", 860, 520, true};
  write_file(dir / "trajectories.svg", render_svg(top, circles, top_cfg));
  write_file(dir / "speed.svg",
             render_svg(speed, {}, {"speed", "t [s]", "|v| [m/s]", 860, 520, false}));
  write_file(dir / "barrier.svg",
             render_svg(barrier, {},
                        {"smallest barrier value", "t [s]", "min h [m]", 860, 520, false}));
  write_file(dir / "sigma.svg",
             render_svg(sigma, {},
                        {"disturbance estimate", "t [s]", "|sigma| [m/s^2]", 860, 520, false}));
  std::printf("wrote %s/{trajectories,speed,barrier,sigma}.svg\n", dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadrotor planning pipeline: global search, spline reference, "
               "contouring control with barrier constraints"};
  app.require_subcommand(1);

  std::string scenario_path, variant, gpio, outdir = "out", seeds_text = "1", out_csv;
  std::int64_t seed = -1;

  CLI::App* plan = app.add_subcommand("plan", "global plan only, write the reference as CSV");
  plan->add_option("scenario", scenario_path, "scenario JSON")->required();
  plan->add_option("--seed", seed, "override the scenario seed");
  plan->add_option("--out", out_csv, "reference CSV path (default <outdir>/ref.csv)");
  plan->add_option("--outdir", outdir, "output directory");

  CLI::App* run = app.add_subcommand("run", "one closed-loop episode");
  run->add_option("scenario", scenario_path, "scenario JSON")->required();
  run->add_option("--variant", variant, "cbf | dc");
  run->add_option("--gpio", gpio, "on | off");
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--outdir", outdir, "output directory");

  CLI::App* batch = app.add_subcommand("batch", "repeated episodes over a seed list");
  batch->add_option("scenario", scenario_path, "scenario JSON")->required();
  batch->add_option("--seeds", seeds_text, "A..B or comma list")->required();
  batch->add_option("--variant", variant, "cbf | dc");
  batch->add_option("--gpio", gpio, "on | off");
  batch->add_option("--outdir", outdir, "output directory");

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "tables and SVG plots from run logs");
  report->add_option("dir", report_dir, "directory holding run*.csv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) {
      ScenarioSpec spec = load_scenario(scenario_path);
      apply_overrides(spec, "", "", seed);
      const PlanOutput p = plan_scenario(spec);
      if (!p.ok) {
        std::fprintf(stderr, "%s\n", p.reason.c_str());
        return 1;
      }
      fs::create_directories(outdir);
      const fs::path ref_path = out_csv.empty() ? fs::path(outdir) / "ref.csv" : fs::path(out_csv);
      write_file(ref_path, p.ref.to_csv(0.05));
      write_file(fs::path(outdir) / "search.json", p.search.to_json());
      std::printf("search cost %.4f, duration %.2f s, reference length %.3f m, "
                  "uniformity residual %.2e\n",
                  p.search.cost, p.search.duration(), p.ref.total_length(),
                  p.ref.uniformity_residual());
      std::printf("wrote %s\n", ref_path.string().c_str());
      return 0;
    }
    if (run->parsed()) {
      ScenarioSpec spec = load_scenario(scenario_path);
      apply_overrides(spec, variant, gpio, seed);
      const EpisodeResult r = run_episode(spec);
      write_run_outputs(outdir, "run_seed" + std::to_string(spec.seed), spec, r);
      print_metrics(r);
      return r.success || r.reason.rfind("plan", 0) == 0 ? 0 : 1;
    }
    if (batch->parsed()) {
      ScenarioSpec spec = load_scenario(scenario_path);
      apply_overrides(spec, variant, gpio, -1);
      const std::vector<std::uint64_t> seeds = parse_seeds(seeds_text);
      const BatchSummary b = run_batch(spec, seeds);
      fs::create_directories(outdir);
      for (std::size_t i = 0; i < b.runs.size(); ++i)
        write_run_outputs(outdir, "run_seed" + std::to_string(b.seeds[i]), spec, b.runs[i]);
      write_file(fs::path(outdir) / "batch.csv", batch_csv(b));
      const std::string table = batch_table(b);
      write_file(fs::path(outdir) / "batch.txt", table);
      std::fputs(table.c_str(), stdout);
      return 0;
    }
    if (report->parsed()) return do_report(report_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
