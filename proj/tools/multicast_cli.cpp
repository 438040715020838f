// Copyright 2026 The Multicast Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// multicast: run the alarm pipeline over a manifest, train the trajectory
// predictor, evaluate outcomes and generate synthetic scenarios.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "multicast/detstream.hpp"
#include "multicast/errors.hpp"
#include "multicast/evaluation.hpp"
#include "multicast/manifest.hpp"
#include "multicast/scenario.hpp"
#include "multicast/statemachine.hpp"
#include "multicast/trajectory.hpp"

namespace fs = std::filesystem;
using namespace multicast;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string id;
};

int cmd_gen(const GenArgs& a) {
  const ScenarioSpec spec = read_scenario_spec(a.config);
  const Scenario sc = generate_scenario(spec, a.seed);
  const fs::path dir(a.out);
  ensure_dir(dir);
  save_detection_log(sc.primary, dir / "primary.log");
  save_detection_log(sc.confirmation, dir / "confirmation.log");
  save_detection_log(sc.ground_truth, dir / "ground_truth.log", WriteOptions{.with_confidence = false});

  RunManifest m;
  VideoEntry v;
  v.id = a.id.empty() ? fs::absolute(dir).lexically_normal().filename().string() : a.id;
  if (v.id.empty()) v.id = "scenario";
  v.primary = "primary.log";
  v.confirmation = "confirmation.log";
  v.ground_truth = "ground_truth.log";
  v.gt_alarm = !spec.objects.empty();
  m.videos.push_back(v);
  auto out = open_out(dir / "manifest.ini");
  write_manifest(m, out);
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string config;
  std::string out;
  unsigned jobs = 1;
};

struct VideoResult {
  std::string id;
  bool gt = false;
  bool baseline_alarm = false;
  bool multicast_alarm = false;
};

VideoResult run_one(const VideoEntry& entry, const RunManifest& m,
                    const TrajectoryPredictor& predictor, const fs::path& out_dir) {
  const LoadedVideo v = load_video(entry);
  const VideoRun run = run_video(v.primary, v.confirmation, &predictor, m.config);
  const auto baseline = baseline_single_detector(v.primary, m.config);

  const fs::path dir = out_dir / entry.id;
  ensure_dir(dir);
  {
    auto f = open_out(dir / "events.csv");
    write_event_log(run.events, f);
  }
  {
    auto f = open_out(dir / "outcomes.jsonl");
    write_outcome_log(run.outcomes, f);
  }
  {
    auto f = open_out(dir / "baseline_outcomes.jsonl");
    write_outcome_log(baseline, f);
  }

  VideoResult r;
  r.id = entry.id;
  if (entry.gt_alarm) {
    r.gt = *entry.gt_alarm;
  } else if (v.ground_truth) {
    r.gt = v.ground_truth->record_count() > 0;
  }
  r.baseline_alarm = alarm_count(baseline) > 0;
  r.multicast_alarm = run.any_alarm();
  return r;
}

int cmd_run(const RunArgs& a) {
  const RunManifest m = read_manifest(a.config);
  const fs::path out_dir(a.out);
  ensure_dir(out_dir);
  if (m.videos.empty()) {
    std::cerr << "warning: manifest lists no videos\n";
    return 0;
  }
  const auto predictor = make_predictor(m.predictor);

  std::vector<std::optional<VideoResult>> results(m.videos.size());
  std::vector<std::exception_ptr> errors(m.videos.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < m.videos.size(); i = next++) {
      try {
        results[i] = run_one(m.videos[i], m, *predictor, out_dir);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::clamp<unsigned>(a.jobs, 1, static_cast<unsigned>(m.videos.size()));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  AlarmTable table;
  table.systems = {"baseline", "multicast"};
  for (const auto& r : results) {
    table.rows.push_back({r->id, r->gt, {r->baseline_alarm, r->multicast_alarm}});
  }
  auto f = open_out(out_dir / "alarms.csv");
  write_alarm_table(table, f);
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config;
  std::string logs;
  std::string out;
  std::string curve;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : read_train_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  validate(cfg);

  const fs::path dir(a.logs);
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".log") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LabeledLog> logs;
  for (const auto& p : files) logs.push_back({p.stem().string(), read_detection_log(p)});
  const auto dataset = window_dataset(logs);
  if (dataset.empty()) throw ValidationError("empty dataset: no trajectory windows under " + dir.string());

  TrainResult r = train(dataset, cfg);
  if (!logs.empty()) r.model.trained_dims = logs.front().log.dims;
  save_model(r.model, fs::path(a.out));

  const fs::path curve = a.curve.empty() ? fs::path(a.out + ".curve.txt") : fs::path(a.curve);
  auto f = open_out(curve);
  f << "# epoch, train_mse, val_mse\n";
  for (const auto& e : r.curve) {
    f << e.epoch << ", " << format_number(e.train_mse) << ", " << format_number(e.val_mse) << "\n";
  }
  std::cout << "samples " << dataset.size() << " (train " << r.train_size << ", val " << r.val_size
            << "), final val_mse " << format_number(r.final_val_mse) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string mode = "alarms";
  std::string config;
  std::string outcomes;
  std::string table;
  std::string out;
  double iou_threshold = 0.7;
  int min_cl = 2;
};

int eval_alarms(const EvalArgs& a) {
  std::string path = a.table;
  if (path.empty() && !a.outcomes.empty()) path = (fs::path(a.outcomes) / "alarms.csv").string();
  if (path.empty()) throw ConfigError("alarms mode needs --table or --outcomes");
  const AlarmTable table = read_alarm_table(path);
  write_alarm_report(table, std::cout);
  if (table.systems.size() > 1) {
    const auto base = table.verdicts(table.systems.front());
    for (std::size_t k = 1; k < table.systems.size(); ++k) {
      const auto cmp = compare_alarms(table.verdicts(table.systems[k]), base);
      std::ostringstream pctv;
      pctv << 100.0 * cmp.improvement;
      std::cout << "improvement " << table.systems[k] << " vs " << table.systems.front() << ": "
                << (cmp.system.false_alarm_rate_undefined ? std::string("n/a") : pctv.str() + "%")
                << "\n";
    }
  }
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    f << alarm_report_json(table) << "\n";
  }
  return 0;
}

int eval_frames(const EvalArgs& a) {
  if (a.config.empty() || a.outcomes.empty()) {
    throw ConfigError("frames mode needs --config <manifest> and --outcomes <run dir>");
  }
  const RunManifest m = read_manifest(a.config);
  const fs::path run_dir(a.outcomes);
  std::vector<ReportRecord> records;
  MetricCounts total_mc;
  MetricCounts total_bl;
  for (const auto& entry : m.videos) {
    if (!entry.ground_truth) throw ValidationError("video '" + entry.id + "' has no ground_truth");
    const LoadedVideo v = load_video(entry);
    const auto mc = read_outcome_log(run_dir / entry.id / "outcomes.jsonl");
    const auto bl = read_outcome_log(run_dir / entry.id / "baseline_outcomes.jsonl");
    const auto cm = score_frames(mc, *v.ground_truth, ScoreMode::multicast, a.iou_threshold, a.min_cl);
    const auto cb = score_frames(bl, *v.ground_truth, ScoreMode::baseline, a.iou_threshold);
    records.push_back({entry.id, "baseline", cb, compute_report(cb)});
    records.push_back({entry.id, "multicast", cm, compute_report(cm)});
    total_bl += cb;
    total_mc += cm;
  }
  records.push_back({"all", "baseline", total_bl, compute_report(total_bl)});
  records.push_back({"all", "multicast", total_mc, compute_report(total_mc)});
  write_report_table(records, std::cout);
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    f << report_json(records) << "\n";
  }
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  if (a.mode == "alarms") return eval_alarms(a);
  if (a.mode == "frames") return eval_frames(a);
  throw ConfigError("mode must be 'frames' or 'alarms'");
}

// Error messages stay on one line.
std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-stage handgun alarm pipeline"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate detection logs from a scenario spec");
  g->add_option("--config", gen.config, "Scenario spec")->required();
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--id", gen.id, "Video id written to the manifest");
  g->add_option("--jobs", [](const CLI::results_t&) { return true; }, "Ignored");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run the pipeline and the baseline over a manifest");
  r->add_option("--config", run.config, "Run manifest")->required();
  r->add_option("--out", run.out, "Output directory")->required();
  r->add_option("--jobs", run.jobs, "Videos processed in parallel")->check(CLI::PositiveNumber);
  r->add_option("--seed", [](const CLI::results_t&) { return true; }, "Ignored; runs are deterministic");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the trajectory predictor");
  t->add_option("--logs", tr.logs, "Directory of *.log trajectory files")->required();
  t->add_option("--config", tr.config, "Training config with a [train] section");
  t->add_option("--out", tr.out, "Model output path")->required();
  t->add_option("--curve", tr.curve, "Loss curve path (default <out>.curve.txt)");
  t->add_option("--seed", tr.seed, "Overrides the config seed");
  t->add_option("--jobs", [](const CLI::results_t&) { return true; }, "Ignored");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score outcome logs");
  e->add_option("--mode", ev.mode, "frames | alarms")->check(CLI::IsMember({"frames", "alarms"}));
  e->add_option("--config", ev.config, "Run manifest (frames mode)");
  e->add_option("--outcomes", ev.outcomes, "Output directory of a previous run");
  e->add_option("--table", ev.table, "Alarm table (alarms mode)");
  e->add_option("--out", ev.out, "Write the JSON report here");
  e->add_option("--iou", ev.iou_threshold, "True-positive IoU threshold");
  e->add_option("--min-cl", ev.min_cl, "Lowest CL counted as a detection");
  e->add_option("--seed,--jobs", [](const CLI::results_t&) { return true; }, "Ignored");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    if (err.get_exit_code() == 0) return app.exit(err);
    std::cerr << "error[usage]: " << one_line(err.what()) << "\n";
    return 2;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (r->parsed()) return cmd_run(run);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_eval(ev);
  } catch (const Error& err) {
    std::cerr << "error[" << err.kind() << "]: " << one_line(err.what()) << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error[internal]: " << one_line(err.what()) << "\n";
    return 1;
  }
  return 0;
}
