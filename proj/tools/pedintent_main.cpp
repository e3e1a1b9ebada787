// Command-line surface for the tracking + intent prediction framework.
// Subcommands: track, train, predict, eval, gradcheck, bench. Every run is
// reproducible from (argv, config file, seed); reports embed the resolved
// config. Exit codes: 0 success, 1 failed check, 2 validation error,
// 3 I/O error, 4 internal/numeric error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pedintent/common.hpp"
#include "pedintent/config.hpp"
#include "pedintent/csv_io.hpp"
#include "pedintent/dataset_io.hpp"
#include "pedintent/evaluate.hpp"
#include "pedintent/intent.hpp"
#include "pedintent/nn/gradcheck.hpp"
#include "pedintent/nn/serialize.hpp"
#include "pedintent/nn/train.hpp"
#include "pedintent/scenario.hpp"
#include "pedintent/tracker.hpp"

namespace {

using namespace pedintent;

std::string fmt(double v) { return detail::format_number(v); }

std::map<int, std::vector<BBox>> group_detections(const std::vector<DetectionRow>& rows,
                                                  const std::string& path) {
  std::map<int, std::vector<BBox>> by_frame;
  int prev_frame = std::numeric_limits<int>::min();
  for (const DetectionRow& row : rows) {
    if (row.frame < prev_frame) {
      throw ValidationError(path + ": line " + std::to_string(row.line) +
                            ": non-monotonic frame index " + std::to_string(row.frame));
    }
    prev_frame = row.frame;
    by_frame[row.frame].push_back(
        BBox::from_ltwh(row.left, row.top, row.width, row.height));
  }
  return by_frame;
}

int run_track(const RunConfig& config, const std::string& detections_path,
              const std::string& out_path) {
  std::vector<DetectionRow> rows = read_detections_csv(detections_path);
  std::vector<TrackRow> out_rows;
  if (!rows.empty()) {
    std::map<int, std::vector<BBox>> by_frame = group_detections(rows, detections_path);
    const int first = by_frame.begin()->first;
    const int last = by_frame.rbegin()->first;
    SortUkfTracker tracker(config.tracker);
    for (int f = first; f <= last; ++f) {
      auto it = by_frame.find(f);
      static const std::vector<BBox> kNone;
      for (const TrackOutput& t :
           tracker.step(f, it == by_frame.end() ? kNone : it->second)) {
        out_rows.push_back(TrackRow{f, t.id, t.box.x_min, t.box.y_min, t.box.width(),
                                    t.box.height()});
      }
    }
  }
  write_tracks_csv(out_path, out_rows);
  std::cout << "wrote " << out_rows.size() << " track rows to " << out_path << "\n";
  return 0;
}

std::vector<nn::Sample<float>> synthesize_dataset(const RunConfig& config) {
  std::vector<nn::Sample<float>> dataset;
  int scenario_index = 0;
  while (static_cast<int>(dataset.size()) < config.train_sequences) {
    Scenario s = synthesize_scenario(config.scenario,
                                     config.seed + 1000003ull * scenario_index);
    ++scenario_index;
    auto samples = make_training_samples<float>(s, config.model.input_height,
                                                config.model.input_width,
                                                config.model.pixel_mean,
                                                config.model.pixel_std,
                                                /*windows_per_agent=*/2);
    for (auto& sample : samples) {
      if (static_cast<int>(dataset.size()) >= config.train_sequences) break;
      dataset.push_back(std::move(sample));
    }
  }
  return dataset;
}

int run_train(const RunConfig& config, bool use_synth, const std::string& dataset_dir,
              const std::string& weights_path, const std::string& history_path,
              const std::string& dump_dir) {
  std::vector<nn::Sample<float>> dataset;
  if (use_synth) {
    dataset = synthesize_dataset(config);
  } else {
    dataset = load_dataset_dir(dataset_dir);
    for (const auto& s : dataset) {
      if (s.sequence.c() != config.model.input_channels ||
          s.sequence.d() != config.model.input_depth ||
          s.sequence.h() != config.model.input_height ||
          s.sequence.w() != config.model.input_width) {
        throw ValidationError("dataset sample shape does not match model input");
      }
    }
  }
  if (!dump_dir.empty()) {
    std::filesystem::create_directories(dump_dir);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "sample_%05zu.seq", i);
      save_sample(dump_dir + "/" + name, dataset[i]);
    }
    std::cout << "dumped " << dataset.size() << " samples to " << dump_dir << "\n";
  }

  nn::StDenseNet<float> model(config.model);
  model.init(config.seed);
  nn::TrainConfig tc = config.train;
  tc.seed = config.seed;
  std::vector<nn::EpochStats> history = nn::train(model, dataset, tc);

  nn::save_weights(weights_path, model);
  if (!history_path.empty()) write_loss_history_csv(history_path, history);

  std::cout << "trained on " << dataset.size() << " sequences for " << history.size()
            << " epochs\n";
  std::cout << "final loss " << fmt(history.back().loss) << ", accuracy "
            << fmt(history.back().accuracy) << "\n";
  std::cout << "weights written to " << weights_path << "\n";
  return 0;
}

int run_predict(const RunConfig& config, const std::string& weights_path,
                const std::string& detections_path, const std::string& out_path) {
  nn::StDenseNet<float> model = nn::load_weights(weights_path);
  Scenario scenario = synthesize_scenario(config.scenario, config.seed);

  std::map<int, std::vector<BBox>> override_dets;
  if (!detections_path.empty()) {
    override_dets = group_detections(read_detections_csv(detections_path), detections_path);
  }

  IntentPipeline pipeline(config.tracker, model_scorer(model));
  std::vector<IntentRow> rows;
  for (int f = 0; f < scenario.config.num_frames; ++f) {
    Frame frame = render_frame(scenario, f);
    std::vector<BBox> dets;
    if (!detections_path.empty()) {
      auto it = override_dets.find(f);
      if (it != override_dets.end()) dets = it->second;
    } else {
      dets = detection_boxes(scenario, f);
    }
    for (const IntentScore& s : pipeline.step(frame, dets).scores) {
      rows.push_back(IntentRow{s.frame_index, s.track_id, s.p_cross});
    }
  }
  write_intents_csv(out_path, rows);
  std::cout << "wrote " << rows.size() << " intent rows to " << out_path << "\n";
  return 0;
}

std::string report_text(const RunConfig& config, const EvalReport& r) {
  std::string text;
  text += "# evaluation report\n";
  const nlohmann::json flat = config.to_flat_json();
  for (const auto& [key, value] : flat.items()) {
    text += "config." + key + " = " + value.dump() + "\n";
  }
  text += "frames = " + std::to_string(r.frames) + "\n";
  text += "track_count = " + std::to_string(r.track_count) + "\n";
  text += "emitted_scores = " + std::to_string(r.emitted_scores) + "\n";
  text += "evaluated_samples = " + std::to_string(r.evaluated_samples) + "\n";
  text += "evaluated_positives = " + std::to_string(r.evaluated_positives) + "\n";
  text += "label_accuracy = " + fmt(r.label_accuracy) + "\n";
  text += "ap = " + (r.ap_defined ? fmt(r.ap) : std::string("undefined")) + "\n";
  text += "precision_cross = " + fmt(r.precision_cross) + "\n";
  text += "recall_cross = " + fmt(r.recall_cross) + "\n";
  text += "precision_not_cross = " + fmt(r.precision_not_cross) + "\n";
  text += "recall_not_cross = " + fmt(r.recall_not_cross) + "\n";
  text += "identity_consistency = " + fmt(r.identity_consistency) + "\n";
  text += "tracking_ms_per_frame = " + fmt(r.tracking_ms_per_frame) + "\n";
  text += "prediction_ms_per_frame = " + fmt(r.prediction_ms_per_frame) + "\n";
  text += "total_ms_per_frame = " + fmt(r.total_ms_per_frame) + "\n";
  text += "fps = " + fmt(r.fps) + "\n";
  return text;
}

nlohmann::json report_json(const RunConfig& config, const EvalReport& r) {
  nlohmann::json j;
  j["config"] = config.to_flat_json();
  nlohmann::json m;
  m["frames"] = r.frames;
  m["track_count"] = r.track_count;
  m["emitted_scores"] = r.emitted_scores;
  m["evaluated_samples"] = r.evaluated_samples;
  m["evaluated_positives"] = r.evaluated_positives;
  m["label_accuracy"] = r.label_accuracy;
  if (r.ap_defined) {
    m["ap"] = r.ap;
  } else {
    m["ap"] = nullptr;
  }
  m["precision_cross"] = r.precision_cross;
  m["recall_cross"] = r.recall_cross;
  m["precision_not_cross"] = r.precision_not_cross;
  m["recall_not_cross"] = r.recall_not_cross;
  m["identity_consistency"] = r.identity_consistency;
  m["tracking_ms_per_frame"] = r.tracking_ms_per_frame;
  m["prediction_ms_per_frame"] = r.prediction_ms_per_frame;
  m["total_ms_per_frame"] = r.total_ms_per_frame;
  m["fps"] = r.fps;
  j["metrics"] = m;
  return j;
}

void emit_report(const RunConfig& config, const EvalReport& report,
                 const std::string& out_path, const std::string& json_path) {
  std::string text = report_text(config, report);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write report " + out_path);
    out << text;
  }
  if (!json_path.empty()) {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw IoError("cannot write report " + json_path);
    out << report_json(config, report).dump(2) << "\n";
  }
}

int run_eval(const RunConfig& config, bool use_synth, const std::string& weights_path,
             const std::string& detections_path, const std::string& gt_path,
             const std::string& out_path, const std::string& json_path) {
  if (use_synth) {
    nn::StDenseNet<float> model = nn::load_weights(weights_path);
    Scenario scenario = synthesize_scenario(config.scenario, config.seed);
    EvalReport report =
        evaluate_scenario(scenario, model_scorer(model), config.tracker, config.eval);
    emit_report(config, report, out_path, json_path);
    return 0;
  }

  // File mode: tracking-stage metrics only (no frames, so no intent scores;
  // AP is reported undefined).
  if (detections_path.empty() || gt_path.empty()) {
    throw ValidationError("eval: need --synth or both --detections and --ground-truth");
  }
  std::map<int, std::vector<BBox>> by_frame =
      group_detections(read_detections_csv(detections_path), detections_path);
  std::vector<GroundTruthRow> gt_rows = read_ground_truth_csv(gt_path);
  std::map<int, AgentBoxes> agents;
  int max_frame = 0;
  for (const GroundTruthRow& row : gt_rows) {
    auto [it, inserted] = agents.try_emplace(row.agent_id);
    it->second.agent_id = row.agent_id;
    it->second.boxes_by_frame.emplace(row.frame,
                                      BBox::from_ltwh(row.left, row.top, row.width, row.height));
    max_frame = std::max(max_frame, row.frame);
  }
  if (!by_frame.empty()) max_frame = std::max(max_frame, by_frame.rbegin()->first);

  SortUkfTracker tracker(config.tracker);
  std::map<int, std::vector<TrackOutput>> tracks_by_frame;
  std::set<int> ids;
  const auto t0 = std::chrono::steady_clock::now();
  for (int f = 0; f <= max_frame; ++f) {
    auto it = by_frame.find(f);
    static const std::vector<BBox> kNone;
    auto out = tracker.step(f, it == by_frame.end() ? kNone : it->second);
    for (const TrackOutput& t : out) ids.insert(t.id);
    tracks_by_frame.emplace(f, std::move(out));
  }
  const auto t1 = std::chrono::steady_clock::now();

  std::vector<AgentBoxes> agent_list;
  for (auto& [id, ab] : agents) agent_list.push_back(std::move(ab));

  EvalReport report;
  report.frames = max_frame + 1;
  report.track_count = static_cast<int>(ids.size());
  report.identity_consistency =
      identity_consistency(agent_list, tracks_by_frame, config.eval.match_iou);
  report.tracking_ms_per_frame =
      1000.0 * std::chrono::duration<double>(t1 - t0).count() / report.frames;
  report.total_ms_per_frame = report.tracking_ms_per_frame;
  report.fps = report.total_ms_per_frame > 0 ? 1000.0 / report.total_ms_per_frame : 0.0;
  emit_report(config, report, out_path, json_path);
  return 0;
}

int run_gradcheck(const RunConfig& config, bool corrupt, bool zero_init) {
  nn::StDenseNetConfig model_config = nn::StDenseNetConfig::gradcheck();
  nn::StDenseNet<double> model(model_config);
  nn::Tensor5<double> input(2, model_config.input_channels, model_config.input_depth,
                            model_config.input_height, model_config.input_width);
  if (!zero_init) {
    model.init(config.seed);
    Rng rng(config.seed ^ 0xF1D0ull);
    for (auto& v : input.values()) v = rng.normal(0.0, 1.0);
  }
  nn::GradCheckOptions options;
  options.corrupt_analytic_gradient = corrupt;
  nn::GradCheckResult result = nn::gradient_check(model, input, {0, 1}, options);

  const double tolerance = 1e-4;
  std::cout << "checked " << result.checked << " parameters\n";
  std::cout << "max relative error = " << fmt(result.max_rel_error);
  if (!result.worst_param.empty()) std::cout << " at " << result.worst_param;
  std::cout << "\n";
  const bool pass = result.max_rel_error < tolerance;
  std::cout << (pass ? "PASS" : "FAIL") << " (tolerance " << fmt(tolerance) << ")\n";
  return pass ? 0 : 1;
}

int run_bench(const RunConfig& config, const std::string& weights_path) {
  Scenario scenario = synthesize_scenario(config.scenario, config.seed);

  // Tracking-only throughput: no rendering, no model.
  SortUkfTracker tracker(config.tracker);
  const auto t0 = std::chrono::steady_clock::now();
  for (int f = 0; f < scenario.config.num_frames; ++f) {
    tracker.step(f, detection_boxes(scenario, f));
  }
  const auto t1 = std::chrono::steady_clock::now();
  const double tracking_only_ms =
      1000.0 * std::chrono::duration<double>(t1 - t0).count() / scenario.config.num_frames;

  nn::StDenseNet<float> model =
      weights_path.empty() ? [&] {
        nn::StDenseNet<float> m(nn::StDenseNetConfig::reduced());
        m.init(config.seed);
        return m;
      }()
                           : nn::load_weights(weights_path);
  EvalReport report =
      evaluate_scenario(scenario, model_scorer(model), config.tracker, config.eval);

  std::cout << "Tracking(ms)  Prediction(ms)  Total(ms)  FPS\n";
  std::printf("%-13s %-15s %-10s %s\n", fmt(report.tracking_ms_per_frame).c_str(),
              fmt(report.prediction_ms_per_frame).c_str(),
              fmt(report.total_ms_per_frame).c_str(), fmt(report.fps).c_str());
  std::cout << "tracking_only_ms_per_frame = " << fmt(tracking_only_ms) << "\n";
  std::cout << "tracking_only_fps = "
            << fmt(tracking_only_ms > 0 ? 1000.0 / tracking_only_ms : 0.0) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pedestrian tracking and crossing-intent prediction"};
  app.require_subcommand(1);

  std::string config_path, detections_path, gt_path, weights_path, out_path, json_path;
  std::string dataset_dir, history_path, dump_dir;
  std::uint64_t seed_flag = 0;
  bool seed_set = false, use_synth = false, reduced = false, corrupt = false,
       zero_init = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file with flat dotted keys");
    cmd->add_option("--seed", seed_flag, "run seed")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  CLI::App* track = app.add_subcommand("track", "run the tracker over a detections CSV");
  add_common(track);
  track->add_option("--detections", detections_path, "input detections CSV")->required();
  track->add_option("--out", out_path, "output tracks CSV")->required();

  CLI::App* train_cmd =
      app.add_subcommand("train", "train the classifier on synthetic or stored sequences");
  add_common(train_cmd);
  train_cmd->add_flag("--synth", use_synth, "generate the training set synthetically");
  train_cmd->add_option("--dataset", dataset_dir, "directory of .seq samples");
  train_cmd->add_flag("--reduced", reduced, "use the reduced CI-scale model");
  train_cmd->add_option("--weights", weights_path, "output weights container")->required();
  train_cmd->add_option("--history", history_path, "output loss-history CSV");
  train_cmd->add_option("--dump-dataset", dump_dir, "also write the samples as .seq files");

  CLI::App* predict =
      app.add_subcommand("predict", "emit per-track crossing probabilities");
  add_common(predict);
  predict->add_flag("--synth", use_synth, "frames come from the synthetic scenario");
  predict->add_option("--detections", detections_path,
                      "override detections CSV (frames still synthetic)");
  predict->add_option("--weights", weights_path, "weights container")->required();
  predict->add_option("--out", out_path, "output intents CSV")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate the full pipeline");
  add_common(eval_cmd);
  eval_cmd->add_flag("--synth", use_synth, "evaluate on the synthetic scenario");
  eval_cmd->add_option("--weights", weights_path, "weights container");
  eval_cmd->add_option("--detections", detections_path, "detections CSV (file mode)");
  eval_cmd->add_option("--ground-truth", gt_path, "ground-truth CSV (file mode)");
  eval_cmd->add_option("--out", out_path, "report text file (default: stdout)");
  eval_cmd->add_option("--json", json_path, "machine-readable report twin");

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference check of the backward pass");
  add_common(gradcheck);
  gradcheck->add_flag("--corrupt-gradient", corrupt,
                      "test hook: perturb one analytic gradient");
  gradcheck->add_flag("--zero-init", zero_init, "zero weights and zero input");

  CLI::App* bench = app.add_subcommand("bench", "per-stage latency table");
  add_common(bench);
  bench->add_option("--weights", weights_path, "weights container (default: reduced random)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config.apply_file(config_path);
    if (reduced) {
      nn::StDenseNetConfig preset = nn::StDenseNetConfig::reduced();
      preset.pixel_mean = config.model.pixel_mean;
      preset.pixel_std = config.model.pixel_std;
      config.model = preset;
    }
    if (seed_set) config.seed = seed_flag;
    config.model.validate();
    config.tracker.sigma.validate();

    if (track->parsed()) return run_track(config, detections_path, out_path);
    if (train_cmd->parsed()) {
      if (!use_synth && dataset_dir.empty()) {
        throw ValidationError("train: need --synth or --dataset");
      }
      return run_train(config, use_synth, dataset_dir, weights_path, history_path, dump_dir);
    }
    if (predict->parsed()) return run_predict(config, weights_path, detections_path, out_path);
    if (eval_cmd->parsed()) {
      if (use_synth && weights_path.empty()) {
        throw ValidationError("eval: --synth requires --weights");
      }
      return run_eval(config, use_synth, weights_path, detections_path, gt_path, out_path,
                      json_path);
    }
    if (gradcheck->parsed()) return run_gradcheck(config, corrupt, zero_init);
    if (bench->parsed()) return run_bench(config, weights_path);
    throw ValidationError("no subcommand given");
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
