#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "pedintent/common.hpp"
#include "pedintent/evaluate.hpp"
#include "pedintent/nn/model.hpp"
#include "pedintent/nn/train.hpp"
#include "pedintent/scenario.hpp"
#include "pedintent/tracker.hpp"

namespace pedintent {

// Resolved run parameters for the CLI. Config files are JSON objects with
// flat dotted keys mirroring the flags ({"tracker.iou_min": 0.25, ...});
// flags override file values; unknown keys are rejected. Every default equals
// the owning module's default, and reports embed the resolved view for
// diff-able provenance.
struct RunConfig {
  std::uint64_t seed = 1;
  TrackerParams tracker;
  nn::StDenseNetConfig model;
  nn::TrainConfig train;
  int train_sequences = 200;
  ScenarioConfig scenario;
  EvalParams eval;

  void set(const std::string& key, const nlohmann::json& value) {
    try {
      if (key == "seed") {
        seed = value.get<std::uint64_t>();
      } else if (key == "tracker.iou_min") {
        tracker.iou_min = value.get<double>();
      } else if (key == "tracker.max_age") {
        tracker.max_age = value.get<int>();
      } else if (key == "tracker.min_hits") {
        tracker.min_hits = value.get<int>();
      } else if (key == "tracker.q_diag") {
        auto diag = value.get<std::array<double, kStateDim>>();
        tracker.noise.process.setZero();
        for (int i = 0; i < kStateDim; ++i) tracker.noise.process(i, i) = diag[i];
      } else if (key == "tracker.r_diag") {
        auto diag = value.get<std::array<double, kObsDim>>();
        tracker.noise.measurement.setZero();
        for (int i = 0; i < kObsDim; ++i) tracker.noise.measurement(i, i) = diag[i];
      } else if (key == "ukf.alpha") {
        tracker.sigma.alpha = value.get<double>();
      } else if (key == "ukf.beta") {
        tracker.sigma.beta = value.get<double>();
      } else if (key == "ukf.kappa") {
        tracker.sigma.kappa = value.get<double>();
      } else if (key == "model.growth_rate") {
        model.growth_rate = value.get<int>();
      } else if (key == "model.num_blocks") {
        model.num_blocks = value.get<int>();
      } else if (key == "model.layers_per_block") {
        model.layers_per_block = value.get<int>();
      } else if (key == "model.stem_channels") {
        model.stem_channels = value.get<int>();
      } else if (key == "model.compression") {
        model.compression = value.get<double>();
      } else if (key == "model.per_layer_bottleneck") {
        model.per_layer_bottleneck = value.get<bool>();
      } else if (key == "model.input_depth") {
        model.input_depth = value.get<int>();
      } else if (key == "model.input_height") {
        model.input_height = value.get<int>();
      } else if (key == "model.input_width") {
        model.input_width = value.get<int>();
      } else if (key == "model.pixel_mean") {
        model.pixel_mean = value.get<double>();
      } else if (key == "model.pixel_std") {
        model.pixel_std = value.get<double>();
      } else if (key == "train.lr") {
        train.lr = value.get<double>();
      } else if (key == "train.batch_size") {
        train.batch_size = value.get<int>();
      } else if (key == "train.epochs") {
        train.epochs = value.get<int>();
      } else if (key == "train.beta1") {
        train.beta1 = value.get<double>();
      } else if (key == "train.beta2") {
        train.beta2 = value.get<double>();
      } else if (key == "train.eps") {
        train.eps = value.get<double>();
      } else if (key == "train.sequences") {
        train_sequences = value.get<int>();
      } else if (key == "scenario.num_agents") {
        scenario.num_agents = value.get<int>();
      } else if (key == "scenario.num_frames") {
        scenario.num_frames = value.get<int>();
      } else if (key == "scenario.frame_width") {
        scenario.frame_width = value.get<int>();
      } else if (key == "scenario.frame_height") {
        scenario.frame_height = value.get<int>();
      } else if (key == "scenario.jitter_sigma") {
        scenario.jitter_sigma = value.get<double>();
      } else if (key == "scenario.dropout_prob") {
        scenario.dropout_prob = value.get<double>();
      } else if (key == "scenario.false_positive_rate") {
        scenario.false_positive_rate = value.get<double>();
      } else if (key == "scenario.cross_fraction") {
        scenario.cross_fraction = value.get<double>();
      } else if (key == "eval.horizon") {
        eval.horizon = value.get<int>();
      } else if (key == "eval.match_iou") {
        eval.match_iou = value.get<double>();
      } else if (key == "eval.threshold") {
        eval.threshold = value.get<double>();
      } else {
        throw ValidationError("config: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config: bad value for '" + key + "': " + e.what());
    }
  }

  void apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config: parse error in " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config: top level must be an object");
    for (const auto& [key, value] : doc.items()) set(key, value);
  }

  // Flat dotted view of every resolved value; keys come out sorted, which
  // keeps embedded report provenance deterministic.
  nlohmann::json to_flat_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["tracker.iou_min"] = tracker.iou_min;
    j["tracker.max_age"] = tracker.max_age;
    j["tracker.min_hits"] = tracker.min_hits;
    std::array<double, kStateDim> q;
    for (int i = 0; i < kStateDim; ++i) q[i] = tracker.noise.process(i, i);
    j["tracker.q_diag"] = q;
    std::array<double, kObsDim> r;
    for (int i = 0; i < kObsDim; ++i) r[i] = tracker.noise.measurement(i, i);
    j["tracker.r_diag"] = r;
    j["ukf.alpha"] = tracker.sigma.alpha;
    j["ukf.beta"] = tracker.sigma.beta;
    j["ukf.kappa"] = tracker.sigma.kappa;
    j["model.growth_rate"] = model.growth_rate;
    j["model.num_blocks"] = model.num_blocks;
    j["model.layers_per_block"] = model.layers_per_block;
    j["model.stem_channels"] = model.stem_channels;
    j["model.compression"] = model.compression;
    j["model.per_layer_bottleneck"] = model.per_layer_bottleneck;
    j["model.input_depth"] = model.input_depth;
    j["model.input_height"] = model.input_height;
    j["model.input_width"] = model.input_width;
    j["model.pixel_mean"] = model.pixel_mean;
    j["model.pixel_std"] = model.pixel_std;
    j["train.lr"] = train.lr;
    j["train.batch_size"] = train.batch_size;
    j["train.epochs"] = train.epochs;
    j["train.beta1"] = train.beta1;
    j["train.beta2"] = train.beta2;
    j["train.eps"] = train.eps;
    j["train.sequences"] = train_sequences;
    j["scenario.num_agents"] = scenario.num_agents;
    j["scenario.num_frames"] = scenario.num_frames;
    j["scenario.frame_width"] = scenario.frame_width;
    j["scenario.frame_height"] = scenario.frame_height;
    j["scenario.jitter_sigma"] = scenario.jitter_sigma;
    j["scenario.dropout_prob"] = scenario.dropout_prob;
    j["scenario.false_positive_rate"] = scenario.false_positive_rate;
    j["scenario.cross_fraction"] = scenario.cross_fraction;
    j["eval.horizon"] = eval.horizon;
    j["eval.match_iou"] = eval.match_iou;
    j["eval.threshold"] = eval.threshold;
    return j;
  }
};

}  // namespace pedintent
