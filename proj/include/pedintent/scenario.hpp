#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/geometry.hpp"
#include "pedintent/image.hpp"
#include "pedintent/metrics.hpp"
#include "pedintent/nn/train.hpp"
#include "pedintent/rng.hpp"
#include "pedintent/window.hpp"

namespace pedintent {

// Synthetic scene generator: the desk-scale stand-in for real dash-cam video
// and an external detector. Agents walk along sidewalk lanes; crossers turn
// toward the road at a per-agent onset frame. Appearance encodes the label:
// crossers carry an oriented stripe texture whose phase drifts over time,
// non-crossers get isotropic per-frame noise, so the classifier has a genuine
// spatio-temporal signal to learn. Detections are the ground-truth boxes plus
// Gaussian jitter, dropped with a fixed probability, plus Poisson-distributed
// false positives. Everything is reproducible from the seed.

struct ScenarioConfig {
  int num_agents = 10;
  int num_frames = 100;
  int frame_width = 640;
  int frame_height = 480;
  double jitter_sigma = 1.0;        // px, on detection center and size
  double dropout_prob = 0.05;       // per detection
  double false_positive_rate = 0.05;  // Poisson mean per frame
  double cross_fraction = 0.5;

  void validate() const {
    if (num_agents < 1) throw ValidationError("ScenarioConfig: need at least one agent");
    // 16 window frames before onset plus warm-up and a post-onset tail.
    if (num_frames < 24) throw ValidationError("ScenarioConfig: need at least 24 frames");
    if (frame_width < 96 || frame_height < 96) {
      throw ValidationError("ScenarioConfig: frame must be at least 96x96");
    }
    if (jitter_sigma < 0.0) throw ValidationError("ScenarioConfig: jitter_sigma < 0");
    if (dropout_prob < 0.0 || dropout_prob >= 1.0) {
      throw ValidationError("ScenarioConfig: dropout_prob must be in [0, 1)");
    }
    if (false_positive_rate < 0.0) {
      throw ValidationError("ScenarioConfig: false_positive_rate < 0");
    }
    if (cross_fraction < 0.0 || cross_fraction > 1.0) {
      throw ValidationError("ScenarioConfig: cross_fraction must be in [0, 1]");
    }
  }
};

struct AgentTruth {
  int id;
  bool crossing;
  int onset_frame;  // crossers: first crossing frame; others: one past the end
  std::vector<BBox> boxes;  // one per frame, index = frame

  const BBox& box_at(int frame) const { return boxes.at(static_cast<std::size_t>(frame)); }
};

struct Detection {
  BBox box;
  double confidence;
};

struct Scenario {
  std::uint64_t seed = 0;
  ScenarioConfig config;
  std::vector<AgentTruth> agents;
  std::vector<std::vector<Detection>> detections;  // per frame
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stateless hash noise in [0, 1); rendering stays O(1) memory per pixel.
inline double hash_noise(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return static_cast<double>(splitmix64(splitmix64(splitmix64(a) ^ b) ^ c) >> 11) * 0x1.0p-53;
}

}  // namespace detail

inline Scenario synthesize_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  Scenario scenario;
  scenario.seed = seed;
  scenario.config = config;

  Rng rng(seed);

  // Label assignment: exact fraction, lane order shuffled.
  const int n = config.num_agents;
  const int crossers = static_cast<int>(std::lround(config.cross_fraction * n));
  std::vector<char> crossing(n, 0);
  for (int i = 0; i < crossers; ++i) crossing[i] = 1;
  rng.shuffle(crossing);

  const double margin = 24.0;
  const double max_h = 72.0;
  const double lane_span = std::max(1.0, config.frame_height - 2.0 * margin - max_h);
  for (int i = 0; i < n; ++i) {
    AgentTruth agent;
    agent.id = i;
    agent.crossing = crossing[i] != 0;

    const double w = rng.uniform(26.0, 38.0);
    const double h = rng.uniform(54.0, max_h);
    const double lane_y =
        margin + lane_span * (n == 1 ? 0.5 : static_cast<double>(i) / (n - 1)) +
        rng.uniform(-6.0, 6.0);

    double x = rng.uniform(margin, config.frame_width - margin - w);
    double y = std::clamp(lane_y, margin, config.frame_height - margin - h);
    double vx = rng.uniform(1.0, 2.5) * (x < config.frame_width / 2.0 ? 1.0 : -1.0);
    double vy = 0.0;

    // Crossing onset leaves a full window before it and a visible tail after.
    agent.onset_frame = agent.crossing
                            ? 17 + static_cast<int>(rng.uniform_int(
                                       static_cast<std::uint64_t>(config.num_frames - 17 - 6)))
                            : config.num_frames;
    const double cross_vy = rng.uniform(2.0, 3.5) *
                            (y < config.frame_height / 2.0 ? 1.0 : -1.0);

    for (int f = 0; f < config.num_frames; ++f) {
      agent.boxes.emplace_back(x, y, x + w, y + h);
      if (agent.crossing && f >= agent.onset_frame - 1) {
        vy = cross_vy;
        vx *= 0.98;  // slows along the sidewalk while turning
      }
      x += vx;
      y += vy;
      // Reflect at the walls so boxes always stay inside the frame.
      if (x < 2.0 || x + w > config.frame_width - 2.0) {
        vx = -vx;
        x = std::clamp(x, 2.0, config.frame_width - 2.0 - w);
      }
      if (y < 2.0 || y + h > config.frame_height - 2.0) {
        vy = -vy;
        y = std::clamp(y, 2.0, config.frame_height - 2.0 - h);
      }
    }
    scenario.agents.push_back(std::move(agent));
  }

  // Detections drawn from a dedicated stream so trajectory generation and
  // noise never interleave.
  Rng det_rng(seed ^ 0xD373C710u);
  scenario.detections.assign(config.num_frames, {});
  for (int f = 0; f < config.num_frames; ++f) {
    for (const AgentTruth& agent : scenario.agents) {
      const BBox& gt = agent.box_at(f);
      double cx = gt.center_x(), cy = gt.center_y();
      double w = gt.width(), h = gt.height();
      if (config.jitter_sigma > 0.0) {
        cx += det_rng.normal(0.0, config.jitter_sigma);
        cy += det_rng.normal(0.0, config.jitter_sigma);
        w = std::max(4.0, w + det_rng.normal(0.0, config.jitter_sigma));
        h = std::max(4.0, h + det_rng.normal(0.0, config.jitter_sigma));
      }
      const double drop = det_rng.uniform();
      if (drop < config.dropout_prob) continue;
      scenario.detections[f].push_back(
          Detection{BBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2),
                    0.5 + 0.5 * det_rng.uniform()});
    }
    const int false_positives = det_rng.poisson(config.false_positive_rate);
    for (int k = 0; k < false_positives; ++k) {
      const double w = det_rng.uniform(20.0, 50.0);
      const double h = det_rng.uniform(40.0, 90.0);
      const double x = det_rng.uniform(0.0, config.frame_width - w);
      const double y = det_rng.uniform(0.0, config.frame_height - h);
      scenario.detections[f].push_back(
          Detection{BBox(x, y, x + w, y + h), 0.1 + 0.5 * det_rng.uniform()});
    }
  }
  return scenario;
}

// Renders one frame deterministically from (seed, frame index). Agents are
// drawn in id order over a noisy background.
inline Frame render_frame(const Scenario& scenario, int frame_index) {
  const ScenarioConfig& cfg = scenario.config;
  if (frame_index < 0 || frame_index >= cfg.num_frames) {
    throw ValidationError("render_frame: frame index out of range");
  }
  Frame frame;
  frame.index = frame_index;
  frame.image = Image(cfg.frame_height, cfg.frame_width);

  const std::uint64_t base = scenario.seed ^ 0xBAC4612EULL;
  for (int y = 0; y < cfg.frame_height; ++y) {
    for (int x = 0; x < cfg.frame_width; ++x) {
      const double noise =
          detail::hash_noise(base, static_cast<std::uint64_t>(frame_index),
                             static_cast<std::uint64_t>(y) * cfg.frame_width + x);
      const std::uint8_t v = static_cast<std::uint8_t>(104 + noise * 16.0);
      frame.image.at(y, x, 0) = v;
      frame.image.at(y, x, 1) = v;
      frame.image.at(y, x, 2) = v;
    }
  }

  for (const AgentTruth& agent : scenario.agents) {
    const BBox& box = agent.box_at(frame_index);
    const int x0 = std::max(0, static_cast<int>(std::floor(box.x_min)));
    const int y0 = std::max(0, static_cast<int>(std::floor(box.y_min)));
    const int x1 = std::min(cfg.frame_width, static_cast<int>(std::ceil(box.x_max)));
    const int y1 = std::min(cfg.frame_height, static_cast<int>(std::ceil(box.y_max)));
    const std::uint64_t agent_key =
        scenario.seed ^ (0x51CA9E0DULL + static_cast<std::uint64_t>(agent.id) * 0x9E37ULL);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const double u = (x + 0.5 - box.x_min) / box.width();
        const double v = (y + 0.5 - box.y_min) / box.height();
        double value;
        if (agent.crossing) {
          // Oriented stripes, ~5 cycles across the box, phase drifting with
          // time: a separable spatio-temporal signature.
          const double phase = 5.0 * (u + v) + 0.15 * frame_index;
          value = 128.0 + 70.0 * std::sin(2.0 * std::numbers::pi * phase);
        } else {
          // Isotropic white noise, redrawn every frame.
          const double noise = detail::hash_noise(
              agent_key, static_cast<std::uint64_t>(frame_index),
              static_cast<std::uint64_t>(y) * cfg.frame_width + x);
          value = 128.0 + 70.0 * (2.0 * noise - 1.0);
        }
        const double grain =
            detail::hash_noise(agent_key ^ 0xF00DULL, static_cast<std::uint64_t>(frame_index),
                               static_cast<std::uint64_t>(y) * cfg.frame_width + x);
        value += 8.0 * (2.0 * grain - 1.0);
        const std::uint8_t byte =
            static_cast<std::uint8_t>(std::clamp(value, 0.0, 255.0));
        frame.image.at(y, x, 0) = byte;
        frame.image.at(y, x, 1) = byte;
        frame.image.at(y, x, 2) = byte;
      }
    }
  }
  return frame;
}

inline std::vector<BBox> detection_boxes(const Scenario& scenario, int frame_index) {
  std::vector<BBox> out;
  for (const Detection& d : scenario.detections.at(static_cast<std::size_t>(frame_index))) {
    out.push_back(d.box);
  }
  return out;
}

inline std::vector<AgentBoxes> ground_truth_boxes(const Scenario& scenario) {
  std::vector<AgentBoxes> out;
  for (const AgentTruth& agent : scenario.agents) {
    AgentBoxes ab;
    ab.agent_id = agent.id;
    for (int f = 0; f < scenario.config.num_frames; ++f) ab.boxes_by_frame.emplace(f, agent.box_at(f));
    out.push_back(std::move(ab));
  }
  return out;
}

// Training samples from ground-truth crops: per agent, `windows_per_agent`
// sliding windows whose newest frames spread back from onset - 1 across the
// pre-onset horizon (for non-crossers, back from the trajectory end), resized
// to the model input and standardized. Label 1 = will cross.
template <typename T>
std::vector<nn::Sample<T>> make_training_samples(const Scenario& scenario, int input_h,
                                                 int input_w, double pixel_mean,
                                                 double pixel_std, int windows_per_agent = 1) {
  if (windows_per_agent < 1 || windows_per_agent > TrackWindow::kDepth) {
    throw ValidationError("make_training_samples: windows_per_agent must be in [1, 16]");
  }
  const int frames = scenario.config.num_frames;

  auto window_ends = [&](const AgentTruth& agent) {
    std::vector<int> ends;
    const int newest = std::min(agent.onset_frame - 1, frames - 1);
    for (int k = 0; k < windows_per_agent; ++k) {
      const int offset = k * TrackWindow::kDepth / windows_per_agent;
      // Clamp so the full 16-frame window still fits the trajectory.
      ends.push_back(std::max(newest - offset, TrackWindow::kDepth - 1));
    }
    return ends;
  };

  // Render each needed frame once.
  std::vector<int> needed;
  for (const AgentTruth& agent : scenario.agents) {
    for (int end : window_ends(agent)) {
      if (end - TrackWindow::kDepth + 1 < 0) {
        throw ValidationError("make_training_samples: too few pre-onset frames");
      }
      for (int f = end - TrackWindow::kDepth + 1; f <= end; ++f) needed.push_back(f);
    }
  }
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
  std::map<int, Frame> rendered;
  for (int f : needed) rendered.emplace(f, render_frame(scenario, f));

  std::vector<nn::Sample<T>> samples;
  for (const AgentTruth& agent : scenario.agents) {
    for (int end : window_ends(agent)) {
      TrackWindow window(agent.id);
      for (int f = end - TrackWindow::kDepth + 1; f <= end; ++f) {
        const Frame& fr = rendered.at(f);
        window.push(crop_and_resize(fr.image, agent.box_at(f)), f, agent.box_at(f));
      }
      samples.push_back(
          nn::Sample<T>{window.to_tensor<T>(input_h, input_w, pixel_mean, pixel_std),
                        agent.crossing ? 1 : 0});
    }
  }
  return samples;
}

}  // namespace pedintent
