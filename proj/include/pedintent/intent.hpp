#pragma once

#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/image.hpp"
#include "pedintent/nn/model.hpp"
#include "pedintent/tracker.hpp"
#include "pedintent/window.hpp"

namespace pedintent {

// Two-class softmax output for one track at one frame.
struct IntentScore {
  int track_id;
  double p_cross;
  double p_not_cross;
  int frame_index;
};

// Scores a batch of ready windows; rows are (p_not_cross, p_cross). The
// indirection lets tests substitute oracle stubs for the real model.
using BatchScorer =
    std::function<std::vector<std::array<double, 2>>(const std::vector<const TrackWindow*>&)>;

// Wraps an eval-mode model as a scorer: stacks windows into one batch tensor
// at the model's input size (order-independent since eval forward is pure).
inline BatchScorer model_scorer(nn::StDenseNet<float>& model) {
  return [&model](const std::vector<const TrackWindow*>& windows) {
    const nn::StDenseNetConfig& cfg = model.config();
    std::vector<std::array<double, 2>> rows;
    if (windows.empty()) return rows;
    nn::Tensor5<float> batch(static_cast<int>(windows.size()), cfg.input_channels,
                             cfg.input_depth, cfg.input_height, cfg.input_width);
    std::size_t stride = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      nn::Tensor5<float> one = windows[i]->to_tensor<float>(
          cfg.input_height, cfg.input_width, cfg.pixel_mean, cfg.pixel_std);
      stride = one.size();
      std::copy(one.data(), one.data() + stride, batch.data() + i * stride);
    }
    nn::Tensor5<float> probs = model.forward(batch, /*train=*/false, /*cache=*/false);
    rows.resize(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      rows[i] = {static_cast<double>(probs.at(static_cast<int>(i), 0, 0, 0, 0)),
                 static_cast<double>(probs.at(static_cast<int>(i), 1, 0, 0, 0))};
    }
    return rows;
  };
}

// Second-stage driver: runs the tracker, maintains one sliding window per
// live track (crops cut from the tracker's filtered boxes), and emits an
// IntentScore for every window holding a full 16 crops. Windows of tracks
// that leave the output are discarded, never flushed partially.
class IntentPipeline {
public:
  IntentPipeline(const TrackerParams& tracker_params, BatchScorer scorer)
      : tracker_(tracker_params), scorer_(std::move(scorer)) {}

  struct FrameResult {
    std::vector<TrackOutput> tracks;
    std::vector<IntentScore> scores;
    double tracking_seconds = 0.0;    // the tracker call
    double prediction_seconds = 0.0;  // crop + window upkeep + inference
  };

  FrameResult step(const Frame& frame, const std::vector<BBox>& detections) {
    using clock = std::chrono::steady_clock;
    FrameResult result;
    const auto t_start = clock::now();
    result.tracks = tracker_.step(frame.index, detections);
    const auto t_tracked = clock::now();

    // Drop windows whose track is no longer reported (deleted or occluded
    // past max_age); a confirmed track reappears only with its id intact.
    std::map<int, char> live;
    for (const TrackOutput& t : result.tracks) live[t.id] = 1;
    for (auto it = windows_.begin(); it != windows_.end();) {
      it = live.count(it->first) ? std::next(it) : windows_.erase(it);
    }

    for (const TrackOutput& t : result.tracks) {
      auto [it, inserted] = windows_.try_emplace(t.id, t.id);
      try {
        it->second.push(crop_and_resize(frame.image, t.box), frame.index, t.box);
      } catch (const ValidationError&) {
        // Box coasted fully outside the frame: the window can no longer stay
        // contiguous, so restart it.
        windows_.erase(it);
      }
    }

    std::vector<const TrackWindow*> ready;
    for (const auto& [id, window] : windows_) {
      if (window.ready()) ready.push_back(&window);
    }
    if (!ready.empty()) {
      std::vector<std::array<double, 2>> rows = scorer_(ready);
      if (rows.size() != ready.size()) {
        throw ValidationError("IntentPipeline: scorer returned wrong row count");
      }
      for (std::size_t i = 0; i < ready.size(); ++i) {
        result.scores.push_back(IntentScore{ready[i]->track_id(), rows[i][1], rows[i][0],
                                            frame.index});
      }
    }
    const auto t_done = clock::now();
    result.tracking_seconds = std::chrono::duration<double>(t_tracked - t_start).count();
    result.prediction_seconds = std::chrono::duration<double>(t_done - t_tracked).count();
    return result;
  }

  const SortUkfTracker& tracker() const { return tracker_; }

private:
  SortUkfTracker tracker_;
  std::map<int, TrackWindow> windows_;
  BatchScorer scorer_;
};

}  // namespace pedintent
