#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/geometry.hpp"
#include "pedintent/hungarian.hpp"
#include "pedintent/ukf.hpp"

namespace pedintent {

struct AssociationResult {
  std::vector<std::pair<int, int>> matches;  // (track index, detection index)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_detections;
};

// Optimal assignment on cost(i, j) = 1 - iou, then a gate: any matched pair
// whose overlap falls below iou_min is demoted to unmatched on both sides.
inline AssociationResult associate(const std::vector<BBox>& predicted_boxes,
                                   const std::vector<BBox>& detections, double iou_min) {
  if (!(iou_min >= 0.0 && iou_min <= 1.0)) {
    throw ValidationError("associate: iou_min must be in [0, 1]");
  }
  const int n_tracks = static_cast<int>(predicted_boxes.size());
  const int n_dets = static_cast<int>(detections.size());

  AssociationResult result;
  std::vector<char> track_used(n_tracks, 0);
  std::vector<char> det_used(n_dets, 0);

  if (n_tracks > 0 && n_dets > 0) {
    std::vector<double> cost(static_cast<std::size_t>(n_tracks) * n_dets);
    for (int i = 0; i < n_tracks; ++i) {
      for (int j = 0; j < n_dets; ++j) {
        cost[i * n_dets + j] = 1.0 - iou(predicted_boxes[i], detections[j]);
      }
    }
    for (const auto& [i, j] : hungarian(cost, n_tracks, n_dets)) {
      if (iou(predicted_boxes[i], detections[j]) >= iou_min) {
        result.matches.emplace_back(i, j);
        track_used[i] = 1;
        det_used[j] = 1;
      }
    }
  }
  for (int i = 0; i < n_tracks; ++i) {
    if (!track_used[i]) result.unmatched_tracks.push_back(i);
  }
  for (int j = 0; j < n_dets; ++j) {
    if (!det_used[j]) result.unmatched_detections.push_back(j);
  }
  return result;
}

// Identity-bearing lifecycle record: a belief plus the detection history that
// produced it.
struct Track {
  int id;
  GaussianBelief belief;
  int hits;               // successful associations, counting the founding detection
  int age;                // frames since creation
  int time_since_update;  // frames since last association
  std::vector<std::pair<int, BBox>> history;  // (frame index, detection box)
};

struct TrackerParams {
  double iou_min = 0.3;
  int max_age = 3;
  int min_hits = 3;
  SigmaPointParams sigma;
  NoiseConfig noise = NoiseConfig::defaults();

  // Birth covariance: large velocity uncertainty because velocity is
  // unobserved when a track spawns.
  static StateMatrix default_initial_covariance() {
    StateVector d;
    d << 10.0, 10.0, 100.0, 1e-2, 1e3, 1e3, 1e2;
    return d.asDiagonal();
  }
  StateMatrix initial_covariance = default_initial_covariance();
};

struct TrackOutput {
  int id;
  BBox box;
};

// SORT-style tracker with a sigma-point filter per track. Single-threaded
// mutable state machine; run one instance per scene.
class SortUkfTracker {
public:
  explicit SortUkfTracker(TrackerParams params = {}) : params_(std::move(params)) {
    params_.sigma.validate();
    params_.noise.validate();
    if (params_.max_age < 0 || params_.min_hits < 1) {
      throw ValidationError("TrackerParams: max_age must be >= 0 and min_hits >= 1");
    }
  }

  // Advances one frame: predict, associate, update/spawn/reap, then report
  // confirmed live tracks sorted by id. Frame indices must strictly increase.
  std::vector<TrackOutput> step(int frame_index, const std::vector<BBox>& detections) {
    if (last_frame_ && frame_index <= *last_frame_) {
      throw ValidationError("tracker: frame indices must be strictly increasing");
    }
    last_frame_ = frame_index;
    ++frames_processed_;

    std::vector<BBox> predicted;
    predicted.reserve(tracks_.size());
    for (Track& track : tracks_) {
      track.belief = ukf_predict(track.belief, 1.0, params_.noise, params_.sigma);
      ++track.age;
      ++track.time_since_update;
      predicted.push_back(current_box(track));
    }

    AssociationResult assoc = associate(predicted, detections, params_.iou_min);

    for (const auto& [track_idx, det_idx] : assoc.matches) {
      Track& track = tracks_[track_idx];
      track.belief = ukf_update(track.belief, bbox_to_observation(detections[det_idx]),
                                params_.noise, params_.sigma);
      ++track.hits;
      track.time_since_update = 0;
      track.history.emplace_back(frame_index, detections[det_idx]);
    }

    for (int det_idx : assoc.unmatched_detections) {
      const BBox& det = detections[det_idx];
      Observation obs = bbox_to_observation(det);
      StateVector mean;
      mean << obs.u, obs.v, obs.s, obs.r, 0.0, 0.0, 0.0;
      tracks_.push_back(Track{next_id_++, GaussianBelief(mean, params_.initial_covariance),
                              /*hits=*/1, /*age=*/0, /*time_since_update=*/0,
                              {{frame_index, det}}});
    }

    std::erase_if(tracks_,
                  [this](const Track& t) { return t.time_since_update > params_.max_age; });

    // min_hits is waived during the first min_hits frames of a run so short
    // clips still emit output.
    std::vector<TrackOutput> output;
    for (const Track& track : tracks_) {
      if (track.hits >= params_.min_hits || frames_processed_ <= params_.min_hits) {
        output.push_back(TrackOutput{track.id, current_box(track)});
      }
    }
    return output;
  }

  const std::vector<Track>& tracks() const { return tracks_; }
  int frames_processed() const { return frames_processed_; }
  const TrackerParams& params() const { return params_; }

private:
  // Scale is clamped on prediction already; the aspect ratio gets the same
  // floor here so an aggressive update cannot break the box reconstruction.
  static BBox current_box(const Track& track) {
    const StateVector& m = track.belief.mean;
    return observation_to_bbox(
        Observation(m(0), m(1), std::max(m(2), 1e-4), std::max(m(3), 1e-4)));
  }

  TrackerParams params_;
  std::vector<Track> tracks_;
  std::optional<int> last_frame_;
  int frames_processed_ = 0;
  int next_id_ = 1;
};

}  // namespace pedintent
