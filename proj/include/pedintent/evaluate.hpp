#pragma once

#include <map>
#include <set>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/intent.hpp"
#include "pedintent/metrics.hpp"
#include "pedintent/scenario.hpp"
#include "pedintent/tracker.hpp"

namespace pedintent {

struct EvalParams {
  // A window counts for evaluation when its newest frame falls in
  // [onset - horizon, onset - 1].
  int horizon = 16;
  double match_iou = 0.3;  // score-to-agent gating
  double threshold = 0.5;  // operating point for per-class precision/recall
};

struct EvalReport {
  bool ap_defined = false;
  double ap = 0.0;
  double precision_cross = 0.0;
  double recall_cross = 0.0;
  double precision_not_cross = 0.0;
  double recall_not_cross = 0.0;
  double identity_consistency = 0.0;
  int track_count = 0;
  int frames = 0;
  int emitted_scores = 0;
  int evaluated_samples = 0;
  int evaluated_positives = 0;
  double label_accuracy = 0.0;  // fraction of samples with majority mass on the true label
  double tracking_ms_per_frame = 0.0;
  double prediction_ms_per_frame = 0.0;
  double total_ms_per_frame = 0.0;
  double fps = 0.0;
};

namespace detail {

// Maps an emitted score to the agent best overlapping the track's box at
// that frame; keeps it when the frame falls inside the agent's pre-onset
// evaluation horizon.
inline std::vector<ScoredLabel> scored_samples(
    const Scenario& scenario, const std::vector<IntentScore>& scores,
    const std::map<int, std::map<int, BBox>>& track_boxes, const EvalParams& params) {
  std::vector<ScoredLabel> samples;
  for (const IntentScore& score : scores) {
    auto track_it = track_boxes.find(score.track_id);
    if (track_it == track_boxes.end()) continue;
    auto box_it = track_it->second.find(score.frame_index);
    if (box_it == track_it->second.end()) continue;
    const BBox& track_box = box_it->second;

    double best_overlap = -1.0;
    const AgentTruth* best_agent = nullptr;
    for (const AgentTruth& agent : scenario.agents) {
      if (score.frame_index >= scenario.config.num_frames) continue;
      double overlap = iou(track_box, agent.box_at(score.frame_index));
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best_agent = &agent;
      }
    }
    if (!best_agent || best_overlap < params.match_iou) continue;
    const int onset = best_agent->onset_frame;
    if (score.frame_index < onset - params.horizon || score.frame_index > onset - 1) continue;
    samples.push_back(ScoredLabel{score.p_cross, best_agent->crossing});
  }
  return samples;
}

}  // namespace detail

// Full second-stage evaluation: tracker + windows + scorer over every frame,
// then AP on pre-onset windows, per-class precision/recall at the operating
// threshold, identity consistency, and per-stage wall-clock timing in the
// tracking / prediction / total / fps layout.
inline EvalReport evaluate_scenario(const Scenario& scenario, BatchScorer scorer,
                                    const TrackerParams& tracker_params = {},
                                    const EvalParams& params = {}) {
  const int frames = scenario.config.num_frames;

  IntentPipeline pipeline(tracker_params, std::move(scorer));
  std::map<int, std::vector<TrackOutput>> tracks_by_frame;
  std::map<int, std::map<int, BBox>> track_boxes;  // id -> frame -> box
  std::vector<IntentScore> all_scores;
  std::set<int> seen_ids;
  double tracking_seconds = 0.0;
  double prediction_seconds = 0.0;

  for (int f = 0; f < frames; ++f) {
    Frame frame = render_frame(scenario, f);
    IntentPipeline::FrameResult result = pipeline.step(frame, detection_boxes(scenario, f));
    tracking_seconds += result.tracking_seconds;
    prediction_seconds += result.prediction_seconds;
    for (const TrackOutput& t : result.tracks) {
      seen_ids.insert(t.id);
      track_boxes[t.id].emplace(f, t.box);
    }
    tracks_by_frame.emplace(f, std::move(result.tracks));
    all_scores.insert(all_scores.end(), result.scores.begin(), result.scores.end());
  }

  EvalReport report;
  report.frames = frames;
  report.track_count = static_cast<int>(seen_ids.size());
  report.emitted_scores = static_cast<int>(all_scores.size());

  std::vector<ScoredLabel> samples =
      detail::scored_samples(scenario, all_scores, track_boxes, params);
  report.evaluated_samples = static_cast<int>(samples.size());

  long correct = 0;
  for (const ScoredLabel& s : samples) {
    report.evaluated_positives += s.positive;
    correct += (s.score >= params.threshold) == s.positive;
  }
  if (!samples.empty()) {
    report.label_accuracy = static_cast<double>(correct) / samples.size();
  }
  if (report.evaluated_positives > 0) {
    report.ap_defined = true;
    report.ap = average_precision(samples);
  }

  // Per-class operating point: predict "cross" when p_cross >= threshold,
  // "not cross" otherwise, so the two classes partition the samples.
  PrecisionRecall cross = precision_recall_at(samples, params.threshold);
  report.precision_cross = cross.precision;
  report.recall_cross = cross.recall;
  {
    long tp = 0, fp = 0, fn = 0;
    for (const ScoredLabel& s : samples) {
      const bool predicted_not = s.score < params.threshold;
      tp += predicted_not && !s.positive;
      fp += predicted_not && s.positive;
      fn += !predicted_not && !s.positive;
    }
    report.precision_not_cross = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
    report.recall_not_cross = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
  }

  report.identity_consistency =
      identity_consistency(ground_truth_boxes(scenario), tracks_by_frame, params.match_iou);

  report.tracking_ms_per_frame = 1000.0 * tracking_seconds / frames;
  report.prediction_ms_per_frame = 1000.0 * prediction_seconds / frames;
  report.total_ms_per_frame = report.tracking_ms_per_frame + report.prediction_ms_per_frame;
  report.fps = report.total_ms_per_frame > 0.0 ? 1000.0 / report.total_ms_per_frame : 0.0;
  return report;
}

}  // namespace pedintent
