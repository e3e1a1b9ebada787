#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/geometry.hpp"
#include "pedintent/tracker.hpp"

namespace pedintent {

struct ScoredLabel {
  double score;
  bool positive;
};

// Rank-based average precision: AP = sum over recall increments of the
// precision at that point. Items with equal scores form one threshold group,
// with precision taken after the whole group, so rank order inside a tie
// never matters. Undefined (error) when there are no positives.
inline double average_precision(std::vector<ScoredLabel> items) {
  if (items.empty()) throw ValidationError("average_precision: no items");
  long positives = 0;
  for (const ScoredLabel& s : items) positives += s.positive;
  if (positives == 0) {
    throw ValidationError("average_precision: undefined without positive labels");
  }
  std::sort(items.begin(), items.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });

  double ap = 0.0;
  double prev_recall = 0.0;
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) {
      tp += items[j].positive;
      fp += !items[j].positive;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

struct PrecisionRecall {
  double precision;
  double recall;
};

// Precision/recall of "predict positive when score >= threshold". Empty
// denominators score 1 (vacuously correct).
inline PrecisionRecall precision_recall_at(const std::vector<ScoredLabel>& items,
                                           double threshold) {
  long tp = 0, fp = 0, fn = 0;
  for (const ScoredLabel& s : items) {
    const bool predicted = s.score >= threshold;
    tp += predicted && s.positive;
    fp += predicted && !s.positive;
    fn += !predicted && s.positive;
  }
  PrecisionRecall pr;
  pr.precision = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
  pr.recall = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
  return pr;
}

struct AgentBoxes {
  int agent_id;
  std::map<int, BBox> boxes_by_frame;
};

// Desk-scale identity metric: for each ground-truth agent, the fraction of
// its frames covered by its single most frequent track id (IOU-gated best
// match per frame). Mean over agents.
inline double identity_consistency(const std::vector<AgentBoxes>& agents,
                                   const std::map<int, std::vector<TrackOutput>>& tracks_by_frame,
                                   double match_iou = 0.3) {
  if (agents.empty()) throw ValidationError("identity_consistency: no agents");
  double total = 0.0;
  for (const AgentBoxes& agent : agents) {
    if (agent.boxes_by_frame.empty()) {
      throw ValidationError("identity_consistency: agent without frames");
    }
    std::map<int, int> coverage;  // track id -> frames covering this agent
    for (const auto& [frame, gt_box] : agent.boxes_by_frame) {
      auto it = tracks_by_frame.find(frame);
      if (it == tracks_by_frame.end()) continue;
      double best_overlap = -1.0;
      int best_id = -1;
      for (const TrackOutput& t : it->second) {
        double overlap = iou(t.box, gt_box);
        if (overlap > best_overlap) {
          best_overlap = overlap;
          best_id = t.id;
        }
      }
      if (best_id >= 0 && best_overlap >= match_iou) ++coverage[best_id];
    }
    int best_count = 0;
    for (const auto& [id, count] : coverage) best_count = std::max(best_count, count);
    total += static_cast<double>(best_count) /
             static_cast<double>(agent.boxes_by_frame.size());
  }
  return total / static_cast<double>(agents.size());
}

}  // namespace pedintent
