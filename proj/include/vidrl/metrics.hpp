#pragma once
// Temporal-grounding and grounded-VQA evaluation: recall at IoU thresholds,
// mean IoU, and judge-graded answer accuracy.

#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidrl/errors.hpp"
#include "vidrl/judge.hpp"
#include "vidrl/reward.hpp"

namespace vidrl {

// What evaluation extracts from a trajectory: the last crop_video window
// (absent when no crop was made) and the terminal answer.
struct GroundingPrediction {
  std::string query_id;
  std::optional<TimeInterval> window;
  std::string answer;
};

struct GroundTruthItem {
  std::string query_id;
  std::string question;
  std::string reference;
  TimeInterval window;
};

inline GroundingPrediction extract_prediction(const Trajectory& traj) {
  GroundingPrediction pred;
  pred.query_id = traj.query_id;
  pred.window = last_crop_window(traj);
  pred.answer = traj.answer;
  return pred;
}

struct EvalReport {
  std::map<double, double> recall_at;  // IoU threshold -> fraction
  double mean_iou = 0.0;
  double vqa_accuracy = 0.0;
  double vqa_mean_iou = 0.0;
  std::size_t n_items = 0;
};

namespace detail {

// pred lookup aligned by query_id; duplicates and unmatched predictions are
// alignment errors, a ground-truth item without a prediction scores IoU 0.
inline std::map<std::string, const GroundingPrediction*> align(
    const std::vector<GroundingPrediction>& preds,
    const std::vector<GroundTruthItem>& gts) {
  std::map<std::string, const GroundingPrediction*> by_id;
  for (const GroundingPrediction& p : preds)
    if (!by_id.emplace(p.query_id, &p).second)
      throw AlignmentError("duplicate prediction id: " + p.query_id);
  std::map<std::string, int> gt_ids;
  for (const GroundTruthItem& g : gts)
    if (++gt_ids[g.query_id] > 1)
      throw AlignmentError("duplicate ground-truth id: " + g.query_id);
  for (const auto& [id, p] : by_id)
    if (!gt_ids.count(id)) throw AlignmentError("prediction without ground truth: " + id);
  return by_id;
}

inline double item_iou(const GroundingPrediction* pred, const GroundTruthItem& gt) {
  if (!pred || !pred->window) return 0.0;
  return interval_iou(*pred->window, gt.window);
}

}  // namespace detail

inline double recall_at_iou(const std::vector<GroundingPrediction>& preds,
                            const std::vector<GroundTruthItem>& gts, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw DomainError("recall threshold must lie in (0, 1]");
  if (gts.empty()) throw EmptyGroupError("recall_at_iou on an empty ground-truth set");
  const auto by_id = detail::align(preds, gts);
  std::size_t hits = 0;
  for (const GroundTruthItem& gt : gts) {
    auto it = by_id.find(gt.query_id);
    const GroundingPrediction* pred = it == by_id.end() ? nullptr : it->second;
    if (detail::item_iou(pred, gt) >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gts.size());
}

inline double mean_iou(const std::vector<GroundingPrediction>& preds,
                       const std::vector<GroundTruthItem>& gts) {
  if (gts.empty()) throw EmptyGroupError("mean_iou on an empty ground-truth set");
  const auto by_id = detail::align(preds, gts);
  double sum = 0.0;
  for (const GroundTruthItem& gt : gts) {
    auto it = by_id.find(gt.query_id);
    sum += detail::item_iou(it == by_id.end() ? nullptr : it->second, gt);
  }
  return sum / static_cast<double>(gts.size());
}

// Grounded VQA: answer accuracy (only a full judge match counts) plus mean
// IoU over the same items.
inline std::pair<double, double> grounded_vqa_score(
    const std::vector<GroundingPrediction>& preds, const std::vector<GroundTruthItem>& gts,
    AnswerJudge& judge) {
  if (gts.empty()) throw EmptyGroupError("grounded_vqa_score on an empty ground-truth set");
  const auto by_id = detail::align(preds, gts);
  std::size_t correct = 0;
  for (const GroundTruthItem& gt : gts) {
    auto it = by_id.find(gt.query_id);
    if (it == by_id.end()) continue;
    if (judge.grade(gt.question, gt.reference, it->second->answer) == 1.0) ++correct;
  }
  return {static_cast<double>(correct) / static_cast<double>(gts.size()),
          mean_iou(preds, gts)};
}

inline EvalReport evaluate(const std::vector<GroundingPrediction>& preds,
                           const std::vector<GroundTruthItem>& gts, AnswerJudge& judge,
                           const std::vector<double>& thresholds = {0.3, 0.5, 0.7}) {
  EvalReport report;
  report.n_items = gts.size();
  for (double th : thresholds) report.recall_at[th] = recall_at_iou(preds, gts, th);
  report.mean_iou = mean_iou(preds, gts);
  const auto [acc, miou] = grounded_vqa_score(preds, gts, judge);
  report.vqa_accuracy = acc;
  report.vqa_mean_iou = miou;
  return report;
}

inline json report_to_json(const EvalReport& report) {
  json j;
  json recall = json::object();
  for (const auto& [th, value] : report.recall_at) {
    std::ostringstream key;
    key << th;
    recall[key.str()] = value;
  }
  j["recall_at"] = std::move(recall);
  j["mean_iou"] = report.mean_iou;
  j["vqa_accuracy"] = report.vqa_accuracy;
  j["vqa_mean_iou"] = report.vqa_mean_iou;
  j["n_items"] = report.n_items;
  // 0.5 judge scores carry no accuracy credit; recorded so reports are
  // self-describing.
  j["accuracy_counts_partial"] = false;
  return j;
}

// Aligned text table: R@0.3 / R@0.5 / R@0.7 / mIoU / Acc.
inline std::string render_report_table(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::setw(8) << "items";
  for (const auto& [th, _] : report.recall_at) {
    std::ostringstream header;
    header << "R@" << th;
    out << std::setw(10) << header.str();
  }
  out << std::setw(10) << "mIoU" << std::setw(10) << "Acc" << "\n";
  out << std::setw(8) << report.n_items;
  for (const auto& [_, value] : report.recall_at) out << std::setw(10) << value;
  out << std::setw(10) << report.mean_iou << std::setw(10) << report.vqa_accuracy << "\n";
  return out.str();
}

}  // namespace vidrl
