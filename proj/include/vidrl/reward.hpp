#pragma once
// Composite reward R = R_acc + R_format + R_evidence. The evidence term
// scores the last crop_video call by temporal IoU against the supervision
// window (with a stepped bonus schedule) and the last get_frame call by
// timestamp alignment.

#include <cmath>
#include <optional>
#include <string>

#include "vidrl/errors.hpp"
#include "vidrl/judge.hpp"
#include "vidrl/protocol.hpp"
#include "vidrl/video_env.hpp"

namespace vidrl {

inline constexpr std::size_t kDefaultAnswerLengthCap = 64;  // tokens

// Stepped bonus schedule for crop alignment:
//   IoU = 0  ->  0
//   IoU > 0  ->  alpha_crop * sign(IoU - h0) + eta * floor((IoU - h0) / delta)
// with sign(0) = 0. Negative values below h0 are intentional and not clamped.
struct CropRewardSchedule {
  double h0 = 0.3;
  double delta = 0.1;
  double alpha_crop = 0.2;
  double eta = 0.05;

  void validate() const {
    if (!(h0 > 0.0 && h0 < 1.0)) throw ConfigError("h0 must lie in (0, 1)");
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
    if (!(alpha_crop > 0.0) || !std::isfinite(alpha_crop))
      throw ConfigError("alpha_crop must be positive");
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be >= 0");
  }
};

struct FrameRewardConfig {
  double tolerance_w = 5.0;  // seconds

  void validate() const {
    if (!(tolerance_w > 0.0) || !std::isfinite(tolerance_w))
      throw ConfigError("tolerance_w must be positive");
  }
};

struct RewardBreakdown {
  double r_acc = 0.0;       // {0, 0.5, 1}
  double r_format = 0.0;    // {0, 1}
  double r_evidence = 0.0;
  double total = 0.0;       // exact component sum

  bool operator==(const RewardBreakdown&) const = default;
};

// Temporal IoU of two intervals; 0 when the union has zero length.
inline double interval_iou(const TimeInterval& a, const TimeInterval& b) {
  if (!(a.start <= a.end) || !(b.start <= b.end))
    throw DomainError("interval_iou requires start <= end");
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = a.length() + b.length() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

namespace detail {

// floor((iou - h0) / delta), with the quotient snapped to the nearest
// integer when it sits within 1e-9 of one. Keeps schedule boundaries where
// the real-valued formula puts them; the bare double quotient can land one
// ulp below an exact boundary (e.g. (1.0 - 0.3) / 0.1 < 7).
inline double schedule_steps(double iou, double h0, double delta) {
  const double q = (iou - h0) / delta;
  const double r = std::round(q);
  if (std::abs(q - r) < 1e-9) return r;
  return std::floor(q);
}

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

// Interval supervision: the stepped IoU schedule. Frame supervision: the
// coverage indicator 1[p_s <= g_f <= p_e].
inline double crop_reward(const TimeInterval& pred, const Supervision& sup,
                          const CropRewardSchedule& sched) {
  sched.validate();
  if (!std::isfinite(pred.start) || !std::isfinite(pred.end) || !(pred.start <= pred.end))
    throw DomainError("crop_reward requires a valid predicted interval");
  if (sup.kind == Supervision::Kind::frame)
    return (pred.start <= sup.frame_time && sup.frame_time <= pred.end) ? 1.0 : 0.0;
  const double iou = interval_iou(pred, sup.window);
  if (iou == 0.0) return 0.0;
  return sched.alpha_crop * detail::sign(iou - sched.h0) +
         sched.eta * detail::schedule_steps(iou, sched.h0, sched.delta);
}

// Interval supervision: in-segment indicator. Frame supervision: proximity
// score max(0, 1 - |t - g_f| / w).
inline double frame_reward(double t, const Supervision& sup, const FrameRewardConfig& cfg) {
  cfg.validate();
  if (sup.kind == Supervision::Kind::interval)
    return (sup.window.start <= t && t <= sup.window.end) ? 1.0 : 0.0;
  return std::max(0.0, 1.0 - std::abs(t - sup.frame_time) / cfg.tolerance_w);
}

// Judge scalar for the final answer; overlong answers score 0 outright.
inline double accuracy_reward(const std::string& question, const std::string& reference,
                              const std::string& answer, AnswerJudge& judge,
                              std::size_t length_cap = kDefaultAnswerLengthCap) {
  if (text::raw_token_count(answer) > length_cap) return 0.0;
  return judge.grade(question, reference, answer);
}

inline double format_reward(const Trajectory& traj,
                            std::size_t max_rounds = kDefaultMaxRounds) {
  return validate_format(traj, max_rounds) ? 1.0 : 0.0;
}

inline std::optional<TimeInterval> last_crop_window(const Trajectory& traj) {
  std::optional<TimeInterval> window;
  for (const Turn& turn : traj.turns)
    if (turn.action && turn.action->tool_name == ToolName::crop_video)
      window = TimeInterval{turn.action->window_start, turn.action->window_end};
  return window;
}

inline std::optional<double> last_frame_timestamp(const Trajectory& traj) {
  std::optional<double> t;
  for (const Turn& turn : traj.turns)
    if (turn.action && turn.action->tool_name == ToolName::get_frame)
      t = turn.action->timestamp;
  return t;
}

// Sum of the per-tool last-call components; 0 when no tool was called.
inline double evidence_reward(const Trajectory& traj, const Supervision& sup,
                              const CropRewardSchedule& sched, const FrameRewardConfig& cfg) {
  double r = 0.0;
  if (const auto window = last_crop_window(traj)) r += crop_reward(*window, sup, sched);
  if (const auto t = last_frame_timestamp(traj)) r += frame_reward(*t, sup, cfg);
  return r;
}

inline RewardBreakdown composite_reward(const Trajectory& traj, const std::string& question,
                                        const std::string& reference, const Supervision& sup,
                                        const CropRewardSchedule& sched,
                                        const FrameRewardConfig& cfg, AnswerJudge& judge,
                                        std::size_t length_cap = kDefaultAnswerLengthCap,
                                        std::size_t max_rounds = kDefaultMaxRounds) {
  RewardBreakdown out;
  out.r_acc = accuracy_reward(question, reference, traj.answer, judge, length_cap);
  out.r_format = format_reward(traj, max_rounds);
  out.r_evidence = evidence_reward(traj, sup, sched, cfg);
  out.total = out.r_acc + out.r_format + out.r_evidence;
  return out;
}

}  // namespace vidrl
