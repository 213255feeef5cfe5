#pragma once
// Group-relative policy optimization with fidelity-weighted advantages.
// Trajectory scores are mean-centered within the sampling group (no
// variance normalization), then each tool-using trajectory's advantage is
// scaled by a clipped evidence-fidelity factor:
//   f~ = clip(f, -c, c)
//   h  = max(1 + alpha * f~, s_min)   if A >= 0 and tool used
//        max(1 - alpha * f~, s_min)   if A <  0 and tool used
//        1                            if tool-free
//   A^ = A * h
// The toy policy is a softmax over a discretized (start x length) window
// grid; one trajectory is one window choice. The KL-free ratio objective is
// J = (1/G) sum_k [pi_new(w_k) / pi_old(w_k)] * A^_k.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vidrl/answerer.hpp"
#include "vidrl/errors.hpp"
#include "vidrl/protocol.hpp"
#include "vidrl/qa_filter.hpp"
#include "vidrl/reward.hpp"
#include "vidrl/rng.hpp"
#include "vidrl/video_env.hpp"

namespace vidrl {

inline constexpr int kDefaultGroupSize = 16;  // rollouts per prompt

struct AdvantageConfig {
  double alpha_adv = 0.5;    // modulation strength
  double clip_c = 1.0;       // fidelity clipping bound
  double floor_s_min = 0.1;  // positive floor on the factor

  void validate() const {
    if (!(alpha_adv > 0.0) || !std::isfinite(alpha_adv))
      throw ConfigError("alpha_adv must be positive");
    if (!(clip_c > 0.0) || !std::isfinite(clip_c))
      throw ConfigError("clip_c must be positive");
    if (!(floor_s_min > 0.0) || !(floor_s_min <= 1.0))
      throw ConfigError("floor_s_min must lie in (0, 1]");
  }
};

// S_i: the trajectory score. All reward components are terminal, so the
// per-step sum collapses to the single composite total.
inline std::vector<double> group_scores(const std::vector<RewardBreakdown>& rewards) {
  if (rewards.empty()) throw EmptyGroupError("group_scores on an empty group");
  std::vector<double> scores;
  scores.reserve(rewards.size());
  for (const RewardBreakdown& r : rewards) scores.push_back(r.total);
  return scores;
}

// A_i = S_i - mean(S); no variance normalization.
inline std::vector<double> raw_advantages(const std::vector<double>& scores) {
  if (scores.empty()) throw EmptyGroupError("raw_advantages on an empty group");
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) /
                      static_cast<double>(scores.size());
  std::vector<double> adv;
  adv.reserve(scores.size());
  for (double s : scores) adv.push_back(s - mean);
  return adv;
}

// h(tau): the fidelity factor. Always positive, so modulation never flips
// the sign of an advantage.
inline double fidelity_factor(double raw_advantage, double fidelity, int tool_mask,
                              const AdvantageConfig& cfg) {
  cfg.validate();
  if (tool_mask == 0) return 1.0;
  const double clipped = std::min(cfg.clip_c, std::max(-cfg.clip_c, fidelity));
  if (raw_advantage >= 0.0)
    return std::max(1.0 + cfg.alpha_adv * clipped, cfg.floor_s_min);
  return std::max(1.0 - cfg.alpha_adv * clipped, cfg.floor_s_min);
}

inline std::vector<double> modulated_advantages(const std::vector<double>& raw,
                                                const std::vector<double>& fidelities,
                                                const std::vector<int>& tool_mask,
                                                const AdvantageConfig& cfg) {
  if (raw.size() != fidelities.size() || raw.size() != tool_mask.size())
    throw DomainError("modulated_advantages requires aligned inputs");
  std::vector<double> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    out.push_back(raw[i] * fidelity_factor(raw[i], fidelities[i], tool_mask[i], cfg));
  return out;
}

// n trajectories for one query, with every per-trajectory quantity the
// update needs. sampled_actions are policy grid indices.
struct GroupBatch {
  std::string query_id;
  std::vector<Trajectory> trajectories;
  std::vector<RewardBreakdown> rewards;
  std::vector<double> scores;
  std::vector<double> raw_advantages;
  std::vector<double> fidelities;
  std::vector<int> tool_mask;
  std::vector<double> modulated;
  std::vector<std::size_t> sampled_actions;

  // sampled_actions is the authoritative per-rollout list; the update path
  // works on action/advantage pairs even when trajectories are not kept.
  std::size_t size() const { return sampled_actions.size(); }
};

inline std::vector<double> modulated_advantages(const GroupBatch& batch,
                                                const AdvantageConfig& cfg) {
  return modulated_advantages(batch.raw_advantages, batch.fidelities, batch.tool_mask, cfg);
}

// --- toy window policy -------------------------------------------------------

// Softmax policy over candidate crop windows; stands in for the trajectory
// policy, factorized as a single window choice per rollout.
struct WindowPolicy {
  std::vector<TimeInterval> grid;
  std::vector<double> logits;
  double temperature = 1.0;

  void validate() const {
    if (grid.empty() || grid.size() != logits.size())
      throw ConfigError("policy requires one logit per grid window");
    if (!(temperature > 0.0) || !std::isfinite(temperature))
      throw ConfigError("temperature must be positive");
  }

  std::vector<double> probs() const {
    validate();
    double max_logit = logits[0];
    for (double z : logits) max_logit = std::max(max_logit, z);
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      p[i] = std::exp((logits[i] - max_logit) / temperature);
      sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
  }

  std::size_t sample(std::mt19937_64& rng) const {
    const auto p = probs();
    const double u = u01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) return i;
    }
    return p.size() - 1;
  }

  std::size_t argmax() const {
    validate();
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
      if (logits[i] > logits[best]) best = i;
    return best;
  }
};

// Uniform policy over an evenly spaced start grid crossed with a set of
// window lengths; windows are clipped to the video duration, so the grid
// covers [0, duration].
inline WindowPolicy make_window_policy(double duration, int n_starts,
                                       const std::vector<double>& lengths,
                                       double temperature = 1.0) {
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (n_starts < 1 || lengths.empty()) throw ConfigError("grid must be non-empty");
  for (double len : lengths)
    if (!(len > 0.0)) throw ConfigError("window lengths must be positive");
  WindowPolicy policy;
  policy.temperature = temperature;
  for (int i = 0; i < n_starts; ++i) {
    const double start = duration * i / n_starts;
    for (double len : lengths)
      policy.grid.push_back({start, std::min(start + len, duration)});
  }
  policy.logits.assign(policy.grid.size(), 0.0);
  policy.validate();
  return policy;
}

// Geometric length ladder: min_window_s, 2x, 4x, ...
inline WindowPolicy make_window_policy(double duration, int n_starts = 20,
                                       int n_lengths = 5, double min_window_s = 0.0,
                                       double temperature = 1.0) {
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (n_lengths < 1) throw ConfigError("grid must be non-empty");
  if (min_window_s <= 0.0) min_window_s = duration / 64.0;
  std::vector<double> lengths;
  for (int j = 0; j < n_lengths; ++j) lengths.push_back(min_window_s * std::pow(2.0, j));
  return make_window_policy(duration, n_starts, lengths, temperature);
}

// --- rollouts ------------------------------------------------------------------

struct RolloutConfig {
  ToolConfig tool;
  CropRewardSchedule crop_schedule;
  FrameRewardConfig frame_config;
  AdvantageConfig advantage;
  std::size_t answer_length_cap = kDefaultAnswerLengthCap;
  std::size_t max_rounds = kDefaultMaxRounds;
  bool evidence_enabled = true;  // ablation switch
};

// One scripted rollout: crop the sampled window, answer from whatever
// evidence came back.
inline Trajectory scripted_rollout(const WindowPolicy& policy, std::size_t action,
                                   const SyntheticVideo& video, const QACandidate& query,
                                   const RolloutConfig& cfg) {
  const TimeInterval window = policy.grid[action];
  Trajectory traj;
  traj.query_id = query.query_id;
  traj.video_id = video.video_id;
  std::ostringstream thought;
  thought << "inspect window [" << window.start << ", " << window.end << "]";
  const ToolCall call = ToolCall::crop(video.video_id, window.start, window.end);
  const Observation obs = crop_video(video, window, cfg.tool);
  traj = append_turn(traj, thought.str(), call, obs, cfg.max_rounds);
  const std::string answer =
      scripted_clip_answer(video, query.question, observed_tokens(obs));
  return finalize(traj, "commit to the retrieved evidence", answer, cfg.max_rounds);
}

// Samples n windows from the policy, executes and scores each rollout, and
// assembles the advantage-ready batch. Deterministic for a fixed seed;
// environment errors surface as zero-evidence rollouts, never as aborts.
inline GroupBatch rollout_group(const WindowPolicy& policy, const SyntheticVideo& video,
                                const QACandidate& query, int n, std::uint64_t seed,
                                const RolloutConfig& cfg, AnswerJudge& judge) {
  if (n < 1) throw EmptyGroupError("rollout_group requires n >= 1");
  policy.validate();
  const Supervision sup = Supervision::interval(query.window.start, query.window.end);
  GroupBatch batch;
  batch.query_id = query.query_id;
  for (int k = 0; k < n; ++k) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const std::size_t action = policy.sample(rng);
    Trajectory traj = scripted_rollout(policy, action, video, query, cfg);
    RewardBreakdown reward =
        composite_reward(traj, query.question, query.answer, sup, cfg.crop_schedule,
                         cfg.frame_config, judge, cfg.answer_length_cap, cfg.max_rounds);
    if (!cfg.evidence_enabled) {
      reward.r_evidence = 0.0;
      reward.total = reward.r_acc + reward.r_format;
    }
    batch.sampled_actions.push_back(action);
    batch.tool_mask.push_back(1);
    batch.fidelities.push_back(reward.r_evidence);
    batch.rewards.push_back(reward);
    batch.trajectories.push_back(std::move(traj));
  }
  batch.scores = group_scores(batch.rewards);
  batch.raw_advantages = raw_advantages(batch.scores);
  batch.modulated = modulated_advantages(batch, cfg.advantage);
  return batch;
}

// --- KL-free ratio objective ---------------------------------------------------

// J = (1/G) sum_k ratio_k * A^_k with ratio_k = pi_new(w_k) / pi_old(w_k).
inline double grpo_objective(const WindowPolicy& policy, const WindowPolicy& old_policy,
                             const GroupBatch& batch) {
  const auto p_new = policy.probs();
  const auto p_old = old_policy.probs();
  if (p_new.size() != p_old.size())
    throw DomainError("policy and old_policy must share a grid");
  double value = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const std::size_t a = batch.sampled_actions[k];
    const double ratio = p_new[a] / p_old[a];
    if (!std::isfinite(ratio)) throw NumericalError("non-finite likelihood ratio");
    value += ratio * batch.modulated[k];
  }
  return value / static_cast<double>(batch.size());
}

// Analytic gradient of the objective with respect to the new policy logits.
// With p = softmax(z / tau):
//   dJ/dz_j = (1/(G tau)) [ sum_{k: a_k = j} A^_k ratio_k
//                           - p_new(j) sum_k A^_k ratio_k ].
inline std::vector<double> grpo_gradient(const WindowPolicy& policy,
                                         const WindowPolicy& old_policy,
                                         const GroupBatch& batch) {
  const auto p_new = policy.probs();
  const auto p_old = old_policy.probs();
  if (p_new.size() != p_old.size())
    throw DomainError("policy and old_policy must share a grid");
  if (batch.size() == 0) throw EmptyGroupError("grpo_gradient on an empty batch");
  std::vector<double> grad(p_new.size(), 0.0);
  double weighted_sum = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const std::size_t a = batch.sampled_actions[k];
    const double ratio = p_new[a] / p_old[a];
    if (!std::isfinite(ratio)) throw NumericalError("non-finite likelihood ratio");
    const double w = batch.modulated[k] * ratio;
    grad[a] += w;
    weighted_sum += w;
  }
  const double scale =
      1.0 / (static_cast<double>(batch.size()) * policy.temperature);
  for (std::size_t j = 0; j < grad.size(); ++j)
    grad[j] = scale * (grad[j] - p_new[j] * weighted_sum);
  return grad;
}

// One ascent step on the ratio objective. old_policy must be the policy the
// batch was sampled from.
inline WindowPolicy grpo_step(const WindowPolicy& policy, const WindowPolicy& old_policy,
                              const GroupBatch& batch, double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  const auto grad = grpo_gradient(policy, old_policy, batch);
  WindowPolicy next = policy;
  for (std::size_t j = 0; j < grad.size(); ++j) {
    next.logits[j] += lr * grad[j];
    if (!std::isfinite(next.logits[j])) throw NumericalError("non-finite logit after update");
  }
  return next;
}

// Probability mass the policy places on grid windows whose IoU with the
// ground-truth window is at least the threshold.
inline double prob_mass_on_window(const WindowPolicy& policy, const TimeInterval& gt,
                                  double iou_threshold = 0.5) {
  const auto p = policy.probs();
  double mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (interval_iou(policy.grid[i], gt) >= iou_threshold) mass += p[i];
  return mass;
}

}  // namespace vidrl
