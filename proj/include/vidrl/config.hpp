#pragma once
// One declarative experiment config: every knob of the pipeline in a single
// JSON document with overridable defaults. The manifest records the config
// hash and every artifact a run emitted.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidrl/errors.hpp"
#include "vidrl/grpo.hpp"
#include "vidrl/qa_filter.hpp"
#include "vidrl/reward.hpp"
#include "vidrl/video_env.hpp"

namespace vidrl {

struct PolicyConfig {
  int n_starts = 20;
  int n_lengths = 5;
  double min_window_s = 0.0;           // 0 -> duration / 64
  std::vector<double> window_lengths;  // explicit ladder; overrides the geometric one
  double temperature = 1.0;

  void validate() const {
    if (n_starts < 1 || n_lengths < 1) throw ConfigError("policy grid must be non-empty");
    for (double len : window_lengths)
      if (!(len > 0.0)) throw ConfigError("window lengths must be positive");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  }
};

struct TrainConfig {
  int group_size = kDefaultGroupSize;
  int steps = 200;
  double lr = 0.1;

  void validate() const {
    if (group_size < 1) throw ConfigError("group_size must be >= 1");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  }
};

struct JudgeConfig {
  std::string backend = "mock";  // mock | http
  std::string endpoint;          // http backend; VIDRL_JUDGE_ENDPOINT overrides

  void validate() const {
    if (backend != "mock" && backend != "http")
      throw ConfigError("judge backend must be mock or http");
  }
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  int n_videos = 1;
  GeneratorConfig video;
  ToolConfig tool;
  CropRewardSchedule reward;
  FrameRewardConfig frame_reward;
  bool evidence_enabled = true;
  std::size_t answer_length_cap = kDefaultAnswerLengthCap;
  std::size_t max_rounds = kDefaultMaxRounds;
  AdvantageConfig advantage;
  PolicyConfig policy;
  TrainConfig train;
  FilterThresholds filter;
  JudgeConfig judge;
  std::string output_dir = "runs/out";

  void validate() const {
    if (n_videos < 1) throw ConfigError("n_videos must be >= 1");
    video.validate();
    tool.validate();
    reward.validate();
    frame_reward.validate();
    advantage.validate();
    policy.validate();
    train.validate();
    filter.validate();
    judge.validate();
    if (output_dir.empty()) throw ConfigError("output_dir must be set");
  }
};

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["n_videos"] = c.n_videos;
  j["video"] = {{"duration", c.video.duration},
                {"n_events", c.video.n_events},
                {"distractor_density", c.video.distractor_density},
                {"base_fps", c.video.base_fps},
                {"event_min_width", c.video.event_min_width},
                {"event_max_width", c.video.event_max_width},
                {"tokens_per_event", c.video.tokens_per_event}};
  j["tool"] = {{"dense_fps", c.tool.dense_fps}, {"frame_cap", c.tool.frame_cap}};
  j["reward"] = {{"h0", c.reward.h0},
                 {"delta", c.reward.delta},
                 {"alpha_crop", c.reward.alpha_crop},
                 {"eta", c.reward.eta},
                 {"tolerance_w", c.frame_reward.tolerance_w},
                 {"evidence_enabled", c.evidence_enabled},
                 {"answer_length_cap", c.answer_length_cap}};
  j["max_rounds"] = c.max_rounds;
  j["advantage"] = {{"alpha_adv", c.advantage.alpha_adv},
                    {"clip_c", c.advantage.clip_c},
                    {"floor_s_min", c.advantage.floor_s_min}};
  j["policy"] = {{"n_starts", c.policy.n_starts},
                 {"n_lengths", c.policy.n_lengths},
                 {"min_window_s", c.policy.min_window_s},
                 {"window_lengths", c.policy.window_lengths},
                 {"temperature", c.policy.temperature}};
  j["train"] = {{"group_size", c.train.group_size},
                {"steps", c.train.steps},
                {"lr", c.train.lr}};
  j["filter"] = {{"theta_text", c.filter.theta_text},
                 {"theta_sum", c.filter.theta_sum},
                 {"theta_loc", c.filter.theta_loc},
                 {"pool_size", c.filter.pool_size}};
  j["judge"] = {{"backend", c.judge.backend}, {"endpoint", c.judge.endpoint}};
  j["output_dir"] = c.output_dir;
  return j;
}

namespace detail {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad config value for ") + key);
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "n_videos", c.n_videos);
  detail::read_field(j, "max_rounds", c.max_rounds);
  detail::read_field(j, "output_dir", c.output_dir);
  if (j.contains("video")) {
    const json& v = j["video"];
    detail::read_field(v, "duration", c.video.duration);
    detail::read_field(v, "n_events", c.video.n_events);
    detail::read_field(v, "distractor_density", c.video.distractor_density);
    detail::read_field(v, "base_fps", c.video.base_fps);
    detail::read_field(v, "event_min_width", c.video.event_min_width);
    detail::read_field(v, "event_max_width", c.video.event_max_width);
    detail::read_field(v, "tokens_per_event", c.video.tokens_per_event);
  }
  if (j.contains("tool")) {
    detail::read_field(j["tool"], "dense_fps", c.tool.dense_fps);
    detail::read_field(j["tool"], "frame_cap", c.tool.frame_cap);
  }
  if (j.contains("reward")) {
    const json& r = j["reward"];
    detail::read_field(r, "h0", c.reward.h0);
    detail::read_field(r, "delta", c.reward.delta);
    detail::read_field(r, "alpha_crop", c.reward.alpha_crop);
    detail::read_field(r, "eta", c.reward.eta);
    detail::read_field(r, "tolerance_w", c.frame_reward.tolerance_w);
    detail::read_field(r, "evidence_enabled", c.evidence_enabled);
    detail::read_field(r, "answer_length_cap", c.answer_length_cap);
  }
  if (j.contains("advantage")) {
    const json& a = j["advantage"];
    detail::read_field(a, "alpha_adv", c.advantage.alpha_adv);
    detail::read_field(a, "clip_c", c.advantage.clip_c);
    detail::read_field(a, "floor_s_min", c.advantage.floor_s_min);
  }
  if (j.contains("policy")) {
    const json& p = j["policy"];
    detail::read_field(p, "n_starts", c.policy.n_starts);
    detail::read_field(p, "n_lengths", c.policy.n_lengths);
    detail::read_field(p, "min_window_s", c.policy.min_window_s);
    detail::read_field(p, "window_lengths", c.policy.window_lengths);
    detail::read_field(p, "temperature", c.policy.temperature);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    detail::read_field(t, "group_size", c.train.group_size);
    detail::read_field(t, "steps", c.train.steps);
    detail::read_field(t, "lr", c.train.lr);
  }
  if (j.contains("filter")) {
    const json& f = j["filter"];
    detail::read_field(f, "theta_text", c.filter.theta_text);
    detail::read_field(f, "theta_sum", c.filter.theta_sum);
    detail::read_field(f, "theta_loc", c.filter.theta_loc);
    detail::read_field(f, "pool_size", c.filter.pool_size);
  }
  if (j.contains("judge")) {
    detail::read_field(j["judge"], "backend", c.judge.backend);
    detail::read_field(j["judge"], "endpoint", c.judge.endpoint);
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

// FNV-1a over the canonical dump; changes iff any config field changes.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string canon = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char byte : canon) {
    h ^= byte;
    h *= 0x00000100000001b3ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

struct RunManifest {
  std::string config_hash;
  std::map<std::string, std::string> artifacts;  // name -> path
  double wall_clock_seconds = 0.0;
  std::map<std::string, std::string> versions;
};

inline json manifest_to_json(const RunManifest& m) {
  json j;
  j["config_hash"] = m.config_hash;
  j["artifacts"] = m.artifacts;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["versions"] = m.versions;
  return j;
}

}  // namespace vidrl
