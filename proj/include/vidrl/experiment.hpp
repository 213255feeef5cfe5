#pragma once
// Experiment orchestration: the rollout -> reward -> advantage -> update
// loop, the per-step training log, greedy evaluation of the trained policy,
// and the run manifest. Everything is deterministic for a fixed (config,
// seed) under the mock judge.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidrl/clients_http.hpp"
#include "vidrl/config.hpp"
#include "vidrl/dataset.hpp"
#include "vidrl/grpo.hpp"
#include "vidrl/judge.hpp"
#include "vidrl/metrics.hpp"
#include "vidrl/version.hpp"

namespace vidrl {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char byte : s) {
    h ^= byte;
    h *= 0x00000100000001b3ull;
  }
  return h;
}

inline std::unique_ptr<AnswerJudge> make_judge(const JudgeConfig& cfg) {
  if (cfg.backend == "mock") return std::make_unique<MockJudge>();
  std::string endpoint = cfg.endpoint;
  if (const char* env = std::getenv("VIDRL_JUDGE_ENDPOINT"); env && *env) endpoint = env;
  if (endpoint.empty())
    throw ConfigError("http judge requires an endpoint (config or VIDRL_JUDGE_ENDPOINT)");
  return std::make_unique<HttpJudge>(endpoint);
}

inline WindowPolicy make_policy(const PolicyConfig& cfg, double duration) {
  if (!cfg.window_lengths.empty())
    return make_window_policy(duration, cfg.n_starts, cfg.window_lengths, cfg.temperature);
  return make_window_policy(duration, cfg.n_starts, cfg.n_lengths, cfg.min_window_s,
                            cfg.temperature);
}

inline RolloutConfig rollout_config(const ExperimentConfig& cfg) {
  RolloutConfig rcfg;
  rcfg.tool = cfg.tool;
  rcfg.crop_schedule = cfg.reward;
  rcfg.frame_config = cfg.frame_reward;
  rcfg.advantage = cfg.advantage;
  rcfg.answer_length_cap = cfg.answer_length_cap;
  rcfg.max_rounds = cfg.max_rounds;
  rcfg.evidence_enabled = cfg.evidence_enabled;
  return rcfg;
}

struct TrainStepRecord {
  int step = 0;
  std::string query_id;
  double mean_total_reward = 0.0;
  double mean_r_acc = 0.0;
  double tool_call_ratio = 0.0;
  double prob_mass_on_gt_window = 0.0;
};

inline json step_record_to_json(const TrainStepRecord& r) {
  json j;
  j["step"] = r.step;
  j["query_id"] = r.query_id;
  j["mean_total_reward"] = r.mean_total_reward;
  j["mean_r_acc"] = r.mean_r_acc;
  j["tool_call_ratio"] = r.tool_call_ratio;
  j["prob_mass_on_gt_window"] = r.prob_mass_on_gt_window;
  return j;
}

inline TrainStepRecord step_record_from_json(const json& j) {
  TrainStepRecord r;
  r.step = j.at("step").get<int>();
  r.query_id = j.at("query_id").get<std::string>();
  r.mean_total_reward = j.at("mean_total_reward").get<double>();
  r.mean_r_acc = j.at("mean_r_acc").get<double>();
  r.tool_call_ratio = j.at("tool_call_ratio").get<double>();
  r.prob_mass_on_gt_window = j.at("prob_mass_on_gt_window").get<double>();
  return r;
}

struct TrainResult {
  WindowPolicy policy;
  std::vector<TrainStepRecord> log;
};

// Group-relative training on one query: sample a group, update once with
// the sampling policy as old policy, repeat.
inline TrainResult train_toy(const SyntheticVideo& video, const QACandidate& query,
                             const ExperimentConfig& cfg, AnswerJudge& judge) {
  cfg.validate();
  const RolloutConfig rcfg = rollout_config(cfg);
  TrainResult result;
  result.policy = make_policy(cfg.policy, video.duration);
  const std::uint64_t query_seed = derive_seed(cfg.seed, fnv1a64(query.query_id));
  for (int step = 1; step <= cfg.train.steps; ++step) {
    const GroupBatch batch =
        rollout_group(result.policy, video, query, cfg.train.group_size,
                      derive_seed(query_seed, static_cast<std::uint64_t>(step)), rcfg, judge);
    result.policy = grpo_step(result.policy, result.policy, batch, cfg.train.lr);

    TrainStepRecord rec;
    rec.step = step;
    rec.query_id = query.query_id;
    const double n = static_cast<double>(batch.size());
    rec.mean_total_reward =
        std::accumulate(batch.scores.begin(), batch.scores.end(), 0.0) / n;
    double acc = 0.0;
    double tool_calls = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      acc += batch.rewards[k].r_acc;
      if (batch.tool_mask[k]) tool_calls += 1.0;
    }
    rec.mean_r_acc = acc / n;
    rec.tool_call_ratio = tool_calls / n;
    rec.prob_mass_on_gt_window = prob_mass_on_window(result.policy, query.window);
    result.log.push_back(rec);
  }
  return result;
}

inline void save_training_log(const std::string& path,
                              const std::vector<TrainStepRecord>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const TrainStepRecord& rec : log) out << step_record_to_json(rec).dump() << "\n";
}

inline std::vector<TrainStepRecord> load_training_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<TrainStepRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      out.push_back(step_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError("bad training log line: " + std::string(e.what()));
    }
  }
  return out;
}

inline json policy_to_json(const WindowPolicy& policy, const std::string& query_id) {
  json j;
  j["query_id"] = query_id;
  j["temperature"] = policy.temperature;
  json grid = json::array();
  for (const TimeInterval& w : policy.grid) grid.push_back(json::array({w.start, w.end}));
  j["grid"] = std::move(grid);
  j["logits"] = policy.logits;
  return j;
}

inline WindowPolicy policy_from_json(const json& j) {
  WindowPolicy policy;
  policy.temperature = j.at("temperature").get<double>();
  for (const json& jw : j.at("grid"))
    policy.grid.push_back({jw.at(0).get<double>(), jw.at(1).get<double>()});
  policy.logits = j.at("logits").get<std::vector<double>>();
  policy.validate();
  return policy;
}

// Full run over a corpus: trains one toy policy per QA candidate, evaluates
// the trained policies greedily, and writes every artifact plus a manifest
// listing them.
inline RunManifest run_experiment(const ExperimentConfig& cfg, const std::string& corpus_path,
                                  const std::string& qa_path) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const auto corpus = load_corpus(corpus_path);
  const auto candidates = load_candidates_jsonl(qa_path);
  if (candidates.empty()) throw Error("no QA candidates to train on");
  const auto judge = make_judge(cfg.judge);
  const RolloutConfig rcfg = rollout_config(cfg);

  fs::create_directories(cfg.output_dir);
  auto path_of = [&](const char* name) { return (fs::path(cfg.output_dir) / name).string(); };

  std::vector<TrainStepRecord> full_log;
  json policies = json::array();
  std::vector<GroundingPrediction> preds;
  std::vector<GroundTruthItem> gts;
  for (const QACandidate& cand : candidates) {
    const SyntheticVideo& video = find_video(corpus, cand.source_video);
    TrainResult res = train_toy(video, cand, cfg, *judge);
    full_log.insert(full_log.end(), res.log.begin(), res.log.end());
    policies.push_back(policy_to_json(res.policy, cand.query_id));
    const Trajectory traj =
        scripted_rollout(res.policy, res.policy.argmax(), video, cand, rcfg);
    preds.push_back(extract_prediction(traj));
    gts.push_back({cand.query_id, cand.question, cand.answer, cand.window});
  }
  const EvalReport report = evaluate(preds, gts, *judge);

  RunManifest manifest;
  manifest.config_hash = config_hash(cfg);
  manifest.versions["vidrl"] = kVersion;
  manifest.versions["compiler"] = __VERSION__;

  {
    std::ofstream out(path_of("config.json"), std::ios::binary);
    if (!out) throw IoError("cannot write config.json");
    out << config_to_json(cfg).dump(2) << "\n";
    manifest.artifacts["config"] = path_of("config.json");
  }
  save_training_log(path_of("training_log.jsonl"), full_log);
  manifest.artifacts["training_log"] = path_of("training_log.jsonl");
  {
    std::ofstream out(path_of("final_policy.json"), std::ios::binary);
    if (!out) throw IoError("cannot write final_policy.json");
    json j;
    j["policies"] = std::move(policies);
    out << j.dump(2) << "\n";
    manifest.artifacts["final_policy"] = path_of("final_policy.json");
  }
  {
    std::ofstream out(path_of("eval_report.json"), std::ios::binary);
    if (!out) throw IoError("cannot write eval_report.json");
    out << report_to_json(report).dump(2) << "\n";
    manifest.artifacts["eval_report"] = path_of("eval_report.json");
  }
  {
    std::ofstream out(path_of("eval_report.txt"), std::ios::binary);
    if (!out) throw IoError("cannot write eval_report.txt");
    out << render_report_table(report);
    manifest.artifacts["eval_report_table"] = path_of("eval_report.txt");
  }

  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.artifacts["manifest"] = path_of("manifest.json");
  {
    std::ofstream out(path_of("manifest.json"), std::ios::binary);
    if (!out) throw IoError("cannot write manifest.json");
    out << manifest_to_json(manifest).dump(2) << "\n";
  }
  return manifest;
}

// --- dataset generation --------------------------------------------------------

struct GenDataResult {
  std::string corpus_path;
  std::string qa_path;
  std::string summaries_path;
  std::size_t n_videos = 0;
  std::size_t n_candidates = 0;
};

inline std::string zero_padded(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

// Writes the video corpus, the QA candidate store and the per-video global
// summaries. n_guessable appends question-leaked candidate variants;
// n_summary_leak leaks event answers into their video's summary (making the
// corresponding clean candidates summary-answerable).
inline GenDataResult gen_dataset(const ExperimentConfig& cfg, const std::string& out_dir,
                                 int n_guessable = 0, int n_summary_leak = 0) {
  namespace fs = std::filesystem;
  cfg.validate();
  if (n_guessable < 0 || n_summary_leak < 0)
    throw ConfigError("contamination counts must be >= 0");
  fs::create_directories(out_dir);

  std::vector<SyntheticVideo> videos;
  std::vector<QACandidate> candidates;
  for (int i = 0; i < cfg.n_videos; ++i) {
    GeneratorConfig vcfg = cfg.video;
    vcfg.video_id = "vid_" + zero_padded(i, 4);
    SyntheticVideo video = generate_video(vcfg, derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    auto cands = make_candidates(video);
    candidates.insert(candidates.end(), cands.begin(), cands.end());
    videos.push_back(std::move(video));
  }

  if (n_guessable > 0 && candidates.empty())
    throw ConfigError("cannot contaminate an empty candidate set");
  const std::size_t n_clean = candidates.size();
  for (int k = 0; k < n_guessable; ++k) {
    QACandidate variant = leak_into_question(candidates[k % n_clean]);
    variant.query_id += "_guess" + std::to_string(k);
    candidates.push_back(std::move(variant));
  }

  std::map<std::string, std::set<std::string>> leaks;  // video_id -> event ids
  for (int k = 0; k < n_summary_leak; ++k) {
    const SyntheticVideo& video = videos[static_cast<std::size_t>(k) % videos.size()];
    if (video.events.empty()) throw ConfigError("cannot leak summaries without events");
    const std::size_t e = (static_cast<std::size_t>(k) / videos.size()) % video.events.size();
    leaks[video.video_id].insert(video.events[e].event_id);
  }

  GenDataResult result;
  result.n_videos = videos.size();
  result.n_candidates = candidates.size();
  result.corpus_path = (fs::path(out_dir) / "corpus.json").string();
  result.qa_path = (fs::path(out_dir) / "qa_candidates.jsonl").string();
  result.summaries_path = (fs::path(out_dir) / "summaries.json").string();
  save_corpus(result.corpus_path, videos);
  save_candidates_jsonl(result.qa_path, candidates);
  {
    json j;
    json summaries = json::object();
    for (const SyntheticVideo& video : videos) {
      auto it = leaks.find(video.video_id);
      summaries[video.video_id] =
          build_global_summary(video, it == leaks.end() ? std::set<std::string>{} : it->second);
    }
    j["summaries"] = std::move(summaries);
    std::ofstream out(result.summaries_path, std::ios::binary);
    if (!out) throw IoError("cannot write summaries.json");
    out << j.dump(2) << "\n";
  }
  return result;
}

inline std::map<std::string, std::string> load_summaries(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("bad summaries file: " + std::string(e.what()));
  }
  std::map<std::string, std::string> out;
  for (const auto& [key, value] : j.at("summaries").items())
    out[key] = value.get<std::string>();
  return out;
}

}  // namespace vidrl
