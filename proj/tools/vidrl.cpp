// vidrl command line: synthetic dataset generation, rollouts, reward
// scoring, toy GRPO training, QA filtering, evaluation and report
// rendering. Exit codes: 0 ok, 1 runtime error, 2 config error.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "vidrl/clients_http.hpp"
#include "vidrl/config.hpp"
#include "vidrl/dataset.hpp"
#include "vidrl/experiment.hpp"
#include "vidrl/grpo.hpp"
#include "vidrl/metrics.hpp"
#include "vidrl/qa_filter.hpp"
#include "vidrl/report.hpp"
#include "vidrl/version.hpp"

namespace fs = std::filesystem;
using namespace vidrl;

namespace {

struct ConfigOverrides {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string output_dir;
  int steps = 0;
  int group_size = 0;
  double lr = 0.0;
  int n_videos = 0;
  double duration = 0.0;
  int n_events = -1;
  double density = -1.0;
  std::string judge_backend;
  std::string judge_endpoint;
  bool no_evidence = false;

  CLI::App* attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file (JSON)");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--out,--output-dir", output_dir, "output directory");
    cmd->add_option("--steps", steps, "training steps");
    cmd->add_option("--group-size", group_size, "rollouts per prompt");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--n-videos", n_videos, "videos in the corpus");
    cmd->add_option("--duration", duration, "video duration in seconds");
    cmd->add_option("--n-events", n_events, "evidence events per video");
    cmd->add_option("--density", density, "distractor token density");
    cmd->add_option("--judge", judge_backend, "judge backend: mock | http");
    cmd->add_option("--judge-endpoint", judge_endpoint, "http judge endpoint");
    cmd->add_flag("--no-evidence", no_evidence, "disable the evidence reward");
    return cmd;
  }

  // Flags win over the config file.
  ExperimentConfig resolve(const CLI::App* cmd) const {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (cmd->count("--seed")) cfg.seed = seed;
    if (cmd->count("--out")) cfg.output_dir = output_dir;
    if (cmd->count("--steps")) cfg.train.steps = steps;
    if (cmd->count("--group-size")) cfg.train.group_size = group_size;
    if (cmd->count("--lr")) cfg.train.lr = lr;
    if (cmd->count("--n-videos")) cfg.n_videos = n_videos;
    if (cmd->count("--duration")) cfg.video.duration = duration;
    if (cmd->count("--n-events")) cfg.video.n_events = n_events;
    if (cmd->count("--density")) cfg.video.distractor_density = density;
    if (cmd->count("--judge")) cfg.judge.backend = judge_backend;
    if (cmd->count("--judge-endpoint")) cfg.judge.endpoint = judge_endpoint;
    if (no_evidence) cfg.evidence_enabled = false;
    cfg.validate();
    return cfg;
  }
};

std::map<std::string, QACandidate> candidates_by_id(const std::vector<QACandidate>& cands) {
  std::map<std::string, QACandidate> out;
  for (const QACandidate& cand : cands) out.emplace(cand.query_id, cand);
  return out;
}

int cmd_gen_data(const ConfigOverrides& opts, const CLI::App* cmd, int n_guessable,
                 int n_summary_leak) {
  const ExperimentConfig cfg = opts.resolve(cmd);
  const GenDataResult res = gen_dataset(cfg, cfg.output_dir, n_guessable, n_summary_leak);
  std::cout << "wrote " << res.corpus_path << " (" << res.n_videos << " videos)\n"
            << "wrote " << res.qa_path << " (" << res.n_candidates << " candidates)\n"
            << "wrote " << res.summaries_path << "\n";
  return 0;
}

int cmd_rollout(const ConfigOverrides& opts, const CLI::App* cmd, const std::string& corpus_path,
                const std::string& qa_path, const std::string& policy_path,
                const std::string& out_path, bool greedy) {
  const ExperimentConfig cfg = opts.resolve(cmd);
  const auto corpus = load_corpus(corpus_path);
  const auto candidates = load_candidates_jsonl(qa_path);
  const auto judge = make_judge(cfg.judge);
  const RolloutConfig rcfg = rollout_config(cfg);

  std::map<std::string, WindowPolicy> policies;
  if (!policy_path.empty()) {
    std::ifstream in(policy_path, std::ios::binary);
    if (!in) throw IoError("cannot open policy file: " + policy_path);
    json j;
    in >> j;
    for (const json& jp : j.at("policies"))
      policies.emplace(jp.at("query_id").get<std::string>(), policy_from_json(jp));
  }

  std::vector<Trajectory> trajectories;
  for (const QACandidate& cand : candidates) {
    const SyntheticVideo& video = find_video(corpus, cand.source_video);
    WindowPolicy policy;
    if (auto it = policies.find(cand.query_id); it != policies.end())
      policy = it->second;
    else
      policy = make_policy(cfg.policy, video.duration);
    if (greedy) {
      trajectories.push_back(scripted_rollout(policy, policy.argmax(), video, cand, rcfg));
    } else {
      GroupBatch batch =
          rollout_group(policy, video, cand, cfg.train.group_size,
                        derive_seed(cfg.seed, fnv1a64(cand.query_id)), rcfg, *judge);
      for (Trajectory& traj : batch.trajectories) trajectories.push_back(std::move(traj));
    }
  }
  save_trajectories_jsonl(out_path, trajectories);
  std::cout << "wrote " << out_path << " (" << trajectories.size() << " trajectories)\n";
  return 0;
}

int cmd_score(const ConfigOverrides& opts, const CLI::App* cmd,
              const std::string& trajectories_path, const std::string& qa_path,
              const std::string& out_path) {
  const ExperimentConfig cfg = opts.resolve(cmd);
  const auto trajectories = load_trajectories_jsonl(trajectories_path);
  const auto by_id = candidates_by_id(load_candidates_jsonl(qa_path));
  const auto judge = make_judge(cfg.judge);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + out_path);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& traj = trajectories[i];
    auto it = by_id.find(traj.query_id);
    if (it == by_id.end())
      throw AlignmentError("trajectory query without QA candidate: " + traj.query_id);
    const QACandidate& cand = it->second;
    const Supervision sup = Supervision::interval(cand.window.start, cand.window.end);
    RewardBreakdown r =
        composite_reward(traj, cand.question, cand.answer, sup, cfg.reward, cfg.frame_reward,
                         *judge, cfg.answer_length_cap, cfg.max_rounds);
    if (!cfg.evidence_enabled) {
      r.r_evidence = 0.0;
      r.total = r.r_acc + r.r_format;
    }
    json j;
    j["index"] = i;
    j["query_id"] = traj.query_id;
    j["r_acc"] = r.r_acc;
    j["r_format"] = r.r_format;
    j["r_evidence"] = r.r_evidence;
    j["total"] = r.total;
    out << j.dump() << "\n";
  }
  std::cout << "wrote " << out_path << " (" << trajectories.size() << " rewards)\n";
  return 0;
}

int cmd_train_toy(const ConfigOverrides& opts, const CLI::App* cmd,
                  const std::string& corpus_path, const std::string& qa_path) {
  const ExperimentConfig cfg = opts.resolve(cmd);
  const RunManifest manifest = run_experiment(cfg, corpus_path, qa_path);
  std::cout << "run complete, config hash " << manifest.config_hash << "\n";
  for (const auto& [name, path] : manifest.artifacts)
    std::cout << "  " << name << ": " << path << "\n";
  return 0;
}

int cmd_filter(const ConfigOverrides& opts, const CLI::App* cmd, const std::string& corpus_path,
               const std::string& qa_path, const std::string& summaries_path,
               const std::string& out_path) {
  const ExperimentConfig cfg = opts.resolve(cmd);
  const auto corpus = load_corpus(corpus_path);
  auto candidates = load_candidates_jsonl(qa_path);
  const auto summaries = load_summaries(summaries_path);
  const auto judge = make_judge(cfg.judge);
  const auto pool = make_mock_pool();
  ScriptedClipAnswerer clip_answerer(corpus, cfg.tool);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + out_path);
  std::map<std::string, int> tally;
  for (QACandidate& cand : candidates) {
    const SyntheticVideo& video = find_video(corpus, cand.source_video);
    auto sit = summaries.find(cand.source_video);
    FilterContexts contexts{sit == summaries.end() ? "" : sit->second,
                            build_local_captions(video, cand.window)};
    const Verdict verdict = filter_cascade(cand, contexts, pool, *judge, cfg.filter);
    std::string label;
    if (!verdict.kept) {
      label = "rejected/" + to_string(*verdict.rejected_at);
    } else if (!multimodal_confirm(cand, video, clip_answerer, *judge)) {
      label = "rejected/multimodal";
    } else {
      label = "kept";
    }
    ++tally[label];
    json j = candidate_to_json(cand);
    j["verdict"] = label;
    out << j.dump() << "\n";
  }
  std::cout << "wrote " << out_path << "\n";
  for (const auto& [label, count] : tally) std::cout << "  " << label << ": " << count << "\n";
  return 0;
}

int cmd_eval(const ConfigOverrides& opts, const CLI::App* cmd,
             const std::string& trajectories_path, const std::string& qa_path,
             const std::string& out_dir) {
  const ExperimentConfig cfg = opts.resolve(cmd);
  const auto trajectories = load_trajectories_jsonl(trajectories_path);
  const auto candidates = load_candidates_jsonl(qa_path);
  const auto judge = make_judge(cfg.judge);

  std::vector<GroundingPrediction> preds;
  for (const Trajectory& traj : trajectories) preds.push_back(extract_prediction(traj));
  std::vector<GroundTruthItem> gts;
  for (const QACandidate& cand : candidates)
    gts.push_back({cand.query_id, cand.question, cand.answer, cand.window});

  const EvalReport report = evaluate(preds, gts, *judge);
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "eval_report.json", std::ios::binary);
    if (!out) throw IoError("cannot write eval_report.json");
    out << report_to_json(report).dump(2) << "\n";
  }
  {
    std::ofstream out(fs::path(out_dir) / "eval_report.txt", std::ios::binary);
    if (!out) throw IoError("cannot write eval_report.txt");
    out << render_report_table(report);
  }
  std::cout << render_report_table(report);
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& compare_dir,
               const std::string& out_dir) {
  render_run_report(run_dir, out_dir, compare_dir);
  std::cout << "wrote " << (fs::path(out_dir) / "curves.svg").string() << "\n"
            << "wrote " << (fs::path(out_dir) / "metrics.txt").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale lab for grounded video tool-use RL"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  ConfigOverrides gen_opts, rollout_opts, score_opts, train_opts, filter_opts, eval_opts;

  auto* gen = gen_opts.attach(app.add_subcommand(
      "gen-data", "generate the synthetic video corpus and QA candidates"));
  int n_guessable = 0, n_summary_leak = 0;
  gen->add_option("--n-guessable", n_guessable, "append question-leaked candidates");
  gen->add_option("--n-summary-leak", n_summary_leak, "leak event answers into summaries");

  auto* rollout = rollout_opts.attach(
      app.add_subcommand("rollout", "sample trajectory groups from a window policy"));
  std::string ro_corpus, ro_qa, ro_policy, ro_out = "trajectories.jsonl";
  bool ro_greedy = false;
  rollout->add_option("--corpus", ro_corpus, "corpus.json")->required();
  rollout->add_option("--qa", ro_qa, "qa_candidates.jsonl")->required();
  rollout->add_option("--policy", ro_policy, "final_policy.json from a run");
  rollout->add_option("--trajectories-out", ro_out, "output trajectories JSONL");
  rollout->add_flag("--greedy", ro_greedy, "one argmax rollout per query");

  auto* score = score_opts.attach(
      app.add_subcommand("score", "compute composite rewards for stored trajectories"));
  std::string sc_traj, sc_qa, sc_out = "rewards.jsonl";
  score->add_option("--trajectories", sc_traj, "trajectories JSONL")->required();
  score->add_option("--qa", sc_qa, "qa_candidates.jsonl")->required();
  score->add_option("--rewards-out", sc_out, "output rewards JSONL");

  auto* train = train_opts.attach(
      app.add_subcommand("train-toy", "run the toy grounding-aware GRPO experiment"));
  std::string tr_corpus, tr_qa;
  train->add_option("--corpus", tr_corpus, "corpus.json")->required();
  train->add_option("--qa", tr_qa, "qa_candidates.jsonl")->required();

  auto* filter = filter_opts.attach(
      app.add_subcommand("filter", "run the consensus filter cascade over QA candidates"));
  std::string fi_corpus, fi_qa, fi_summaries, fi_out = "filtered.jsonl";
  filter->add_option("--corpus", fi_corpus, "corpus.json")->required();
  filter->add_option("--qa", fi_qa, "qa_candidates.jsonl")->required();
  filter->add_option("--summaries", fi_summaries, "summaries.json")->required();
  filter->add_option("--filtered-out", fi_out, "output candidates with verdicts");

  auto* eval = eval_opts.attach(
      app.add_subcommand("eval", "grounding and grounded-VQA metrics for trajectories"));
  std::string ev_traj, ev_qa, ev_out = "eval";
  eval->add_option("--trajectories", ev_traj, "trajectories JSONL (one per query)")->required();
  eval->add_option("--qa", ev_qa, "qa_candidates.jsonl")->required();
  eval->add_option("--report-out", ev_out, "output directory");

  auto* report = app.add_subcommand("report", "render curves and metric tables for a run");
  std::string rp_run, rp_compare, rp_out = "report";
  report->add_option("--run", rp_run, "run directory (training_log.jsonl inside)")->required();
  report->add_option("--compare", rp_compare, "second run directory to overlay");
  report->add_option("--report-out", rp_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are config errors
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_opts, gen, n_guessable, n_summary_leak);
    if (rollout->parsed())
      return cmd_rollout(rollout_opts, rollout, ro_corpus, ro_qa, ro_policy, ro_out, ro_greedy);
    if (score->parsed()) return cmd_score(score_opts, score, sc_traj, sc_qa, sc_out);
    if (train->parsed()) return cmd_train_toy(train_opts, train, tr_corpus, tr_qa);
    if (filter->parsed())
      return cmd_filter(filter_opts, filter, fi_corpus, fi_qa, fi_summaries, fi_out);
    if (eval->parsed()) return cmd_eval(eval_opts, eval, ev_traj, ev_qa, ev_out);
    if (report->parsed()) return cmd_report(rp_run, rp_compare, rp_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
