#pragma once
// Consensus filter cascade over QA candidates. Filter A rejects items a
// pool of answerers can solve with no context (knowledge or guessable);
// Filter B rejects items solvable from the global summary alone; Filter C
// keeps only items the pool solves from local dense captions. Stages run
// A -> B -> C with short-circuit, then multimodal confirmation answers from
// the video clip itself.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidrl/answerer.hpp"
#include "vidrl/errors.hpp"
#include "vidrl/judge.hpp"
#include "vidrl/video_env.hpp"

namespace vidrl {

// Per-filter consensus tallies; unset until the stage ran.
struct VoteTally {
  std::optional<int> text_only;
  std::optional<int> summary_only;
  std::optional<int> local_caption;
  std::optional<int> multimodal;

  bool operator==(const VoteTally&) const = default;
};

struct QACandidate {
  std::string query_id;
  std::string question;
  std::string answer;
  TimeInterval window;
  std::string source_video;
  VoteTally votes;

  bool operator==(const QACandidate&) const = default;
};

// Raw vote counts, not fractions: the reference configuration retains
// candidates with majority agreement (2 of a 3-model pool) under the local
// caption view. The fraction is recoverable from pool_size.
struct FilterThresholds {
  int theta_text = 1;
  int theta_sum = 1;
  int theta_loc = 2;
  int pool_size = 3;

  void validate() const {
    if (pool_size < 1) throw ConfigError("pool_size must be >= 1");
    for (int theta : {theta_text, theta_sum, theta_loc})
      if (theta < 0 || theta > pool_size)
        throw ConfigError("thresholds must lie in [0, pool_size]");
  }
};

enum class FilterStage { text_only, summary, local_caption };

inline std::string to_string(FilterStage s) {
  switch (s) {
    case FilterStage::text_only: return "text_only";
    case FilterStage::summary: return "summary";
    default: return "local_caption";
  }
}

struct Verdict {
  bool kept = false;
  std::optional<FilterStage> rejected_at;
  VoteTally votes;

  bool operator==(const Verdict&) const = default;
};

// Number of pool answerers whose response the judge scores fully consistent
// with the reference under the given view. A failed client counts as a
// non-matching vote; only a whole-pool failure propagates.
inline int consensus_votes(const std::string& question, const std::string& reference,
                           const ContextView& view,
                           const std::vector<std::unique_ptr<AnswererClient>>& pool,
                           AnswerJudge& judge) {
  if (pool.empty()) throw ConfigError("consensus_votes requires a non-empty pool");
  int votes = 0;
  std::size_t failures = 0;
  for (const auto& client : pool) {
    std::string response;
    try {
      response = client->answer(question, view);
    } catch (const ClientUnavailable& e) {
      ++failures;
      std::cerr << "answerer unavailable, counting as non-match: " << e.what() << "\n";
      continue;
    }
    if (judge.grade(question, reference, response) == 1.0) ++votes;
  }
  if (failures == pool.size()) throw ClientUnavailable("every answerer in the pool failed");
  return votes;
}

// The two text contexts a candidate is filtered against.
struct FilterContexts {
  std::string global_summary;
  std::string local_captions;
};

inline Verdict filter_cascade(QACandidate& cand, const FilterContexts& contexts,
                              const std::vector<std::unique_ptr<AnswererClient>>& pool,
                              AnswerJudge& judge, const FilterThresholds& th) {
  th.validate();
  Verdict verdict;

  const int v_text =
      consensus_votes(cand.question, cand.answer, ContextView::empty(), pool, judge);
  cand.votes.text_only = v_text;
  verdict.votes.text_only = v_text;
  if (v_text >= th.theta_text) {
    verdict.rejected_at = FilterStage::text_only;
    return verdict;
  }

  const int v_sum = consensus_votes(cand.question, cand.answer,
                                    ContextView::summary(contexts.global_summary), pool, judge);
  cand.votes.summary_only = v_sum;
  verdict.votes.summary_only = v_sum;
  if (v_sum >= th.theta_sum) {
    verdict.rejected_at = FilterStage::summary;
    return verdict;
  }

  const int v_loc = consensus_votes(cand.question, cand.answer,
                                    ContextView::captions(contexts.local_captions), pool, judge);
  cand.votes.local_caption = v_loc;
  verdict.votes.local_caption = v_loc;
  if (v_loc < th.theta_loc) {
    verdict.rejected_at = FilterStage::local_caption;
    return verdict;
  }

  verdict.kept = true;
  return verdict;
}

// True iff the clip-conditioned answer fully matches the candidate answer.
// A failing clip answerer logs and returns false rather than aborting.
inline bool multimodal_confirm(QACandidate& cand, const SyntheticVideo& video,
                               AnswererClient& clip_answerer, AnswerJudge& judge) {
  if (cand.window.start < 0.0 || cand.window.end > video.duration)
    throw DomainError("candidate window must lie within the video duration");
  std::string response;
  try {
    response = clip_answerer.answer(cand.question,
                                    ContextView::clip(video.video_id, cand.window));
  } catch (const ClientUnavailable& e) {
    std::cerr << "clip answerer unavailable, confirmation fails: " << e.what() << "\n";
    cand.votes.multimodal = 0;
    return false;
  }
  const bool ok = judge.grade(cand.question, cand.answer, response) == 1.0;
  cand.votes.multimodal = ok ? 1 : 0;
  return ok;
}

// --- candidate store (JSONL in/out) -----------------------------------------

inline json candidate_to_json(const QACandidate& cand,
                              const std::optional<Verdict>& verdict = std::nullopt) {
  json j;
  j["query_id"] = cand.query_id;
  j["question"] = cand.question;
  j["answer"] = cand.answer;
  j["window"] = json::array({cand.window.start, cand.window.end});
  j["source_video"] = cand.source_video;
  json votes = json::object();
  if (cand.votes.text_only) votes["text_only"] = *cand.votes.text_only;
  if (cand.votes.summary_only) votes["summary_only"] = *cand.votes.summary_only;
  if (cand.votes.local_caption) votes["local_caption"] = *cand.votes.local_caption;
  if (cand.votes.multimodal) votes["multimodal"] = *cand.votes.multimodal;
  if (!votes.empty()) j["votes"] = std::move(votes);
  if (verdict) {
    j["verdict"] = verdict->kept
                       ? std::string("kept")
                       : "rejected/" + to_string(*verdict->rejected_at);
  }
  return j;
}

inline QACandidate candidate_from_json(const json& j) {
  QACandidate cand;
  cand.query_id = j.at("query_id").get<std::string>();
  cand.question = j.at("question").get<std::string>();
  cand.answer = j.at("answer").get<std::string>();
  cand.window = {j.at("window").at(0).get<double>(), j.at("window").at(1).get<double>()};
  cand.source_video = j.at("source_video").get<std::string>();
  if (j.contains("votes")) {
    const json& votes = j["votes"];
    if (votes.contains("text_only")) cand.votes.text_only = votes["text_only"].get<int>();
    if (votes.contains("summary_only"))
      cand.votes.summary_only = votes["summary_only"].get<int>();
    if (votes.contains("local_caption"))
      cand.votes.local_caption = votes["local_caption"].get<int>();
    if (votes.contains("multimodal")) cand.votes.multimodal = votes["multimodal"].get<int>();
  }
  return cand;
}

inline void save_candidates_jsonl(const std::string& path,
                                  const std::vector<QACandidate>& candidates) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const QACandidate& cand : candidates) out << candidate_to_json(cand).dump() << "\n";
}

inline std::vector<QACandidate> load_candidates_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<QACandidate> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("bad candidate line: " + std::string(e.what()));
    }
    out.push_back(candidate_from_json(j));
  }
  return out;
}

}  // namespace vidrl
