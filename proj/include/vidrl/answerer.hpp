#pragma once
// Answerer clients: the pluggable interface the consensus filter fans out
// to, a deterministic mock pool with controllable disagreement, and the
// scripted clip answerer that resolves questions from retrieved evidence
// tokens.
//
// Text convention the mocks rely on: captions, summaries and leaked hints
// carry "<key>: <value>" lines where the key is the question's finding_*
// marker; questions name their cue_* tokens.

#include <cctype>
#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "vidrl/protocol.hpp"
#include "vidrl/video_env.hpp"

namespace vidrl {

// The information handed to an answerer: nothing, the global summary, the
// local dense captions, or the video clip itself.
struct ContextView {
  enum class Kind { empty, global_summary, local_captions, video_clip };

  Kind kind = Kind::empty;
  std::string payload;         // text views
  std::string clip_video_id;   // video_clip view
  TimeInterval clip_window;    // video_clip view

  static ContextView empty() { return {}; }
  static ContextView summary(std::string text) {
    return {Kind::global_summary, std::move(text), {}, {}};
  }
  static ContextView captions(std::string text) {
    return {Kind::local_captions, std::move(text), {}, {}};
  }
  static ContextView clip(std::string video_id, TimeInterval window) {
    return {Kind::video_clip, {}, std::move(video_id), window};
  }
};

class AnswererClient {
 public:
  virtual ~AnswererClient() = default;
  virtual std::string answer(const std::string& question, const ContextView& view) = 0;
};

namespace text {

// Tokens of the form <prefix><ident> appearing in s, in order of appearance.
inline std::vector<std::string> find_marked_tokens(const std::string& s,
                                                   const std::string& prefix) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  auto is_ident = [](unsigned char c) { return std::isalnum(c) != 0 || c == '_'; };
  while ((pos = s.find(prefix, pos)) != std::string::npos) {
    if (pos > 0 && is_ident(static_cast<unsigned char>(s[pos - 1]))) {
      ++pos;
      continue;
    }
    std::size_t end = pos + prefix.size();
    while (end < s.size() && is_ident(static_cast<unsigned char>(s[end]))) ++end;
    out.push_back(s.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

// Value of the first "<key>: <value>" occurrence, value running to the end
// of the line or the next parenthesis.
inline std::string extract_keyed_value(const std::string& haystack, const std::string& key) {
  const std::string needle = key + ":";
  std::size_t pos = haystack.find(needle);
  if (pos == std::string::npos) return {};
  std::size_t begin = pos + needle.size();
  while (begin < haystack.size() && haystack[begin] == ' ') ++begin;
  std::size_t end = haystack.find_first_of("\n()", begin);
  if (end == std::string::npos) end = haystack.size();
  while (end > begin && haystack[end - 1] == ' ') --end;
  return haystack.substr(begin, end - begin);
}

}  // namespace text

// Substring extractor: pulls "<key>: <value>" out of whatever text it can
// see (question plus context payload). Text-only; cannot see clips.
class ExtractAnswerer final : public AnswererClient {
 public:
  std::string answer(const std::string& question, const ContextView& view) override {
    const auto keys = text::find_marked_tokens(question, "finding_");
    if (keys.empty()) return "unknown";
    const std::string haystack = question + "\n" + view.payload;
    const std::string value = text::extract_keyed_value(haystack, keys.front());
    return value.empty() ? "unknown" : value;
  }
};

// Same extraction, gated on seeing at least two of the question's cue
// tokens in the visible text.
class KeywordGateAnswerer final : public AnswererClient {
 public:
  std::string answer(const std::string& question, const ContextView& view) override {
    const auto keys = text::find_marked_tokens(question, "finding_");
    if (keys.empty()) return "unknown";
    const std::string haystack = question + "\n" + view.payload;
    const auto cues = text::find_marked_tokens(question, "cue_");
    int seen = 0;
    std::set<std::string> distinct(cues.begin(), cues.end());
    for (const std::string& cue : distinct)
      if (haystack.find(cue) != std::string::npos) ++seen;
    if (seen < 2) return "unknown";
    const std::string value = text::extract_keyed_value(haystack, keys.front());
    return value.empty() ? "unknown" : value;
  }
};

class UnknownAnswerer final : public AnswererClient {
 public:
  std::string answer(const std::string&, const ContextView&) override { return "unknown"; }
};

inline std::vector<std::unique_ptr<AnswererClient>> make_mock_pool() {
  std::vector<std::unique_ptr<AnswererClient>> pool;
  pool.push_back(std::make_unique<ExtractAnswerer>());
  pool.push_back(std::make_unique<KeywordGateAnswerer>());
  pool.push_back(std::make_unique<UnknownAnswerer>());
  return pool;
}

// --- scripted clip answerer --------------------------------------------------

inline std::set<std::string> observed_tokens(const Observation& obs) {
  std::set<std::string> out;
  if (obs.kind != Observation::Kind::frames) return out;
  for (const Frame& f : obs.frames) out.insert(f.tokens.begin(), f.tokens.end());
  return out;
}

// The event a question is about, identified by cue-token overlap.
inline const EvidenceEvent* match_event(const SyntheticVideo& video,
                                        const std::string& question) {
  const auto cues = text::find_marked_tokens(question, "cue_");
  const std::set<std::string> asked(cues.begin(), cues.end());
  const EvidenceEvent* best = nullptr;
  std::size_t best_overlap = 0;
  for (const EvidenceEvent& event : video.events) {
    std::size_t overlap = 0;
    for (const std::string& cue : asked)
      if (event.evidence_tokens.count(cue)) ++overlap;
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = &event;
    }
  }
  return best;
}

// Answers from retrieved evidence alone: correct iff at least 80% of the
// matched event's cue tokens were retrieved, hedged iff at least 40%,
// otherwise "unknown". This couples answer accuracy to grounding quality.
inline std::string scripted_clip_answer(const SyntheticVideo& video,
                                        const std::string& question,
                                        const std::set<std::string>& retrieved) {
  const EvidenceEvent* event = match_event(video, question);
  if (!event || event->evidence_tokens.empty()) return "unknown";
  std::size_t hits = 0;
  for (const std::string& tok : event->evidence_tokens)
    if (retrieved.count(tok)) ++hits;
  const double coverage =
      static_cast<double>(hits) / static_cast<double>(event->evidence_tokens.size());
  if (coverage >= 0.8) return event->answer;
  if (coverage >= 0.4) return event->answer + " possibly";
  return "unknown";
}

// Clip-conditioned answerer over the synthetic environment; used by the
// multimodal confirmation stage.
class ScriptedClipAnswerer final : public AnswererClient {
 public:
  ScriptedClipAnswerer(const std::vector<SyntheticVideo>& corpus, ToolConfig tool = {})
      : corpus_(&corpus), tool_(tool) {}

  std::string answer(const std::string& question, const ContextView& view) override {
    if (view.kind != ContextView::Kind::video_clip) return "unknown";
    const SyntheticVideo& video = find_video(*corpus_, view.clip_video_id);
    const Observation obs = crop_video(video, view.clip_window, tool_);
    return scripted_clip_answer(video, question, observed_tokens(obs));
  }

 private:
  const std::vector<SyntheticVideo>* corpus_;
  ToolConfig tool_;
};

}  // namespace vidrl
