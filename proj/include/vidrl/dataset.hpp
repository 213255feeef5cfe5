#pragma once
// Desk-scale dataset construction: QA candidates derived from evidence
// events, plus the deterministic text contexts (global summary, local
// captions) the filter cascade runs against. Contamination helpers build
// the guessable and summary-leaked candidate classes used to exercise the
// cascade.

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vidrl/qa_filter.hpp"
#include "vidrl/video_env.hpp"

namespace vidrl {

inline std::string finding_key(const std::string& event_id) { return "finding_" + event_id; }

// Question templated on the event's cue tokens; answer and window inherited
// from the event.
inline QACandidate make_candidate(const SyntheticVideo& video, const EvidenceEvent& event) {
  QACandidate cand;
  cand.query_id = video.video_id + "_" + event.event_id;
  cand.source_video = video.video_id;
  cand.answer = event.answer;
  cand.window = event.window;
  std::ostringstream q;
  q << "What does " << finding_key(event.event_id) << " indicate in the segment where";
  int listed = 0;
  for (const std::string& tok : event.evidence_tokens) {
    if (listed == 3) break;
    q << " " << tok;
    ++listed;
  }
  q << " appear?";
  cand.question = q.str();
  return cand;
}

inline std::vector<QACandidate> make_candidates(const SyntheticVideo& video) {
  std::vector<QACandidate> out;
  for (const EvidenceEvent& event : video.events) out.push_back(make_candidate(video, event));
  return out;
}

// Leaks the answer into the question itself: answerable with no context at
// all, the class Filter A is meant to remove.
inline QACandidate leak_into_question(QACandidate cand) {
  const auto keys = text::find_marked_tokens(cand.question, "finding_");
  const std::string key = keys.empty() ? "finding_unknown" : keys.front();
  cand.question += " (note: " + key + ": " + cand.answer + ")";
  return cand;
}

// Coarse overview of the whole video. Carries no per-event answers unless
// asked to leak them, which builds the summary-shortcut class Filter B
// removes.
inline std::string build_global_summary(const SyntheticVideo& video,
                                        const std::set<std::string>& leak_event_ids = {}) {
  std::ostringstream out;
  out << "Recording " << video.video_id << " spans " << video.duration
      << " s sampled at " << video.base_fps << " fps.\n";
  out << "The procedure moves through background phases bg_0 .. bg_4 without "
         "incident.\n";
  for (const EvidenceEvent& event : video.events) {
    if (!leak_event_ids.count(event.event_id)) continue;
    out << finding_key(event.event_id) << ": " << event.answer << "\n";
  }
  return out.str();
}

// Dense captions for one window: every event intersecting it contributes
// its finding line and cue tokens.
inline std::string build_local_captions(const SyntheticVideo& video,
                                        const TimeInterval& window) {
  std::ostringstream out;
  out << "Captions for [" << window.start << ", " << window.end << "] of "
      << video.video_id << ":\n";
  for (const EvidenceEvent& event : video.events) {
    const double inter = std::min(event.window.end, window.end) -
                         std::max(event.window.start, window.start);
    if (inter <= 0.0) continue;
    out << "around " << event.window.start << " s, " << finding_key(event.event_id) << ": "
        << event.answer << " (cues:";
    for (const std::string& tok : event.evidence_tokens) out << " " << tok;
    out << ")\n";
  }
  return out.str();
}

inline FilterContexts make_filter_contexts(const SyntheticVideo& video,
                                           const QACandidate& cand,
                                           const std::set<std::string>& leak_event_ids = {}) {
  return FilterContexts{build_global_summary(video, leak_event_ids),
                        build_local_captions(video, cand.window)};
}

}  // namespace vidrl
