#pragma once
// Multi-round trajectory model and the <think>/<tool_call>/<tool_response>/
// <answer> transcript grammar: parse, validate, build, persist.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidrl/errors.hpp"

namespace vidrl {

using json = nlohmann::json;

inline constexpr std::size_t kDefaultMaxRounds = 8;

enum class ToolName { crop_video, get_frame };

inline std::string to_string(ToolName t) {
  return t == ToolName::crop_video ? "crop_video" : "get_frame";
}

inline ToolName tool_name_from_string(const std::string& s) {
  if (s == "crop_video") return ToolName::crop_video;
  if (s == "get_frame") return ToolName::get_frame;
  throw ParseError("unknown tool name: " + s);
}

// One timestamped frame: a point on the sampling grid plus the symbolic
// content tokens visible there. Shared between videos and observations.
struct Frame {
  double timestamp = 0.0;
  std::set<std::string> tokens;

  bool operator==(const Frame&) const = default;
};

// A decoded tool invocation. crop_video uses (window_start, window_end);
// get_frame uses timestamp. Factories enforce the call invariants; the
// parser enforces the same when decoding transcripts.
struct ToolCall {
  ToolName tool_name = ToolName::crop_video;
  std::string video_id;
  double window_start = 0.0;
  double window_end = 0.0;
  double timestamp = 0.0;

  static ToolCall crop(std::string video_id, double start, double end) {
    if (!std::isfinite(start) || !std::isfinite(end) || start < 0.0 || end < 0.0)
      throw DomainError("crop_video times must be finite and non-negative");
    if (!(start < end)) throw DomainError("crop_video requires window_start < window_end");
    ToolCall c;
    c.tool_name = ToolName::crop_video;
    c.video_id = std::move(video_id);
    c.window_start = start;
    c.window_end = end;
    return c;
  }

  static ToolCall frame(std::string video_id, double t) {
    if (!std::isfinite(t) || t < 0.0)
      throw DomainError("get_frame timestamp must be finite and non-negative");
    ToolCall c;
    c.tool_name = ToolName::get_frame;
    c.video_id = std::move(video_id);
    c.timestamp = t;
    return c;
  }

  bool operator==(const ToolCall&) const = default;
};

// What the environment returned for one tool call: either a non-empty frame
// list or an error message the policy has to cope with.
struct Observation {
  enum class Kind { frames, error };

  Kind kind = Kind::error;
  std::vector<Frame> frames;
  std::string error_message;

  static Observation make_frames(std::vector<Frame> fs) {
    if (fs.empty()) throw DomainError("frames observation requires at least one frame");
    Observation o;
    o.kind = Kind::frames;
    o.frames = std::move(fs);
    return o;
  }

  static Observation make_error(std::string message) {
    Observation o;
    o.kind = Kind::error;
    o.error_message = std::move(message);
    return o;
  }

  bool operator==(const Observation&) const = default;
};

// One round: the textual rationale plus, when a tool was invoked, the call
// and the environment's response. observation is present iff action is.
struct Turn {
  std::string thought;
  std::optional<ToolCall> action;
  std::optional<Observation> observation;

  bool operator==(const Turn&) const = default;
};

// Ordered multi-round record ending in a terminal answer. The final round
// carries only a thought; the answer follows it.
struct Trajectory {
  std::string query_id;
  std::string video_id;
  std::vector<Turn> turns;
  std::string answer;

  std::size_t round_count() const { return turns.size(); }
  bool answered() const { return !answer.empty(); }

  bool operator==(const Trajectory&) const = default;
};

namespace detail {

inline bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

inline double require_finite_number(const json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(std::string(what) + " must be finite");
  return v;
}

struct TagBlock {
  std::string kind;
  std::string body;
};

// Splits a transcript into tag blocks. Rejects stray text, unknown tags and
// unclosed tags; nesting is not part of the grammar.
inline std::vector<TagBlock> scan_tags(std::string_view text) {
  static const char* kKnown[] = {"think", "tool_call", "tool_response", "answer"};
  std::vector<TagBlock> blocks;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    if (text[i] != '<') throw ParseError("stray text outside tags");
    std::size_t close = text.find('>', i);
    if (close == std::string_view::npos) throw ParseError("malformed tag");
    std::string name(text.substr(i + 1, close - i - 1));
    bool known = std::any_of(std::begin(kKnown), std::end(kKnown),
                             [&](const char* k) { return name == k; });
    if (!known) throw ParseError("unknown tag <" + name + ">");
    std::string closing = "</" + name + ">";
    std::size_t end = text.find(closing, close + 1);
    if (end == std::string_view::npos) throw ParseError("unclosed tag <" + name + ">");
    blocks.push_back({name, std::string(text.substr(close + 1, end - close - 1))});
    i = end + closing.size();
  }
  return blocks;
}

}  // namespace detail

// --- tool call / observation payload codecs -------------------------------

inline json tool_call_to_json(const ToolCall& call) {
  json args;
  args["video"] = call.video_id;
  if (call.tool_name == ToolName::crop_video) {
    args["start_time"] = call.window_start;
    args["end_time"] = call.window_end;
  } else {
    args["timestamp"] = call.timestamp;
  }
  json j;
  j["name"] = to_string(call.tool_name);
  j["arguments"] = std::move(args);
  return j;
}

inline ToolCall tool_call_from_json(const json& j) {
  if (!j.is_object() || j.size() != 2 || !j.contains("name") || !j.contains("arguments"))
    throw ParseError("tool call payload must be an object with exactly {name, arguments}");
  if (!j["name"].is_string()) throw ParseError("tool call name must be a string");
  ToolName name = tool_name_from_string(j["name"].get<std::string>());
  const json& args = j["arguments"];
  if (!args.is_object()) throw ParseError("tool call arguments must be an object");
  if (!args.contains("video") || !args["video"].is_string())
    throw ParseError("tool call arguments require a string video id");
  std::string video = args["video"].get<std::string>();
  if (name == ToolName::crop_video) {
    if (args.size() != 3 || !args.contains("start_time") || !args.contains("end_time"))
      throw ParseError("crop_video arguments must be exactly {video, start_time, end_time}");
    double s = detail::require_finite_number(args["start_time"], "start_time");
    double e = detail::require_finite_number(args["end_time"], "end_time");
    if (s < 0.0 || e < 0.0) throw ParseError("crop_video times must be non-negative");
    if (!(s < e)) throw ParseError("crop_video requires start_time < end_time");
    return ToolCall::crop(std::move(video), s, e);
  }
  if (args.size() != 2 || !args.contains("timestamp"))
    throw ParseError("get_frame arguments must be exactly {video, timestamp}");
  double t = detail::require_finite_number(args["timestamp"], "timestamp");
  if (t < 0.0) throw ParseError("get_frame timestamp must be non-negative");
  return ToolCall::frame(std::move(video), t);
}

inline json observation_to_json(const Observation& obs) {
  json j;
  if (obs.kind == Observation::Kind::frames) {
    j["kind"] = "frames";
    json frames = json::array();
    for (const Frame& f : obs.frames) {
      json jf;
      jf["timestamp"] = f.timestamp;
      jf["tokens"] = json::array();
      for (const std::string& tok : f.tokens) jf["tokens"].push_back(tok);
      frames.push_back(std::move(jf));
    }
    j["frames"] = std::move(frames);
  } else {
    j["kind"] = "error";
    j["error_message"] = obs.error_message;
  }
  return j;
}

inline Observation observation_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ParseError("observation payload requires a string kind");
  std::string kind = j["kind"].get<std::string>();
  if (kind == "error") {
    if (j.size() != 2 || !j.contains("error_message") || !j["error_message"].is_string())
      throw ParseError("error observation must be exactly {kind, error_message}");
    return Observation::make_error(j["error_message"].get<std::string>());
  }
  if (kind != "frames") throw ParseError("observation kind must be frames or error");
  if (j.size() != 2 || !j.contains("frames") || !j["frames"].is_array() || j["frames"].empty())
    throw ParseError("frames observation must carry a non-empty frames array");
  std::vector<Frame> frames;
  for (const json& jf : j["frames"]) {
    if (!jf.is_object() || jf.size() != 2 || !jf.contains("timestamp") || !jf.contains("tokens"))
      throw ParseError("frame must be exactly {timestamp, tokens}");
    Frame f;
    f.timestamp = detail::require_finite_number(jf["timestamp"], "frame timestamp");
    if (!jf["tokens"].is_array()) throw ParseError("frame tokens must be an array");
    for (const json& tok : jf["tokens"]) {
      if (!tok.is_string()) throw ParseError("frame tokens must be strings");
      f.tokens.insert(tok.get<std::string>());
    }
    frames.push_back(std::move(f));
  }
  return Observation::make_frames(std::move(frames));
}

// --- transcript grammar ----------------------------------------------------

// Parses a full model-side transcript. Grammar, one trajectory per text:
//   round  := <think> (<tool_call> <tool_response>)?
//   final  := <think> <answer>
//   text   := round* final
// Exactly one tool call per round; the answer is terminal and unique.
inline Trajectory parse_trajectory(std::string_view text,
                                   std::size_t max_rounds = kDefaultMaxRounds) {
  const auto blocks = detail::scan_tags(text);
  Trajectory traj;
  std::size_t i = 0;
  while (i < blocks.size()) {
    if (blocks[i].kind != "think") {
      if (blocks[i].kind == "tool_response")
        throw ParseError("tool_response without a preceding tool_call");
      throw ParseError("expected <think> to open the round, got <" + blocks[i].kind + ">");
    }
    if (detail::is_blank(blocks[i].body)) throw ParseError("empty <think> block");
    Turn turn;
    turn.thought = blocks[i].body;
    ++i;
    if (i >= blocks.size()) throw ParseError("missing <answer>");
    if (blocks[i].kind == "tool_call") {
      turn.action = tool_call_from_json([&] {
        try {
          return json::parse(blocks[i].body);
        } catch (const json::exception&) {
          throw ParseError("tool_call payload is not valid JSON");
        }
      }());
      ++i;
      if (i >= blocks.size() || blocks[i].kind != "tool_response")
        throw ParseError("tool_call without a following tool_response");
      turn.observation = observation_from_json([&] {
        try {
          return json::parse(blocks[i].body);
        } catch (const json::exception&) {
          throw ParseError("tool_response payload is not valid JSON");
        }
      }());
      ++i;
      traj.turns.push_back(std::move(turn));
    } else if (blocks[i].kind == "answer") {
      if (detail::is_blank(blocks[i].body)) throw ParseError("empty <answer> block");
      traj.answer = blocks[i].body;
      ++i;
      traj.turns.push_back(std::move(turn));
      if (i != blocks.size()) throw ParseError("content after <answer>");
    } else if (blocks[i].kind == "think") {
      throw ParseError("consecutive <think> blocks");
    } else {
      throw ParseError("tool_response without a preceding tool_call");
    }
  }
  if (traj.turns.empty()) throw ParseError("empty transcript");
  if (traj.answer.empty()) throw ParseError("missing <answer>");
  if (traj.turns.size() > max_rounds) throw ParseError("round limit exceeded");
  return traj;
}

inline std::optional<Trajectory> try_parse_trajectory(
    std::string_view text, std::string* error = nullptr,
    std::size_t max_rounds = kDefaultMaxRounds) {
  try {
    return parse_trajectory(text, max_rounds);
  } catch (const ParseError& e) {
    if (error) *error = e.what();
    return std::nullopt;
  }
}

namespace detail {

// Structural validity minus the round cap: used by both the validator and
// the serializer.
inline bool shape_valid(const Trajectory& traj) {
  if (traj.turns.empty() || traj.answer.empty()) return false;
  for (const Turn& turn : traj.turns) {
    if (is_blank(turn.thought)) return false;
    if (turn.action.has_value() != turn.observation.has_value()) return false;
    if (turn.action) {
      const ToolCall& c = *turn.action;
      if (!std::isfinite(c.window_start) || !std::isfinite(c.window_end) ||
          !std::isfinite(c.timestamp))
        return false;
      if (c.tool_name == ToolName::crop_video &&
          (c.window_start < 0.0 || !(c.window_start < c.window_end)))
        return false;
      if (c.tool_name == ToolName::get_frame && c.timestamp < 0.0) return false;
    }
    if (turn.observation) {
      const Observation& o = *turn.observation;
      if ((o.kind == Observation::Kind::frames) != !o.frames.empty()) return false;
    }
  }
  // The answer follows a bare think round; a trailing tool call would put
  // the answer inside a round that already acted.
  return !traj.turns.back().action.has_value();
}

}  // namespace detail

// FormatOK: the deterministic validator behind the format reward. Pure and
// total; never throws.
inline bool validate_format(const Trajectory& traj,
                            std::size_t max_rounds = kDefaultMaxRounds) {
  return detail::shape_valid(traj) && traj.turns.size() <= max_rounds;
}

// Raw-text variant: a transcript that fails the grammar fails FormatOK.
inline bool validate_format(std::string_view transcript,
                            std::size_t max_rounds = kDefaultMaxRounds) {
  try {
    return validate_format(parse_trajectory(transcript, max_rounds), max_rounds);
  } catch (const ParseError&) {
    return false;
  }
}

// Renders the transcript form. Requires a format-valid trajectory (any
// round count); output reparses to a structurally equal trajectory.
inline std::string to_transcript(const Trajectory& traj) {
  if (!detail::shape_valid(traj))
    throw StateError("cannot serialize a trajectory that fails FormatOK");
  std::string out;
  for (const Turn& turn : traj.turns) {
    out += "<think>" + turn.thought + "</think>";
    if (turn.action) {
      out += "<tool_call>" + tool_call_to_json(*turn.action).dump() + "</tool_call>";
      out += "<tool_response>" + observation_to_json(*turn.observation).dump() +
             "</tool_response>";
    }
  }
  out += "<answer>" + traj.answer + "</answer>";
  return out;
}

// Returns a copy of ctx with one more (thought, action, observation) round.
// The input is never mutated.
inline Trajectory append_turn(const Trajectory& ctx, std::string thought,
                              std::optional<ToolCall> action,
                              std::optional<Observation> observation,
                              std::size_t max_rounds = kDefaultMaxRounds) {
  if (ctx.answered()) throw StateError("trajectory already answered");
  if (ctx.turns.size() >= max_rounds) throw CapacityError("round limit reached");
  if (detail::is_blank(thought)) throw DomainError("thought must be non-empty");
  if (action.has_value() != observation.has_value())
    throw DomainError("observation must be present iff action is present");
  Trajectory next = ctx;
  next.turns.push_back(Turn{std::move(thought), std::move(action), std::move(observation)});
  return next;
}

// Appends the terminal think round and sets the answer.
inline Trajectory finalize(const Trajectory& ctx, std::string thought,
                           std::string answer,
                           std::size_t max_rounds = kDefaultMaxRounds) {
  if (ctx.answered()) throw StateError("trajectory already answered");
  if (ctx.turns.size() >= max_rounds) throw CapacityError("round limit reached");
  if (detail::is_blank(thought)) throw DomainError("thought must be non-empty");
  if (answer.empty()) throw DomainError("answer must be non-empty");
  Trajectory next = ctx;
  next.turns.push_back(Turn{std::move(thought), std::nullopt, std::nullopt});
  next.answer = std::move(answer);
  return next;
}

// --- JSONL persistence ------------------------------------------------------
// One JSON object per line: {query_id, video_id, turns, answer}.

inline json trajectory_to_json(const Trajectory& traj) {
  json j;
  j["query_id"] = traj.query_id;
  j["video_id"] = traj.video_id;
  j["answer"] = traj.answer;
  json turns = json::array();
  for (const Turn& turn : traj.turns) {
    json jt;
    jt["thought"] = turn.thought;
    if (turn.action) jt["action"] = tool_call_to_json(*turn.action);
    if (turn.observation) jt["observation"] = observation_to_json(*turn.observation);
    turns.push_back(std::move(jt));
  }
  j["turns"] = std::move(turns);
  return j;
}

inline Trajectory trajectory_from_json(const json& j) {
  if (!j.is_object() || !j.contains("query_id") || !j.contains("video_id") ||
      !j.contains("turns") || !j.contains("answer"))
    throw ParseError("trajectory record requires {query_id, video_id, turns, answer}");
  Trajectory traj;
  traj.query_id = j["query_id"].get<std::string>();
  traj.video_id = j["video_id"].get<std::string>();
  traj.answer = j["answer"].get<std::string>();
  if (!j["turns"].is_array()) throw ParseError("trajectory turns must be an array");
  for (const json& jt : j["turns"]) {
    if (!jt.is_object() || !jt.contains("thought") || !jt["thought"].is_string())
      throw ParseError("turn requires a string thought");
    Turn turn;
    turn.thought = jt["thought"].get<std::string>();
    if (jt.contains("action")) turn.action = tool_call_from_json(jt["action"]);
    if (jt.contains("observation")) turn.observation = observation_from_json(jt["observation"]);
    if (turn.action.has_value() != turn.observation.has_value())
      throw ParseError("turn observation must be present iff action is present");
    traj.turns.push_back(std::move(turn));
  }
  return traj;
}

inline void save_trajectories_jsonl(const std::string& path,
                                    const std::vector<Trajectory>& trajectories) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const Trajectory& traj : trajectories) out << trajectory_to_json(traj).dump() << "\n";
}

inline std::vector<Trajectory> load_trajectories_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::is_blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("bad trajectory line: " + std::string(e.what()));
    }
    out.push_back(trajectory_from_json(j));
  }
  return out;
}

}  // namespace vidrl
