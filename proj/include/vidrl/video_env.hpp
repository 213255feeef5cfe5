#pragma once
// Synthetic long-video model and the two native tools (crop_video,
// get_frame). Frames are symbolic token sets; every video carries labeled
// evidence events whose tokens appear only inside their supervision window,
// which makes answerability decidable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidrl/errors.hpp"
#include "vidrl/protocol.hpp"
#include "vidrl/rng.hpp"

namespace vidrl {

// Closed time interval in seconds.
struct TimeInterval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool operator==(const TimeInterval&) const = default;
};

struct EvidenceEvent {
  std::string event_id;
  TimeInterval window;
  std::set<std::string> evidence_tokens;  // appear on no frame outside window
  std::string answer;

  bool operator==(const EvidenceEvent&) const = default;
};

struct SyntheticVideo {
  std::string video_id;
  double duration = 0.0;
  double base_fps = 2.0;             // native sampling grid
  std::vector<Frame> frames;         // strictly increasing timestamps
  std::vector<EvidenceEvent> events;

  bool operator==(const SyntheticVideo&) const = default;
};

// Ground-truth supervision: either an interval [g_s, g_e] or a single
// frame time g_f.
struct Supervision {
  enum class Kind { interval, frame };

  Kind kind = Kind::interval;
  TimeInterval window;
  double frame_time = 0.0;

  static Supervision interval(double g_s, double g_e) {
    if (!std::isfinite(g_s) || !std::isfinite(g_e) || g_s > g_e)
      throw DomainError("interval supervision requires finite g_s <= g_e");
    Supervision s;
    s.kind = Kind::interval;
    s.window = {g_s, g_e};
    return s;
  }

  static Supervision frame(double g_f) {
    if (!std::isfinite(g_f)) throw DomainError("frame supervision requires finite g_f");
    Supervision s;
    s.kind = Kind::frame;
    s.frame_time = g_f;
    return s;
  }

  bool operator==(const Supervision&) const = default;
};

// Tool-side densification settings for crop_video.
struct ToolConfig {
  double dense_fps = 1.0;
  int frame_cap = 32;

  void validate() const {
    if (!(dense_fps > 0.0) || !std::isfinite(dense_fps))
      throw ConfigError("dense_fps must be positive");
    if (frame_cap < 1) throw ConfigError("frame_cap must be >= 1");
  }
};

struct GeneratorConfig {
  std::string video_id;
  double duration = 600.0;
  int n_events = 3;
  double distractor_density = 0.1;
  double base_fps = 2.0;
  double event_min_width = 20.0;
  double event_max_width = 40.0;
  int tokens_per_event = 8;

  void validate() const {
    if (!(duration > 0.0) || !std::isfinite(duration))
      throw ConfigError("duration must be positive");
    if (n_events < 0) throw ConfigError("n_events must be >= 0");
    if (!(distractor_density >= 0.0) || !(distractor_density <= 1.0))
      throw ConfigError("distractor_density must lie in [0, 1]");
    if (!(base_fps > 0.0)) throw ConfigError("base_fps must be positive");
    if (!(event_min_width > 0.0) || event_max_width < event_min_width)
      throw ConfigError("event widths require 0 < min <= max");
    if (tokens_per_event < 1) throw ConfigError("tokens_per_event must be >= 1");
  }
};

namespace detail {

inline std::string hex8(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(8, '0');
  for (int i = 7; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

// Index of the native frame nearest to t, ties toward the earlier frame.
inline std::size_t nearest_frame_index(const std::vector<Frame>& frames, double t) {
  auto it = std::lower_bound(frames.begin(), frames.end(), t,
                             [](const Frame& f, double v) { return f.timestamp < v; });
  if (it == frames.begin()) return 0;
  if (it == frames.end()) return frames.size() - 1;
  std::size_t hi = static_cast<std::size_t>(it - frames.begin());
  std::size_t lo = hi - 1;
  double d_lo = t - frames[lo].timestamp;
  double d_hi = frames[hi].timestamp - t;
  return d_lo <= d_hi ? lo : hi;
}

}  // namespace detail

// Deterministic synthetic video. Same (config, seed) gives a byte-identical
// result. Throws ConfigError when n_events non-overlapping windows of the
// minimum width cannot fit inside the duration.
inline SyntheticVideo generate_video(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.n_events > 0 && cfg.event_min_width * cfg.n_events > cfg.duration) {
    std::ostringstream msg;
    msg << "cannot fit " << cfg.n_events << " non-overlapping event windows of width >= "
        << cfg.event_min_width << " into " << cfg.duration << " s";
    throw ConfigError(msg.str());
  }

  std::mt19937_64 rng(derive_seed(seed, 0x76696400ull));
  SyntheticVideo video;
  video.video_id = cfg.video_id.empty() ? ("vid_" + std::to_string(seed)) : cfg.video_id;
  video.duration = cfg.duration;
  video.base_fps = cfg.base_fps;

  // Native grid: k / base_fps for every k with timestamp <= duration.
  const auto n_frames =
      static_cast<std::size_t>(std::floor(cfg.duration * cfg.base_fps + 1e-9)) + 1;
  video.frames.reserve(n_frames);
  for (std::size_t k = 0; k < n_frames; ++k) {
    Frame f;
    f.timestamp = static_cast<double>(k) / cfg.base_fps;
    f.tokens.insert("bg_" + std::to_string(k % 5));
    video.frames.push_back(std::move(f));
  }

  // Event windows: per-event width budget keeps the packing feasible, the
  // remaining slack is split across the gaps.
  if (cfg.n_events > 0) {
    const double budget = cfg.duration / cfg.n_events;
    const double max_w = std::min(cfg.event_max_width, budget);
    std::vector<double> widths(static_cast<std::size_t>(cfg.n_events));
    double total_width = 0.0;
    for (double& w : widths) {
      w = cfg.event_min_width + u01(rng) * (max_w - cfg.event_min_width);
      total_width += w;
    }
    std::vector<double> gap_weights(static_cast<std::size_t>(cfg.n_events) + 1);
    double weight_sum = 0.0;
    for (double& g : gap_weights) {
      g = u01(rng) + 1e-3;
      weight_sum += g;
    }
    const double slack = cfg.duration - total_width;
    double cursor = 0.0;
    for (int e = 0; e < cfg.n_events; ++e) {
      cursor += slack * gap_weights[static_cast<std::size_t>(e)] / weight_sum;
      EvidenceEvent event;
      event.event_id = "e" + std::to_string(e);
      event.window = {cursor, cursor + widths[static_cast<std::size_t>(e)]};
      cursor = event.window.end;

      static const char* kAdjectives[] = {"blue", "red",  "pale",   "dense",
                                          "thin", "wide", "curved", "bright"};
      static const char* kNouns[] = {"dye",   "clamp", "stent", "lesion",
                                     "probe", "graft", "valve", "suture"};
      event.answer = std::string(kAdjectives[uniform_index(rng, 8)]) + " " +
                     kNouns[uniform_index(rng, 8)] + " " + detail::hex8(rng());

      // Spread the cue tokens evenly over the window so partial crops
      // retrieve a proportional share. Each token spans a short run of
      // consecutive native frames; a span survives any resampling at
      // dense_fps >= 1 that covers it.
      const double spacing = event.window.length() / cfg.tokens_per_event;
      const double halfspan = std::min(1.0, spacing / 2.0);
      for (int k = 0; k < cfg.tokens_per_event; ++k) {
        std::string token = "cue_" + event.event_id + "_" + std::to_string(k);
        const double pos = event.window.start + (k + 0.5) * spacing;
        const double span_lo = std::max(pos - halfspan, event.window.start);
        const double span_hi = std::min(pos + halfspan, event.window.end);
        bool placed = false;
        for (Frame& f : video.frames) {
          if (f.timestamp < span_lo) continue;
          if (f.timestamp > span_hi) break;
          f.tokens.insert(token);
          placed = true;
        }
        if (!placed) {
          // grid too sparse for the span: fall back to the nearest frame
          // inside the window
          std::size_t idx = detail::nearest_frame_index(video.frames, pos);
          while (idx > 0 && video.frames[idx].timestamp > event.window.end) --idx;
          while (idx + 1 < video.frames.size() &&
                 video.frames[idx].timestamp < event.window.start)
            ++idx;
          video.frames[idx].tokens.insert(token);
        }
        event.evidence_tokens.insert(std::move(token));
      }
      video.events.push_back(std::move(event));
    }
  }

  // Distractor tokens, sprinkled per density.
  for (Frame& f : video.frames) {
    if (u01(rng) < cfg.distractor_density) f.tokens.insert("dx_" + detail::hex8(rng()));
  }
  return video;
}

inline SyntheticVideo generate_video(std::uint64_t seed, double duration, int n_events,
                                     double distractor_density) {
  GeneratorConfig cfg;
  cfg.duration = duration;
  cfg.n_events = n_events;
  cfg.distractor_density = distractor_density;
  return generate_video(cfg, seed);
}

inline double duration(const SyntheticVideo& v) { return v.duration; }

// Clip-level densified sampling. Returns the native frames nearest the dense
// grid anchored at the clipped window start, up to frame_cap of them.
// Out-of-range windows produce error observations, not exceptions.
inline Observation crop_video(const SyntheticVideo& v, double start, double end,
                              const ToolConfig& tool = {}) {
  tool.validate();
  if (!std::isfinite(start) || !std::isfinite(end) || !(start < end))
    return Observation::make_error("invalid window");
  const double lo = std::max(start, 0.0);
  const double hi = std::min(end, v.duration);
  if (lo > hi) return Observation::make_error("window outside video");
  if (v.frames.empty()) return Observation::make_error("video has no frames");

  std::vector<Frame> picked;
  std::size_t last = v.frames.size();  // sentinel: nothing picked yet
  const double step = 1.0 / tool.dense_fps;
  for (int j = 0; picked.size() < static_cast<std::size_t>(tool.frame_cap); ++j) {
    const double t = lo + j * step;
    if (t > hi + 1e-9) break;
    std::size_t idx = detail::nearest_frame_index(v.frames, t);
    const double ts = v.frames[idx].timestamp;
    if (ts < lo - 1e-9 || ts > hi + 1e-9) continue;
    if (idx == last) continue;
    picked.push_back(v.frames[idx]);
    last = idx;
  }
  if (picked.empty()) return Observation::make_error("no frames in window");
  return Observation::make_frames(std::move(picked));
}

inline Observation crop_video(const SyntheticVideo& v, const TimeInterval& window,
                              const ToolConfig& tool = {}) {
  return crop_video(v, window.start, window.end, tool);
}

// The three native frames nearest to t, sorted by timestamp; ties broken
// toward earlier frames. Out-of-range queries mirror the tool-failure
// behavior the policy has to survive.
inline Observation get_frame(const SyntheticVideo& v, double t) {
  if (!std::isfinite(t) || t < 0.0 || t > v.duration)
    return Observation::make_error("timestamp exceeds video duration");
  if (v.frames.empty()) return Observation::make_error("video has no frames");

  const std::size_t n = v.frames.size();
  std::size_t center = detail::nearest_frame_index(v.frames, t);
  std::size_t lo = center;
  std::size_t hi = center + 1;  // [lo, hi) already picked
  while (hi - lo < 3 && (lo > 0 || hi < n)) {
    const double d_left =
        lo > 0 ? std::abs(t - v.frames[lo - 1].timestamp)
               : std::numeric_limits<double>::infinity();
    const double d_right =
        hi < n ? std::abs(v.frames[hi].timestamp - t)
               : std::numeric_limits<double>::infinity();
    if (d_left <= d_right)
      --lo;
    else
      ++hi;
  }
  std::vector<Frame> picked(v.frames.begin() + static_cast<std::ptrdiff_t>(lo),
                            v.frames.begin() + static_cast<std::ptrdiff_t>(hi));
  return Observation::make_frames(std::move(picked));
}

inline Observation apply_tool(const SyntheticVideo& v, const ToolCall& call,
                              const ToolConfig& tool = {}) {
  if (call.tool_name == ToolName::crop_video)
    return crop_video(v, call.window_start, call.window_end, tool);
  return get_frame(v, call.timestamp);
}

// --- corpus persistence ------------------------------------------------------
// One JSON document: {videos: [{video_id, duration, base_fps, frames, events}]}.

inline json video_to_json(const SyntheticVideo& v) {
  json j;
  j["video_id"] = v.video_id;
  j["duration"] = v.duration;
  j["base_fps"] = v.base_fps;
  json frames = json::array();
  for (const Frame& f : v.frames) {
    json jf;
    jf["timestamp"] = f.timestamp;
    jf["tokens"] = json::array();
    for (const std::string& tok : f.tokens) jf["tokens"].push_back(tok);
    frames.push_back(std::move(jf));
  }
  j["frames"] = std::move(frames);
  json events = json::array();
  for (const EvidenceEvent& e : v.events) {
    json je;
    je["event_id"] = e.event_id;
    je["window"] = json::array({e.window.start, e.window.end});
    je["evidence_tokens"] = json::array();
    for (const std::string& tok : e.evidence_tokens) je["evidence_tokens"].push_back(tok);
    je["answer"] = e.answer;
    events.push_back(std::move(je));
  }
  j["events"] = std::move(events);
  return j;
}

inline SyntheticVideo video_from_json(const json& j) {
  SyntheticVideo v;
  v.video_id = j.at("video_id").get<std::string>();
  v.duration = j.at("duration").get<double>();
  v.base_fps = j.at("base_fps").get<double>();
  for (const json& jf : j.at("frames")) {
    Frame f;
    f.timestamp = jf.at("timestamp").get<double>();
    for (const json& tok : jf.at("tokens")) f.tokens.insert(tok.get<std::string>());
    v.frames.push_back(std::move(f));
  }
  for (const json& je : j.at("events")) {
    EvidenceEvent e;
    e.event_id = je.at("event_id").get<std::string>();
    e.window = {je.at("window").at(0).get<double>(), je.at("window").at(1).get<double>()};
    for (const json& tok : je.at("evidence_tokens"))
      e.evidence_tokens.insert(tok.get<std::string>());
    e.answer = je.at("answer").get<std::string>();
    v.events.push_back(std::move(e));
  }
  return v;
}

inline void save_corpus(const std::string& path, const std::vector<SyntheticVideo>& videos) {
  json j;
  j["videos"] = json::array();
  for (const SyntheticVideo& v : videos) j["videos"].push_back(video_to_json(v));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

inline std::vector<SyntheticVideo> load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("bad corpus file: " + std::string(e.what()));
  }
  std::vector<SyntheticVideo> videos;
  for (const json& jv : j.at("videos")) videos.push_back(video_from_json(jv));
  return videos;
}

inline const SyntheticVideo& find_video(const std::vector<SyntheticVideo>& corpus,
                                        const std::string& video_id) {
  for (const SyntheticVideo& v : corpus)
    if (v.video_id == video_id) return v;
  throw AlignmentError("unknown video id: " + video_id);
}

}  // namespace vidrl
