#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "vidrl/video_env.hpp"

using namespace vidrl;

TEST_CASE("generation is deterministic for a fixed seed") {
  const SyntheticVideo a = generate_video(7, 600.0, 3, 0.1);
  const SyntheticVideo b = generate_video(7, 600.0, 3, 0.1);
  CHECK(a == b);
  CHECK(duration(a) == duration(b));
  const SyntheticVideo c = generate_video(8, 600.0, 3, 0.1);
  CHECK(a != c);
}

TEST_CASE("zero-event video carries only background and distractor tokens") {
  const SyntheticVideo v = generate_video(7, 10.0, 0, 0.0);
  CHECK(v.events.empty());
  CHECK(duration(v) == 10.0);
  for (const Frame& f : v.frames)
    for (const std::string& tok : f.tokens) CHECK(tok.rfind("bg_", 0) == 0);
}

TEST_CASE("infeasible packing raises ConfigError") {
  // 50 windows of the minimum width cannot fit in 5 s: the packing oracle
  // needs 50 * event_min_width <= duration.
  GeneratorConfig probe;
  CHECK(50.0 * probe.event_min_width > 5.0);
  CHECK_THROWS_AS(generate_video(1, 5.0, 50, 0.0), ConfigError);
  CHECK_THROWS_AS(generate_video(1, -3.0, 0, 0.0), ConfigError);
  CHECK_THROWS_AS(generate_video(1, 10.0, 0, 1.5), ConfigError);
}

TEST_CASE("event windows are sorted, disjoint and inside the video") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 11ull}) {
    const SyntheticVideo v = generate_video(seed, 600.0, 5, 0.2);
    REQUIRE(v.events.size() == 5);
    double prev_end = 0.0;
    for (const EvidenceEvent& e : v.events) {
      CHECK(e.window.start >= prev_end);
      CHECK(e.window.start < e.window.end);
      CHECK(e.window.end <= v.duration);
      prev_end = e.window.end;
    }
  }
}

TEST_CASE("evidence tokens appear on no frame outside their window") {
  // Exhaustive answerability-oracle check on a small video.
  const SyntheticVideo v = generate_video(3, 120.0, 2, 0.3);
  for (const EvidenceEvent& e : v.events) {
    for (const Frame& f : v.frames) {
      const bool inside = f.timestamp >= e.window.start && f.timestamp <= e.window.end;
      if (inside) continue;
      for (const std::string& tok : e.evidence_tokens) CHECK_FALSE(f.tokens.count(tok));
    }
    // and the full-window crop retrieves every token
    const Observation obs = crop_video(v, e.window);
    REQUIRE(obs.kind == Observation::Kind::frames);
    std::set<std::string> seen;
    for (const Frame& f : obs.frames) seen.insert(f.tokens.begin(), f.tokens.end());
    // frame_cap can clip very wide windows; full coverage is guaranteed for
    // windows the 1 fps cap spans entirely
    if (e.window.length() <= 30.0)
      for (const std::string& tok : e.evidence_tokens) CHECK(seen.count(tok));
  }
}

TEST_CASE("crop over a window containing an event returns its tokens") {
  const SyntheticVideo v = generate_video(7, 600.0, 3, 0.1);
  const EvidenceEvent& e = v.events.front();
  ToolConfig wide;
  wide.frame_cap = 256;
  const Observation obs = crop_video(v, e.window.start - 1.0, e.window.end + 1.0, wide);
  REQUIRE(obs.kind == Observation::Kind::frames);
  std::set<std::string> seen;
  for (const Frame& f : obs.frames) seen.insert(f.tokens.begin(), f.tokens.end());
  for (const std::string& tok : e.evidence_tokens) CHECK(seen.count(tok));
}

TEST_CASE("evidence locality: disjoint crops never leak event tokens") {
  const SyntheticVideo v = generate_video(5, 200.0, 2, 0.2);
  ToolConfig tool;
  tool.frame_cap = 512;
  for (const EvidenceEvent& e : v.events) {
    for (double start = 0.0; start + 5.0 <= v.duration; start += 5.0) {
      const TimeInterval window{start, start + 5.0};
      const bool disjoint = window.end < e.window.start || window.start > e.window.end;
      if (!disjoint) continue;
      const Observation obs = crop_video(v, window, tool);
      if (obs.kind != Observation::Kind::frames) continue;
      for (const Frame& f : obs.frames)
        for (const std::string& tok : e.evidence_tokens) CHECK_FALSE(f.tokens.count(tok));
    }
  }
}

TEST_CASE("crop returns error observations for bad windows") {
  const SyntheticVideo v = generate_video(7, 600.0, 0, 0.0);
  const Observation inverted = crop_video(v, 50.0, 40.0);
  REQUIRE(inverted.kind == Observation::Kind::error);
  CHECK(inverted.error_message == "invalid window");
  CHECK(inverted.frames.empty());

  const Observation outside = crop_video(v, 700.0, 800.0);
  REQUIRE(outside.kind == Observation::Kind::error);
  CHECK(outside.error_message == "window outside video");

  // overlapping the end is clipped, not an error
  const Observation clipped = crop_video(v, 590.0, 700.0);
  REQUIRE(clipped.kind == Observation::Kind::frames);
  for (const Frame& f : clipped.frames) CHECK(f.timestamp <= v.duration);
}

TEST_CASE("crop densification: 1 fps over [100, 132] capped at 32 frames") {
  const SyntheticVideo v = generate_video(7, 600.0, 0, 0.0);
  const Observation obs = crop_video(v, 100.0, 132.0);  // dense_fps 1, cap 32
  REQUIRE(obs.kind == Observation::Kind::frames);
  REQUIRE(obs.frames.size() == 32);
  for (std::size_t i = 0; i < obs.frames.size(); ++i)
    CHECK(obs.frames[i].timestamp == 100.0 + static_cast<double>(i));
}

TEST_CASE("crop frame count never exceeds the cap") {
  const SyntheticVideo v = generate_video(9, 300.0, 2, 0.1);
  std::mt19937_64 rng(42);
  for (int i = 0; i < 200; ++i) {
    const double a = uniform(rng, -50.0, 350.0);
    const double b = uniform(rng, -50.0, 350.0);
    ToolConfig tool;
    tool.frame_cap = 1 + static_cast<int>(uniform_index(rng, 64));
    const Observation obs = crop_video(v, a, b, tool);
    if (obs.kind == Observation::Kind::frames)
      CHECK(obs.frames.size() <= static_cast<std::size_t>(tool.frame_cap));
    else
      CHECK(obs.frames.empty());
  }
}

TEST_CASE("get_frame returns the three nearest frames, ties toward earlier") {
  const SyntheticVideo v = generate_video(7, 600.0, 0, 0.0);  // grid at 0.5 s
  SECTION("query on an existing frame returns it plus both neighbors") {
    const Observation obs = get_frame(v, 100.0);
    REQUIRE(obs.kind == Observation::Kind::frames);
    REQUIRE(obs.frames.size() == 3);
    CHECK(obs.frames[0].timestamp == 99.5);
    CHECK(obs.frames[1].timestamp == 100.0);
    CHECK(obs.frames[2].timestamp == 100.5);
  }
  SECTION("out-of-range timestamps produce the documented error") {
    for (double t : {601.0, -1.0}) {
      const Observation obs = get_frame(v, t);
      REQUIRE(obs.kind == Observation::Kind::error);
      CHECK(obs.error_message == "timestamp exceeds video duration");
    }
  }
  SECTION("video edges return three frames from one side") {
    const Observation obs = get_frame(v, 0.0);
    REQUIRE(obs.frames.size() == 3);
    CHECK(obs.frames[0].timestamp == 0.0);
    CHECK(obs.frames[2].timestamp == 1.0);
  }
}

TEST_CASE("get_frame with fewer than three frames returns what exists") {
  SyntheticVideo v;
  v.video_id = "tiny";
  v.duration = 10.0;
  v.base_fps = 0.2;
  v.frames = {Frame{2.0, {"a"}}, Frame{8.0, {"b"}}};
  const Observation obs = get_frame(v, 5.0);
  REQUIRE(obs.kind == Observation::Kind::frames);
  REQUIRE(obs.frames.size() == 2);
  CHECK(obs.frames[0].timestamp == 2.0);
  CHECK(obs.frames[1].timestamp == 8.0);
}

TEST_CASE("get_frame matches a brute-force nearest-neighbor oracle") {
  const SyntheticVideo v = generate_video(13, 60.0, 1, 0.1);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const double t = uniform(rng, 0.0, 60.0);
    const Observation obs = get_frame(v, t);
    REQUIRE(obs.kind == Observation::Kind::frames);
    REQUIRE(obs.frames.size() == 3);
    // sorted by timestamp
    CHECK(std::is_sorted(obs.frames.begin(), obs.frames.end(),
                         [](const Frame& a, const Frame& b) { return a.timestamp < b.timestamp; }));
    // each returned frame is at least as close as every frame not returned
    double worst_returned = 0.0;
    std::set<double> returned;
    for (const Frame& f : obs.frames) {
      worst_returned = std::max(worst_returned, std::abs(f.timestamp - t));
      returned.insert(f.timestamp);
    }
    for (const Frame& f : v.frames) {
      if (returned.count(f.timestamp)) continue;
      CHECK(std::abs(f.timestamp - t) >= worst_returned - 1e-12);
    }
  }
}

TEST_CASE("tools are pure: the video is unchanged and calls repeat identically") {
  const SyntheticVideo v = generate_video(21, 120.0, 1, 0.2);
  const SyntheticVideo copy = v;
  const Observation a = crop_video(v, 10.0, 50.0);
  const Observation b = crop_video(v, 10.0, 50.0);
  const Observation c = get_frame(v, 33.3);
  const Observation d = get_frame(v, 33.3);
  CHECK(a == b);
  CHECK(c == d);
  CHECK(v == copy);
}

TEST_CASE("corpus JSON round-trips") {
  std::vector<SyntheticVideo> corpus = {generate_video(1, 60.0, 1, 0.1),
                                        generate_video(2, 90.0, 2, 0.0)};
  const std::string path = "test_corpus_roundtrip.json";
  save_corpus(path, corpus);
  const auto loaded = load_corpus(path);
  REQUIRE(loaded.size() == corpus.size());
  CHECK(loaded[0] == corpus[0]);
  CHECK(loaded[1] == corpus[1]);
  CHECK(find_video(loaded, corpus[1].video_id) == corpus[1]);
  CHECK_THROWS_AS(find_video(loaded, "nope"), AlignmentError);
  std::remove(path.c_str());
}
