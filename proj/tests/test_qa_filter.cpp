#include <catch2/catch_amalgamated.hpp>

#include <memory>

#include "vidrl/dataset.hpp"
#include "vidrl/judge.hpp"
#include "vidrl/qa_filter.hpp"

using namespace vidrl;

namespace {

class EchoAnswerer final : public AnswererClient {
 public:
  explicit EchoAnswerer(std::string reply) : reply_(std::move(reply)) {}
  std::string answer(const std::string&, const ContextView&) override { return reply_; }

 private:
  std::string reply_;
};

class FailingAnswerer final : public AnswererClient {
 public:
  std::string answer(const std::string&, const ContextView&) override {
    throw ClientUnavailable("offline");
  }
};

struct FilterFixture {
  SyntheticVideo video;
  MockJudge judge;
  FilterThresholds th;  // defaults: theta_text 1, theta_sum 1, theta_loc 2, pool 3
  std::vector<std::unique_ptr<AnswererClient>> pool = make_mock_pool();

  FilterFixture() { video = generate_video(31, 300.0, 3, 0.1); }

  QACandidate local_only(std::size_t i = 0) {
    return make_candidate(video, video.events.at(i));
  }
};

}  // namespace

TEST_CASE("consensus votes count full judge matches") {
  MockJudge judge;
  SECTION("pool that echoes the reference votes unanimously") {
    std::vector<std::unique_ptr<AnswererClient>> echo_pool;
    for (int i = 0; i < 3; ++i) echo_pool.push_back(std::make_unique<EchoAnswerer>("blue dye"));
    CHECK(consensus_votes("q", "blue dye", ContextView::empty(), echo_pool, judge) == 3);
  }
  SECTION("blind answerers cannot vote under an empty view") {
    const auto pool = make_mock_pool();
    const SyntheticVideo video = generate_video(31, 300.0, 1, 0.0);
    const QACandidate cand = make_candidate(video, video.events.front());
    CHECK(consensus_votes(cand.question, cand.answer, ContextView::empty(), pool, judge) == 0);
  }
  SECTION("mixed pool: two of three match") {
    const auto pool = make_mock_pool();  // extractor, keyword gate, always-unknown
    const SyntheticVideo video = generate_video(31, 300.0, 1, 0.0);
    const QACandidate cand = make_candidate(video, video.events.front());
    const std::string captions = build_local_captions(video, cand.window);
    CHECK(consensus_votes(cand.question, cand.answer, ContextView::captions(captions), pool,
                          judge) == 2);
  }
  SECTION("failed clients count as non-matching votes") {
    std::vector<std::unique_ptr<AnswererClient>> pool;
    pool.push_back(std::make_unique<EchoAnswerer>("blue dye"));
    pool.push_back(std::make_unique<FailingAnswerer>());
    CHECK(consensus_votes("q", "blue dye", ContextView::empty(), pool, judge) == 1);
  }
  SECTION("a fully failed pool propagates ClientUnavailable") {
    std::vector<std::unique_ptr<AnswererClient>> pool;
    pool.push_back(std::make_unique<FailingAnswerer>());
    pool.push_back(std::make_unique<FailingAnswerer>());
    CHECK_THROWS_AS(consensus_votes("q", "a", ContextView::empty(), pool, judge),
                    ClientUnavailable);
  }
}

TEST_CASE_METHOD(FilterFixture, "local-only candidates pass the whole cascade") {
  QACandidate cand = local_only();
  const FilterContexts contexts = make_filter_contexts(video, cand);
  const Verdict verdict = filter_cascade(cand, contexts, pool, judge, th);
  CHECK(verdict.kept);
  CHECK_FALSE(verdict.rejected_at.has_value());
  CHECK(cand.votes.text_only == 0);
  CHECK(cand.votes.summary_only == 0);
  CHECK(cand.votes.local_caption == 2);
}

TEST_CASE_METHOD(FilterFixture, "guessable candidates are rejected at the text stage") {
  QACandidate cand = leak_into_question(local_only());
  const FilterContexts contexts = make_filter_contexts(video, cand);
  const Verdict verdict = filter_cascade(cand, contexts, pool, judge, th);
  CHECK_FALSE(verdict.kept);
  REQUIRE(verdict.rejected_at.has_value());
  CHECK(*verdict.rejected_at == FilterStage::text_only);
  // short-circuit: later stages never ran
  CHECK_FALSE(cand.votes.summary_only.has_value());
  CHECK_FALSE(cand.votes.local_caption.has_value());
}

TEST_CASE_METHOD(FilterFixture, "summary-leaked candidates are rejected at the summary stage") {
  QACandidate cand = local_only(1);
  const FilterContexts contexts =
      make_filter_contexts(video, cand, {video.events.at(1).event_id});
  const Verdict verdict = filter_cascade(cand, contexts, pool, judge, th);
  CHECK_FALSE(verdict.kept);
  REQUIRE(verdict.rejected_at.has_value());
  CHECK(*verdict.rejected_at == FilterStage::summary);
  CHECK(cand.votes.text_only == 0);
  CHECK(*cand.votes.summary_only >= th.theta_sum);
}

TEST_CASE_METHOD(FilterFixture,
                 "an answer appearing verbatim in the summary always rejects at B") {
  for (std::size_t i = 0; i < video.events.size(); ++i) {
    QACandidate cand = local_only(i);
    FilterContexts contexts = make_filter_contexts(video, cand);
    contexts.global_summary +=
        finding_key(video.events[i].event_id) + ": " + cand.answer + "\n";
    const Verdict verdict = filter_cascade(cand, contexts, pool, judge, th);
    REQUIRE(verdict.rejected_at.has_value());
    CHECK(*verdict.rejected_at == FilterStage::summary);
  }
}

TEST_CASE_METHOD(FilterFixture, "candidates failing local consensus are rejected at C") {
  QACandidate cand = local_only();
  FilterContexts contexts = make_filter_contexts(video, cand);
  contexts.local_captions = "nothing of note";
  const Verdict verdict = filter_cascade(cand, contexts, pool, judge, th);
  REQUIRE(verdict.rejected_at.has_value());
  CHECK(*verdict.rejected_at == FilterStage::local_caption);
  CHECK(cand.votes.local_caption == 0);
}

TEST_CASE_METHOD(FilterFixture, "cascade is deterministic and idempotent") {
  for (int rep = 0; rep < 3; ++rep) {
    QACandidate cand = local_only();
    const FilterContexts contexts = make_filter_contexts(video, cand);
    const Verdict a = filter_cascade(cand, contexts, pool, judge, th);
    QACandidate cand2 = local_only();
    const Verdict b = filter_cascade(cand2, contexts, pool, judge, th);
    CHECK(a == b);
    CHECK(cand.votes == cand2.votes);
  }
}

TEST_CASE_METHOD(FilterFixture, "threshold monotonicity") {
  // evaluate cascade outcomes for every candidate under two threshold sets
  auto run = [&](const FilterThresholds& t, QACandidate cand) {
    const FilterContexts contexts = make_filter_contexts(video, cand);
    return filter_cascade(cand, contexts, pool, judge, t);
  };
  for (std::size_t i = 0; i < video.events.size(); ++i) {
    SECTION("lowering theta_loc never rejects a kept candidate, index " + std::to_string(i)) {
      FilterThresholds lower = th;
      lower.theta_loc = 1;
      const Verdict base = run(th, local_only(i));
      const Verdict relaxed = run(lower, local_only(i));
      if (base.kept) CHECK(relaxed.kept);
    }
    SECTION("raising theta_text/theta_sum never keeps an A/B reject, index " +
            std::to_string(i)) {
      const Verdict base = run(th, leak_into_question(local_only(i)));
      FilterThresholds raised = th;
      raised.theta_text = 3;
      raised.theta_sum = 3;
      const Verdict strict = run(raised, leak_into_question(local_only(i)));
      if (base.rejected_at == FilterStage::text_only && !strict.kept)
        CHECK(strict.rejected_at.has_value());
      // with theta_text raised above the vote count, the reject moves to a
      // later stage or the candidate is kept, never back to A with fewer votes
      if (strict.rejected_at == FilterStage::text_only)
        CHECK(*strict.votes.text_only >= raised.theta_text);
    }
  }
}

TEST_CASE_METHOD(FilterFixture, "threshold validation") {
  FilterThresholds bad = th;
  bad.theta_loc = 5;  // above pool_size
  QACandidate cand = local_only();
  const FilterContexts contexts = make_filter_contexts(video, cand);
  CHECK_THROWS_AS(filter_cascade(cand, contexts, pool, judge, bad), ConfigError);
}

TEST_CASE_METHOD(FilterFixture, "multimodal confirmation answers from the clip") {
  std::vector<SyntheticVideo> corpus{video};
  ScriptedClipAnswerer clip_answerer(corpus, ToolConfig{1.0, 64});

  SECTION("window equal to the event window confirms") {
    QACandidate cand = local_only();
    CHECK(multimodal_confirm(cand, video, clip_answerer, judge));
    CHECK(cand.votes.multimodal == 1);
  }
  SECTION("window shifted fully off the event fails") {
    QACandidate cand = local_only();
    const double w = cand.window.length();
    const double shift = cand.window.end + 5.0;
    cand.window = {shift, std::min(shift + w, video.duration)};
    if (cand.window.length() > 1.0) {
      CHECK_FALSE(multimodal_confirm(cand, video, clip_answerer, judge));
      CHECK(cand.votes.multimodal == 0);
    }
  }
  SECTION("half-overlapping window misses the 80% token rule") {
    QACandidate cand = local_only();
    const double mid = 0.5 * (cand.window.start + cand.window.end);
    cand.window = {mid, cand.window.end};  // second half only
    CHECK_FALSE(multimodal_confirm(cand, video, clip_answerer, judge));
  }
  SECTION("window outside the video is a domain error") {
    QACandidate cand = local_only();
    cand.window.end = video.duration + 10.0;
    CHECK_THROWS_AS(multimodal_confirm(cand, video, clip_answerer, judge), DomainError);
  }
  SECTION("a failing clip answerer logs and returns false") {
    FailingAnswerer failing;
    QACandidate cand = local_only();
    CHECK_FALSE(multimodal_confirm(cand, video, failing, judge));
  }
}

TEST_CASE("candidate JSONL round-trips with votes") {
  const SyntheticVideo video = generate_video(5, 120.0, 1, 0.0);
  QACandidate cand = make_candidate(video, video.events.front());
  cand.votes.text_only = 0;
  cand.votes.local_caption = 2;
  const std::string path = "test_candidates_roundtrip.jsonl";
  save_candidates_jsonl(path, {cand});
  const auto loaded = load_candidates_jsonl(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0] == cand);
  std::remove(path.c_str());
}
