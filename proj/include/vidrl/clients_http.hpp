#pragma once
// JSON-over-HTTP clients for the judge and answerer contracts. The judge
// posts {question, reference, candidate} to /grade and expects {"score": s}
// with s in {1, 0.5, 0}; the answerer posts {question, context_kind,
// context_payload} to /answer and expects {"answer": text}.

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "vidrl/answerer.hpp"
#include "vidrl/errors.hpp"
#include "vidrl/judge.hpp"

namespace vidrl {

inline std::string to_string(ContextView::Kind kind) {
  switch (kind) {
    case ContextView::Kind::empty: return "empty";
    case ContextView::Kind::global_summary: return "global_summary";
    case ContextView::Kind::local_captions: return "local_captions";
    default: return "video_clip";
  }
}

class HttpJudge final : public AnswerJudge {
 public:
  explicit HttpJudge(std::string endpoint, int attempts = 3)
      : endpoint_(std::move(endpoint)), attempts_(attempts) {}

  double grade(const std::string& question, const std::string& reference,
               const std::string& candidate) override {
    json req;
    req["question"] = question;
    req["reference"] = reference;
    req["candidate"] = candidate;
    const std::string body = req.dump();
    std::string last_error = "no attempt made";
    for (int i = 0; i < attempts_; ++i) {
      httplib::Client client(endpoint_);
      client.set_connection_timeout(2, 0);
      client.set_read_timeout(5, 0);
      auto res = client.Post("/grade", body, "application/json");
      if (!res) {
        last_error = "no response from " + endpoint_;
        continue;
      }
      if (res->status != 200) {
        last_error = "status " + std::to_string(res->status);
        continue;
      }
      try {
        const json reply = json::parse(res->body);
        const double score = reply.at("score").get<double>();
        if (score == 1.0 || score == 0.5 || score == 0.0) return score;
        last_error = "score outside {1, 0.5, 0}";
      } catch (const json::exception& e) {
        last_error = std::string("bad reply: ") + e.what();
      }
    }
    throw JudgeUnavailable("judge endpoint failed after " + std::to_string(attempts_) +
                           " attempts: " + last_error);
  }

 private:
  std::string endpoint_;
  int attempts_;
};

class HttpAnswerer final : public AnswererClient {
 public:
  explicit HttpAnswerer(std::string endpoint, int attempts = 2)
      : endpoint_(std::move(endpoint)), attempts_(attempts) {}

  std::string answer(const std::string& question, const ContextView& view) override {
    json req;
    req["question"] = question;
    req["context_kind"] = to_string(view.kind);
    if (view.kind == ContextView::Kind::video_clip) {
      json clip;
      clip["video"] = view.clip_video_id;
      clip["window"] = json::array({view.clip_window.start, view.clip_window.end});
      req["context_payload"] = clip.dump();
    } else {
      req["context_payload"] = view.payload;
    }
    const std::string body = req.dump();
    std::string last_error = "no attempt made";
    for (int i = 0; i < attempts_; ++i) {
      httplib::Client client(endpoint_);
      client.set_connection_timeout(2, 0);
      client.set_read_timeout(5, 0);
      auto res = client.Post("/answer", body, "application/json");
      if (!res) {
        last_error = "no response from " + endpoint_;
        continue;
      }
      if (res->status != 200) {
        last_error = "status " + std::to_string(res->status);
        continue;
      }
      try {
        return json::parse(res->body).at("answer").get<std::string>();
      } catch (const json::exception& e) {
        last_error = std::string("bad reply: ") + e.what();
      }
    }
    throw ClientUnavailable("answerer endpoint failed: " + last_error);
  }

 private:
  std::string endpoint_;
  int attempts_;
};

}  // namespace vidrl
