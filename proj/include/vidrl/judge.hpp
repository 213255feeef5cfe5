#pragma once
// Answer-grading judge contract: one scalar from {1, 0.5, 0} for fully,
// partially and not consistent. The mock judge is the deterministic
// in-process stand-in used by default; the HTTP client lives in
// clients_http.hpp behind the same interface.

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

namespace vidrl {

class AnswerJudge {
 public:
  virtual ~AnswerJudge() = default;
  // Returns 1, 0.5 or 0.
  virtual double grade(const std::string& question, const std::string& reference,
                       const std::string& candidate) = 0;
};

namespace text {

// Lowercase, punctuation to spaces, collapsed whitespace.
inline std::string normalize(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

inline std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : normalize(s)) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Whitespace token count on the raw string (the answer length cap counts
// what the model emitted, not the normalized form).
inline std::size_t raw_token_count(const std::string& s) {
  std::size_t n = 0;
  bool in_tok = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_tok = false;
    } else if (!in_tok) {
      in_tok = true;
      ++n;
    }
  }
  return n;
}

// Bag-of-tokens F1, as in extractive QA scoring.
inline double token_f1(const std::string& reference, const std::string& candidate) {
  const auto ref = tokens(reference);
  const auto cand = tokens(candidate);
  if (ref.empty() || cand.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const std::string& t : ref) ++counts[t];
  int overlap = 0;
  for (const std::string& t : cand) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(cand.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace text

// Deterministic stand-in with the same {1, 0.5, 0} codomain as the LLM
// judge: exact normalized match scores 1, token F1 >= 0.5 scores 0.5.
class MockJudge final : public AnswerJudge {
 public:
  double grade(const std::string& /*question*/, const std::string& reference,
               const std::string& candidate) override {
    const std::string ref = text::normalize(reference);
    const std::string cand = text::normalize(candidate);
    if (!ref.empty() && ref == cand) return 1.0;
    if (text::token_f1(reference, candidate) >= 0.5) return 0.5;
    return 0.0;
  }
};

}  // namespace vidrl
