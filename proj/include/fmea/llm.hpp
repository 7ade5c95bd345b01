#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace fmea {

// Chat-completion contract the extraction pipeline depends on. Backends:
// mock (offline rule table), replay (recorded transcripts), http
// (OpenAI-compatible endpoint).
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& system_prompt,
                               const std::string& user_prompt) = 0;
};

// Offline backend. Answers slot-extraction prompts from the decision-rule
// keyword table and id-selection prompts by exact/containment label match,
// falling back to NEW with the top candidate as parent.
class MockLlm : public LlmClient {
 public:
  MockLlm();
  std::string complete(const std::string& system_prompt,
                       const std::string& user_prompt) override;

 private:
  std::string answer_slots(const std::string& user_prompt) const;
  std::string answer_select(const std::string& user_prompt) const;

  std::vector<std::string> action_terms_;
  std::vector<std::string> component_terms_;
  std::vector<std::string> state_terms_;
  std::vector<std::string> parameter_suffixes_;
};

// Scripted backend for tests: returns queued responses in order.
class ScriptedLlm : public LlmClient {
 public:
  explicit ScriptedLlm(std::vector<std::string> responses)
      : responses_(responses.begin(), responses.end()) {}

  std::string complete(const std::string& system_prompt,
                       const std::string& user_prompt) override;

  std::size_t remaining() const { return responses_.size(); }

 private:
  std::deque<std::string> responses_;
};

// Answers exclusively from a recorded transcript store; throws
// LlmUnavailable on any miss, so a replayed run provably makes zero live
// calls. Store format: JSON Lines {"system_hash","user_hash","response"}.
class ReplayLlm : public LlmClient {
 public:
  explicit ReplayLlm(const std::string& store_path);
  static ReplayLlm from_text(const std::string& jsonl);

  std::string complete(const std::string& system_prompt,
                       const std::string& user_prompt) override;

  std::size_t hits() const { return hits_; }

 private:
  ReplayLlm() = default;
  void load(const std::string& jsonl);

  std::map<std::pair<std::string, std::string>, std::string> store_;
  std::size_t hits_ = 0;
};

// Decorator that records every exchange of an inner client so the session
// can later be replayed.
class RecordingLlm : public LlmClient {
 public:
  explicit RecordingLlm(LlmClient& inner) : inner_(inner) {}

  std::string complete(const std::string& system_prompt,
                       const std::string& user_prompt) override;

  // One JSON line per distinct (system, user) pair, in first-seen order.
  std::string transcript_jsonl() const;
  void save(const std::string& path) const;

 private:
  LlmClient& inner_;
  std::vector<std::pair<std::string, std::string>> order_;  // hash pairs
  std::map<std::pair<std::string, std::string>, std::string> seen_;
};

struct HttpLlmConfig {
  std::string base_url;  // e.g. https://host/v1
  std::string api_key;
  std::string model;
  int timeout_seconds = 60;
};

// OpenAI-compatible chat-completions backend.
class HttpLlm : public LlmClient {
 public:
  explicit HttpLlm(HttpLlmConfig config) : config_(std::move(config)) {}

  std::string complete(const std::string& system_prompt,
                       const std::string& user_prompt) override;

 private:
  HttpLlmConfig config_;
};

}  // namespace fmea
