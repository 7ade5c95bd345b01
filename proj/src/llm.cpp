#include "fmea/llm.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "fmea/error.hpp"
#include "fmea/util.hpp"

namespace fmea {

namespace {

using nlohmann::json;

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Case-insensitive whole-word search; returns the matched span from the
// original text so casing is preserved.
std::string find_term(const std::string& text, const std::string& term) {
  if (term.empty() || text.size() < term.size()) return {};
  for (std::size_t i = 0; i + term.size() <= text.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < term.size(); ++k) {
      char a = static_cast<char>(
          std::tolower(static_cast<unsigned char>(text[i + k])));
      char b = static_cast<char>(
          std::tolower(static_cast<unsigned char>(term[k])));
      if (a != b) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    bool left_ok = i == 0 || !is_word_char(text[i - 1]);
    std::size_t end = i + term.size();
    bool right_ok = end == text.size() || !is_word_char(text[end]);
    if (left_ok && right_ok) return text.substr(i, term.size());
  }
  return {};
}

json slot_json(const std::string& value) {
  json obj;
  obj["text"] = value.empty() ? json(nullptr) : json(value);
  return obj;
}

}  // namespace

MockLlm::MockLlm() {
  // Keyword table transcribed from the id-selection decision rules.
  action_terms_ = {"conveyance", "gripping", "discharge",
                   "inspection", "cutting",  "bonding"};
  component_terms_ = {"robot", "sensor", "conveyor", "chuck", "cylinder"};
  state_terms_ = {"foreign substance adhesion",
                  "decrease",
                  "increase",
                  "excessive",
                  "insufficient",
                  "degradation",
                  "fracture",
                  "misalignment",
                  "slip",
                  "contamination",
                  "scratch",
                  "omission"};
  parameter_suffixes_ = {"setting value", "function", "performance",
                         "parameter", "characteristic"};
}

std::string MockLlm::answer_slots(const std::string& user_prompt) const {
  // The sentence sits on the first line after "Description: ".
  std::string sentence;
  const std::string marker = "Description: ";
  std::size_t pos = user_prompt.find(marker);
  if (pos != std::string::npos) {
    std::size_t start = pos + marker.size();
    std::size_t end = user_prompt.find('\n', start);
    sentence = user_prompt.substr(start, end - start);
  }

  std::vector<std::string> used;
  auto take = [&](const std::string& span) {
    if (span.empty()) return false;
    if (std::find(used.begin(), used.end(), span) != used.end()) return false;
    used.push_back(span);
    return true;
  };

  // Parameter first (the rules give it priority): keyword suffix preceded
  // by its qualifying word when present.
  std::string parameter;
  for (const std::string& suffix : parameter_suffixes_) {
    std::string span = find_term(sentence, suffix);
    if (span.empty()) continue;
    std::size_t at = sentence.find(span);
    std::size_t word_end = at;
    while (word_end > 0 && sentence[word_end - 1] == ' ') --word_end;
    std::size_t word_begin = word_end;
    while (word_begin > 0 && is_word_char(sentence[word_begin - 1]))
      --word_begin;
    parameter = word_begin < word_end
                    ? sentence.substr(word_begin, at + span.size() - word_begin)
                    : span;
    break;
  }
  if (!parameter.empty() && !take(parameter)) parameter.clear();

  std::string component;
  for (const std::string& term : component_terms_) {
    std::string span = find_term(sentence, term);
    if (!span.empty() && !parameter.ends_with(span) && take(span)) {
      component = span;
      break;
    }
  }
  std::string state;
  for (const std::string& term : state_terms_) {
    std::string span = find_term(sentence, term);
    if (!span.empty() && take(span)) {
      state = span;
      break;
    }
  }
  std::string action;
  for (const std::string& term : action_terms_) {
    std::string span = find_term(sentence, term);
    if (!span.empty() && take(span)) {
      action = span;
      break;
    }
  }

  json out;
  out["action"] = slot_json(action);
  out["state"] = slot_json(state);
  out["object"]["component"] = slot_json(component);
  out["object"]["parameter"] = slot_json(parameter);
  return out.dump();
}

std::string MockLlm::answer_select(const std::string& user_prompt) const {
  // Pull the sentence between the triple-quote markers and the candidate
  // lines from the "Candidates (ID -> Label):" block.
  std::string sentence;
  std::size_t q1 = user_prompt.find("\"\"\"");
  if (q1 != std::string::npos) {
    std::size_t q2 = user_prompt.find("\"\"\"", q1 + 3);
    if (q2 != std::string::npos) {
      sentence = user_prompt.substr(q1 + 3, q2 - q1 - 3);
    }
  }
  std::vector<std::pair<std::string, std::string>> candidates;
  const std::string marker = "Candidates (ID -> Label):";
  std::size_t block = user_prompt.find(marker);
  if (block != std::string::npos) {
    std::istringstream lines(user_prompt.substr(block + marker.size()));
    std::string line;
    while (std::getline(lines, line)) {
      std::size_t arrow = line.find(" -> ");
      if (arrow == std::string::npos) {
        if (!candidates.empty()) break;
        continue;
      }
      candidates.emplace_back(util::trim(line.substr(0, arrow)),
                              util::trim(line.substr(arrow + 4)));
    }
  }
  if (candidates.empty()) {
    return json{{"element", "NEW"}}.dump();
  }

  const std::string norm_text = util::normalize(sentence);
  for (const auto& [id, label] : candidates) {
    if (util::normalize(label) == norm_text) {
      return json{{"element", id}}.dump();
    }
  }
  for (const auto& [id, label] : candidates) {
    const std::string norm_label = util::normalize(label);
    if (norm_label.empty()) continue;
    if (norm_text.find(norm_label) != std::string::npos ||
        norm_label.find(norm_text) != std::string::npos) {
      return json{{"element", id}}.dump();
    }
  }
  std::string label = util::trim(sentence);
  if (!label.empty() &&
      std::islower(static_cast<unsigned char>(label.front()))) {
    label.front() = static_cast<char>(
        std::toupper(static_cast<unsigned char>(label.front())));
  }
  return json{{"element", "NEW"},
              {"new_parent", candidates.front().first},
              {"new_label", label}}
      .dump();
}

std::string MockLlm::complete(const std::string& system_prompt,
                              const std::string& user_prompt) {
  if (system_prompt.find("You are a slot extractor") != std::string::npos) {
    return answer_slots(user_prompt);
  }
  if (system_prompt.find("You are a classifier") != std::string::npos) {
    return answer_select(user_prompt);
  }
  throw Error(Errc::LlmUnavailable, "mock backend: unrecognized prompt");
}

std::string ScriptedLlm::complete(const std::string&, const std::string&) {
  if (responses_.empty()) {
    throw Error(Errc::LlmUnavailable, "scripted backend exhausted");
  }
  std::string response = responses_.front();
  responses_.pop_front();
  return response;
}

void ReplayLlm::load(const std::string& jsonl) {
  int line_number = 0;
  for (const std::string& line : util::split(jsonl, '\n')) {
    ++line_number;
    if (util::trim(line).empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("system_hash") ||
        !record.contains("user_hash") || !record.contains("response")) {
      throw Error(Errc::LlmUnavailable,
                  "bad replay record at line " + std::to_string(line_number));
    }
    store_[{record["system_hash"].get<std::string>(),
            record["user_hash"].get<std::string>()}] =
        record["response"].get<std::string>();
  }
}

ReplayLlm::ReplayLlm(const std::string& store_path) {
  load(util::read_file(store_path));
}

ReplayLlm ReplayLlm::from_text(const std::string& jsonl) {
  ReplayLlm client;
  client.load(jsonl);
  return client;
}

std::string ReplayLlm::complete(const std::string& system_prompt,
                                const std::string& user_prompt) {
  auto key = std::make_pair(util::fnv1a64_hex(system_prompt),
                            util::fnv1a64_hex(user_prompt));
  auto it = store_.find(key);
  if (it == store_.end()) {
    throw Error(Errc::LlmUnavailable,
                "no transcript for prompt pair " + key.first + "/" + key.second);
  }
  ++hits_;
  return it->second;
}

std::string RecordingLlm::complete(const std::string& system_prompt,
                                   const std::string& user_prompt) {
  auto key = std::make_pair(util::fnv1a64_hex(system_prompt),
                            util::fnv1a64_hex(user_prompt));
  auto it = seen_.find(key);
  if (it != seen_.end()) return it->second;
  std::string response = inner_.complete(system_prompt, user_prompt);
  seen_[key] = response;
  order_.push_back(key);
  return response;
}

std::string RecordingLlm::transcript_jsonl() const {
  std::string out;
  for (const auto& key : order_) {
    json record;
    record["system_hash"] = key.first;
    record["user_hash"] = key.second;
    record["response"] = seen_.at(key);
    out += record.dump();
    out += '\n';
  }
  return out;
}

void RecordingLlm::save(const std::string& path) const {
  util::write_file(path, transcript_jsonl());
}

}  // namespace fmea
