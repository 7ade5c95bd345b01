#include <doctest.h>

#include <json.hpp>

#include "fmea/error.hpp"
#include "fmea/llm.hpp"
#include "fmea/prompts.hpp"
#include "fmea/util.hpp"

using namespace fmea;
using nlohmann::json;

namespace {

std::string slot_user(const std::string& sentence) {
  return prompts::render(prompts::kSlotExtractionUser, {{"sentence", sentence}});
}

std::string select_user(const std::string& text, const std::string& block) {
  return prompts::render(prompts::kSelectIdUser,
                         {{"sentence", text}, {"id_to_label_block", block}});
}

}  // namespace

TEST_CASE("prompt templates render placeholders and keep literal braces") {
  std::string user = slot_user("Conveyance of chip");
  CHECK(user.find("Description: Conveyance of chip") == 0);
  CHECK(user.find("\"action\": {\"text\": string|null}") != std::string::npos);

  std::string sel = select_user("robot", "C-001 -> Robot");
  CHECK(sel.find("\"\"\"robot\"\"\"") != std::string::npos);
  CHECK(sel.find("C-001 -> Robot") != std::string::npos);
  // escaped example braces render as literal JSON
  CHECK(sel.find("{\"element\": \"A-010\"}") != std::string::npos);
  CHECK(sel.find("{{") == std::string::npos);
}

TEST_CASE("mock slot extraction applies the decision-rule keywords") {
  MockLlm llm;
  std::string raw = llm.complete(
      prompts::kSlotExtractionSystem,
      slot_user("Conveyance of chip by robot causes misalignment"));
  json out = json::parse(raw);
  CHECK(out["action"]["text"] == "Conveyance");
  CHECK(out["object"]["component"]["text"] == "robot");
  CHECK(out["state"]["text"] == "misalignment");
  CHECK(out["object"]["parameter"]["text"].is_null());
}

TEST_CASE("mock slot extraction returns nulls when nothing matches") {
  MockLlm llm;
  json out = json::parse(llm.complete(prompts::kSlotExtractionSystem,
                                      slot_user("nothing relevant here")));
  CHECK(out["action"]["text"].is_null());
  CHECK(out["state"]["text"].is_null());
  CHECK(out["object"]["component"]["text"].is_null());
  CHECK(out["object"]["parameter"]["text"].is_null());
}

TEST_CASE("mock extraction matches whole words and multiword states") {
  MockLlm llm;
  // "inspection" inside "reinspections" must not match
  json out = json::parse(llm.complete(prompts::kSlotExtractionSystem,
                                      slot_user("reinspections pending")));
  CHECK(out["action"]["text"].is_null());

  json multi = json::parse(
      llm.complete(prompts::kSlotExtractionSystem,
                   slot_user("Foreign substance adhesion on nozzle")));
  CHECK(multi["state"]["text"] == "Foreign substance adhesion");
}

TEST_CASE("mock parameter rule captures the qualifying word") {
  MockLlm llm;
  json out = json::parse(
      llm.complete(prompts::kSlotExtractionSystem,
                   slot_user("gripping force parameter drift observed")));
  CHECK(out["object"]["parameter"]["text"] == "force parameter");
  CHECK(out["action"]["text"] == "gripping");
}

TEST_CASE("mock id selection prefers exact, then containment, else NEW") {
  MockLlm llm;
  std::string block = "C-006 -> Conveyor\nC-001 -> Robot";
  json exact = json::parse(llm.complete(
      prompts::kSelectIdSystem, select_user("Robot", block)));
  CHECK(exact["element"] == "C-001");

  json contained = json::parse(llm.complete(
      prompts::kSelectIdSystem, select_user("conveyor belt unit", block)));
  CHECK(contained["element"] == "C-006");

  json fresh = json::parse(llm.complete(
      prompts::kSelectIdSystem, select_user("shooter gadget", block)));
  CHECK(fresh["element"] == "NEW");
  CHECK(fresh["new_parent"] == "C-006");
  CHECK(fresh["new_label"] == "Shooter gadget");
}

TEST_CASE("scripted client replays queued responses then fails") {
  ScriptedLlm llm({"one", "two"});
  CHECK(llm.complete("s", "u") == "one");
  CHECK(llm.complete("s", "u") == "two");
  CHECK_THROWS_AS(llm.complete("s", "u"), Error);
}

TEST_CASE("recording and replay round-trip byte-identically") {
  MockLlm inner;
  RecordingLlm recorder(inner);
  std::string user = slot_user("Conveyance of chip by robot");
  std::string live = recorder.complete(prompts::kSlotExtractionSystem, user);
  // repeated identical prompt served from the record, not re-asked
  CHECK(recorder.complete(prompts::kSlotExtractionSystem, user) == live);

  ReplayLlm replay = ReplayLlm::from_text(recorder.transcript_jsonl());
  CHECK(replay.complete(prompts::kSlotExtractionSystem, user) == live);
  CHECK(replay.hits() == 1);
  CHECK_THROWS_AS(replay.complete("other system", "other user"), Error);
}

TEST_CASE("replay misses are LlmUnavailable") {
  ReplayLlm replay = ReplayLlm::from_text("");
  try {
    replay.complete("s", "u");
    FAIL("expected LlmUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::LlmUnavailable);
  }
}

TEST_CASE("transcript store is keyed by prompt hashes") {
  MockLlm inner;
  RecordingLlm recorder(inner);
  std::string user = slot_user("robot misalignment");
  recorder.complete(prompts::kSlotExtractionSystem, user);
  std::string jsonl = recorder.transcript_jsonl();
  json rec = json::parse(util::split(jsonl, '\n')[0]);
  CHECK(rec["system_hash"] ==
        util::fnv1a64_hex(prompts::kSlotExtractionSystem));
  CHECK(rec["user_hash"] == util::fnv1a64_hex(user));
}
