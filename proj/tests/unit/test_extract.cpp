#include <doctest.h>

#include "fmea/error.hpp"
#include "fmea/extract.hpp"
#include "fmea/ingest.hpp"
#include "fmea/util.hpp"

using namespace fmea;

namespace {
const std::string kFixture = std::string(FMEA_FIXTURE_DIR) + "/ontology.tsv";

Ontology fixture_ontology() { return load_ontology(kFixture); }
}  // namespace

TEST_CASE("extract_slots on the appendix example sentence") {
  MockLlm llm;
  SlotExtraction slots =
      extract_slots("Conveyance of chip by robot causes misalignment", llm);
  CHECK(slots.action == "Conveyance");
  CHECK(slots.component == "robot");
  CHECK(slots.state == "misalignment");
  CHECK_FALSE(slots.parameter.has_value());
}

TEST_CASE("extract_slots rejects empty sentences") {
  MockLlm llm;
  CHECK_THROWS_AS(extract_slots("", llm), std::invalid_argument);
  CHECK_THROWS_AS(extract_slots("   ", llm), std::invalid_argument);
}

TEST_CASE("all-null response maps to four absent slots") {
  ScriptedLlm llm({R"({"action":{"text":null},"state":{"text":null},)"
                   R"("object":{"component":{"text":null},)"
                   R"("parameter":{"text":null}}})"});
  SlotExtraction slots = extract_slots("anything", llm);
  CHECK_FALSE(slots.action.has_value());
  CHECK_FALSE(slots.state.has_value());
  CHECK_FALSE(slots.component.has_value());
  CHECK_FALSE(slots.parameter.has_value());
}

TEST_CASE("schema violations retry once then error") {
  std::string good = R"({"action":{"text":"grip"},"state":{"text":null},)"
                     R"("object":{"component":{"text":null},)"
                     R"("parameter":{"text":null}}})";
  ScriptedLlm recovers({"not json", good});
  SlotExtraction slots = extract_slots("x", recovers);
  CHECK(slots.action == "grip");

  ScriptedLlm fails({"not json", "still not json"});
  try {
    extract_slots("x", fails);
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SchemaViolation);
  }
}

TEST_CASE("duplicate slot assignments retry once then error") {
  std::string dup = R"({"action":{"text":"grip"},"state":{"text":"grip"},)"
                    R"("object":{"component":{"text":null},)"
                    R"("parameter":{"text":null}}})";
  ScriptedLlm fails({dup, dup});
  try {
    extract_slots("x", fails);
    FAIL("expected DuplicateSlots");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DuplicateSlots);
  }
}

TEST_CASE("shortlist: exact normalized match scores 1.0 and ranks first") {
  Ontology o = fixture_ontology();
  auto candidates = shortlist_by_string_match(
      "robot", o.subtree(ConceptClass::Component), 5);
  REQUIRE(!candidates.empty());
  CHECK(candidates[0].label == "Robot");
  CHECK(candidates[0].score == 1.0);
  CHECK(candidates.size() == 5);
}

TEST_CASE("shortlist ranks by trigram overlap: convyor finds Conveyor") {
  std::vector<OntologyEntry> entries;
  OntologyEntry a;
  a.id = ConceptId::parse("C-001");
  a.label = "Conveyor";
  OntologyEntry b;
  b.id = ConceptId::parse("C-002");
  b.label = "Camera";
  entries = {a, b};
  auto candidates = shortlist_by_string_match("convyor", entries, 2);
  REQUIRE(candidates.size() == 2);
  CHECK(candidates[0].label == "Conveyor");
  // hand oracle: trigram jaccard 3/8 (see test_util)
  CHECK(candidates[0].score == doctest::Approx(3.0 / 8.0));
  CHECK(candidates[1].score == 0.0);
}

TEST_CASE("shortlist truncates to k and breaks ties by id") {
  Ontology o = fixture_ontology();
  auto candidates = shortlist_by_string_match(
      "zzzz", o.subtree(ConceptClass::Action), 3);
  REQUIRE(candidates.size() == 3);
  // all scores zero: order by ascending id
  CHECK(candidates[0].id.str() == "A-001");
  CHECK(candidates[1].id.str() == "A-002");
  CHECK(candidates[2].id.str() == "A-003");
  CHECK_THROWS_AS(shortlist_by_string_match("x", o.subtree(ConceptClass::Action), 0),
                  std::invalid_argument);
}

TEST_CASE("select_id resolves an existing identifier") {
  std::vector<Candidate> candidates = {
      {ConceptId::parse("A-010"), "Screw", 0.4},
      {ConceptId::parse("A-002"), "Conveyor transfer", 0.2},
  };
  ScriptedLlm llm({R"({"element": "A-010"})"});
  ResolvedId resolved = select_id("screwing", candidates, llm, true);
  CHECK_FALSE(resolved.is_new());
  CHECK(std::get<ResolvedId::Existing>(resolved.value).id.str() == "A-010");
}

TEST_CASE("select_id accepts NEW with parent from the shortlist") {
  std::vector<Candidate> candidates = {
      {ConceptId::parse("A-002"), "Conveyor transfer", 0.5},
      {ConceptId::parse("A-001"), "Convey", 0.4},
  };
  ScriptedLlm llm({R"({"element":"NEW","new_parent":"A-002",)"
                   R"("new_label":"Shooter conveyor"})"});
  ResolvedId resolved = select_id("shooter conveyor", candidates, llm, true);
  REQUIRE(resolved.is_new());
  const auto& fresh = std::get<ResolvedId::New>(resolved.value);
  CHECK(fresh.parent.str() == "A-002");
  CHECK(fresh.label == "Shooter conveyor");
}

TEST_CASE("select_id rejects ids outside the shortlist") {
  std::vector<Candidate> candidates = {
      {ConceptId::parse("A-001"), "Convey", 0.4}};
  ScriptedLlm llm({R"({"element": "A-044"})"});
  try {
    select_id("pack", candidates, llm, true);
    FAIL("expected IdNotInCandidates");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IdNotInCandidates);
  }
}

TEST_CASE("select_id rejects NEW parents outside the shortlist") {
  std::vector<Candidate> candidates = {
      {ConceptId::parse("A-001"), "Convey", 0.4}};
  ScriptedLlm llm({R"({"element":"NEW","new_parent":"A-044","new_label":"x"})"});
  try {
    select_id("x", candidates, llm, true);
    FAIL("expected ParentNotInCandidates");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParentNotInCandidates);
  }
}

TEST_CASE("select_id forbids NEW when allow_new is off") {
  std::vector<Candidate> candidates = {
      {ConceptId::parse("A-001"), "Convey", 0.4}};
  ScriptedLlm llm({R"({"element":"NEW","new_parent":"A-001","new_label":"x"})"});
  try {
    select_id("x", candidates, llm, false);
    FAIL("expected NewForbidden");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NewForbidden);
  }
}

TEST_CASE("select_id requires a non-empty shortlist") {
  MockLlm llm;
  CHECK_THROWS_AS(select_id("x", {}, llm, true), std::invalid_argument);
}

namespace {

Worksheet one_record_worksheet() {
  return parse_worksheet_text(
      "function,failure,cause,effect,recommendation\n"
      "Component placement,Misalignment,Incorrect robot teaching,"
      "Assembly failure,Review robot teaching procedure\n",
      "line-A");
}

}  // namespace

TEST_CASE("extract_worksheet emits one row per non-empty field in order") {
  Worksheet ws = one_record_worksheet();
  Ontology o = fixture_ontology();
  MockLlm llm;
  std::vector<ExtractionRow> rows = extract_worksheet(ws, o, llm, 5);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].field == RecordField::Function);
  CHECK(rows[1].field == RecordField::Failure);
  CHECK(rows[2].field == RecordField::Cause);
  CHECK(rows[3].field == RecordField::Effect);
  // function "Component placement": no keywords
  CHECK_FALSE(rows[0].action.has_value());
  // failure "Misalignment" resolves exactly to S-001
  REQUIRE(rows[1].state.has_value());
  CHECK(rows[1].state->concept_id.str() == "S-001");
  CHECK_FALSE(rows[1].state->created);
  // cause "Incorrect robot teaching" -> Component Robot
  REQUIRE(rows[2].component.has_value());
  CHECK(rows[2].component->concept_id.str() == "C-001");
}

TEST_CASE("extract_worksheet on an empty worksheet returns no rows") {
  Worksheet ws;
  ws.line_id = "L";
  Ontology o = fixture_ontology();
  MockLlm llm;
  CHECK(extract_worksheet(ws, o, llm, 5).empty());
}

TEST_CASE("NEW labels allocate exactly one ontology entry per distinct label") {
  // "slip" is not in the fixture states, so the mock answers NEW twice.
  Worksheet ws = parse_worksheet_text(
      "function,failure,cause,effect,recommendation\n"
      "Chip gripping,Chip slip detected,slip of chuck,,\n",
      "L");
  Ontology o = fixture_ontology();
  const std::size_t before = o.count(ConceptClass::State);
  MockLlm llm;
  std::vector<ExtractionRow> rows = extract_worksheet(ws, o, llm, 5);
  CHECK(o.count(ConceptClass::State) == before + 1);
  REQUIRE(rows.size() == 3);
  REQUIRE(rows[1].state.has_value());
  REQUIRE(rows[2].state.has_value());
  CHECK(rows[1].state->concept_id == rows[2].state->concept_id);
  CHECK(rows[1].state->concept_id.str() == "S-017");
  CHECK(rows[1].state->created);
  CHECK_FALSE(rows[2].state->created);
}

TEST_CASE("two-stage consistency: slot class matches the chosen id class") {
  Worksheet ws = parse_worksheet_text(
      "function,failure,cause,effect,recommendation\n"
      "Chip conveyance,Gripping force insufficient,Conveyor speed decrease,"
      "Bond strength decrease,\n",
      "L");
  Ontology o = fixture_ontology();
  MockLlm llm;
  for (const ExtractionRow& row : extract_worksheet(ws, o, llm, 5)) {
    if (row.action) CHECK(row.action->concept_id.cls == ConceptClass::Action);
    if (row.state) CHECK(row.state->concept_id.cls == ConceptClass::State);
    if (row.component)
      CHECK(row.component->concept_id.cls == ConceptClass::Component);
    if (row.parameter)
      CHECK(row.parameter->concept_id.cls == ConceptClass::Parameter);
    // every Existing id is present in the registry at emission time
    for (const auto& slot :
         {row.action, row.state, row.component, row.parameter}) {
      if (slot) CHECK(o.contains(slot->concept_id));
    }
  }
}

TEST_CASE("replay determinism: recorded transcripts reproduce rows exactly") {
  Worksheet ws = one_record_worksheet();
  MockLlm mock;
  RecordingLlm recorder(mock);
  Ontology o1 = fixture_ontology();
  std::vector<ExtractionRow> live = extract_worksheet(ws, o1, recorder, 5);

  ReplayLlm replay = ReplayLlm::from_text(recorder.transcript_jsonl());
  Ontology o2 = fixture_ontology();
  std::vector<ExtractionRow> replayed = extract_worksheet(ws, o2, replay, 5);
  REQUIRE(live.size() == replayed.size());
  for (std::size_t i = 0; i < live.size(); ++i) {
    CHECK(live[i].sentence == replayed[i].sentence);
    CHECK(live[i].action.has_value() == replayed[i].action.has_value());
    if (live[i].state) {
      CHECK(live[i].state->concept_id == replayed[i].state->concept_id);
    }
  }
  CHECK(o1 == o2);
}

TEST_CASE("skip-and-log policy drops failing rows instead of aborting") {
  Worksheet ws = one_record_worksheet();
  Ontology o = fixture_ontology();
  // Scripted responses: garbage for every call (two tries per sentence).
  std::vector<std::string> garbage(16, "not json");
  ScriptedLlm llm(garbage);
  std::vector<ExtractionRow> rows =
      extract_worksheet(ws, o, llm, 5, ErrorPolicy::SkipAndLog);
  CHECK(rows.empty());

  ScriptedLlm strict(std::vector<std::string>(2, "not json"));
  CHECK_THROWS_AS(extract_worksheet(ws, o, strict, 5, ErrorPolicy::Abort),
                  Error);
}

TEST_CASE("extract_worksheet requires all four manufacturing subtrees") {
  Ontology empty;
  OntologyEntry only;
  only.id = ConceptId::parse("A-001");
  only.label = "Convey";
  empty.insert(only);
  MockLlm llm;
  Worksheet ws = one_record_worksheet();
  CHECK_THROWS_AS(extract_worksheet(ws, empty, llm, 5),
                  std::invalid_argument);
}
