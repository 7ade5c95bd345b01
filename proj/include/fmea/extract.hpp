#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fmea/ingest.hpp"
#include "fmea/llm.hpp"
#include "fmea/ontology.hpp"

namespace fmea {

// The four worksheet cells treated as sentences during extraction.
enum class RecordField { Function, Failure, Cause, Effect };

const char* record_field_name(RecordField field);

// Raw slot terms returned by the extraction prompt; absent slots were null.
struct SlotExtraction {
  std::optional<std::string> action;
  std::optional<std::string> state;
  std::optional<std::string> component;
  std::optional<std::string> parameter;
};

// Shortlist entry: exact normalized match scores 1.0, otherwise character
// trigram Jaccard. Sorted descending by score, ties by id.
struct Candidate {
  ConceptId id;
  std::string label;
  double score = 0.0;
};

struct ResolvedId {
  struct Existing {
    ConceptId id;
  };
  struct New {
    ConceptId parent;  // must come from the shortlist
    std::string label;
  };
  std::variant<Existing, New> value;

  bool is_new() const { return std::holds_alternative<New>(value); }
};

// One slot after identifier resolution; `created` marks ids this run
// allocated through add_new_entry.
struct SlotResolution {
  std::string text;
  ConceptId concept_id;
  bool created = false;
};

// Algorithm 1's EmitRow tuple, tagged with the record field it came from.
struct ExtractionRow {
  std::size_t record_index = 0;
  RecordField field = RecordField::Function;
  std::string sentence;
  std::optional<SlotResolution> action;
  std::optional<SlotResolution> state;
  std::optional<SlotResolution> component;
  std::optional<SlotResolution> parameter;
};

enum class ErrorPolicy { Abort, SkipAndLog };

// Stage 1: LLM slot extraction. One retry on schema violations or
// duplicate slot assignments, then a hard error.
SlotExtraction extract_slots(const std::string& sentence, LlmClient& llm);

// Shortlist by string match against one class subtree; at most k entries.
std::vector<Candidate> shortlist_by_string_match(
    const std::string& text, const std::vector<OntologyEntry>& entries, int k);

// Stage 2: LLM identifier selection over the shortlist.
ResolvedId select_id(const std::string& text,
                     const std::vector<Candidate>& candidates, LlmClient& llm,
                     bool allow_new);

// Full Algorithm 1 over a worksheet: every non-empty record field becomes
// one row; NEW labels allocate an ontology entry once per distinct
// (class, normalized label).
std::vector<ExtractionRow> extract_worksheet(
    const Worksheet& ws, Ontology& ontology, LlmClient& llm, int shortlist_k,
    ErrorPolicy policy = ErrorPolicy::Abort);

}  // namespace fmea
