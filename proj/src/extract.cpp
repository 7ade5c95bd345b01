#include "fmea/extract.hpp"

#include <algorithm>
#include <iostream>
#include <map>

#include <json.hpp>

#include "fmea/error.hpp"
#include "fmea/prompts.hpp"
#include "fmea/util.hpp"

namespace fmea {

namespace {

using nlohmann::json;

std::optional<std::string> parse_slot(const json& node) {
  if (node.is_null()) return std::nullopt;
  if (!node.is_object() || !node.contains("text")) {
    throw Error(Errc::SchemaViolation, "slot is not {\"text\": ...}");
  }
  const json& text = node["text"];
  if (text.is_null()) return std::nullopt;
  if (!text.is_string()) {
    throw Error(Errc::SchemaViolation, "slot text is not a string");
  }
  std::string value = util::trim(text.get<std::string>());
  if (value.empty()) return std::nullopt;
  return value;
}

SlotExtraction parse_slots_response(const std::string& raw) {
  json response = json::parse(raw, nullptr, false);
  if (response.is_discarded() || !response.is_object()) {
    throw Error(Errc::SchemaViolation, raw);
  }
  if (!response.contains("action") || !response.contains("state") ||
      !response.contains("object")) {
    throw Error(Errc::SchemaViolation, raw);
  }
  const json& object = response["object"];
  if (!object.is_null() &&
      (!object.is_object() || !object.contains("component") ||
       !object.contains("parameter"))) {
    throw Error(Errc::SchemaViolation, raw);
  }
  SlotExtraction slots;
  slots.action = parse_slot(response["action"]);
  slots.state = parse_slot(response["state"]);
  if (!object.is_null()) {
    slots.component = parse_slot(object["component"]);
    slots.parameter = parse_slot(object["parameter"]);
  }
  // "no duplicate assignments": the same span may fill at most one slot.
  std::vector<std::string> filled;
  for (const auto& slot :
       {slots.action, slots.state, slots.component, slots.parameter}) {
    if (slot) filled.push_back(*slot);
  }
  std::sort(filled.begin(), filled.end());
  if (std::adjacent_find(filled.begin(), filled.end()) != filled.end()) {
    throw Error(Errc::DuplicateSlots, raw);
  }
  return slots;
}

}  // namespace

const char* record_field_name(RecordField field) {
  switch (field) {
    case RecordField::Function: return "function";
    case RecordField::Failure: return "failure";
    case RecordField::Cause: return "cause";
    case RecordField::Effect: return "effect";
  }
  return "?";
}

SlotExtraction extract_slots(const std::string& sentence, LlmClient& llm) {
  if (util::trim(sentence).empty()) {
    throw std::invalid_argument("extract_slots: empty sentence");
  }
  const std::string user =
      prompts::render(prompts::kSlotExtractionUser, {{"sentence", sentence}});
  std::string raw = llm.complete(prompts::kSlotExtractionSystem, user);
  try {
    return parse_slots_response(raw);
  } catch (const Error&) {
    // One retry, then the error stands.
    raw = llm.complete(prompts::kSlotExtractionSystem, user);
    return parse_slots_response(raw);
  }
}

std::vector<Candidate> shortlist_by_string_match(
    const std::string& text, const std::vector<OntologyEntry>& entries,
    int k) {
  if (k < 1) throw std::invalid_argument("shortlist: k must be >= 1");
  const std::string norm_text = util::normalize(text);
  std::vector<Candidate> scored;
  scored.reserve(entries.size());
  for (const OntologyEntry& entry : entries) {
    const std::string norm_label = util::normalize(entry.label);
    double score = norm_label == norm_text
                       ? 1.0
                       : util::trigram_jaccard(norm_text, norm_label);
    scored.push_back({entry.id, entry.label, score});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (scored.size() > static_cast<std::size_t>(k)) {
    scored.resize(static_cast<std::size_t>(k));
  }
  return scored;
}

namespace {

ResolvedId parse_select_response(const std::string& raw,
                                 const std::vector<Candidate>& candidates,
                                 bool allow_new) {
  json response = json::parse(raw, nullptr, false);
  if (response.is_discarded() || !response.is_object() ||
      !response.contains("element") || !response["element"].is_string()) {
    throw Error(Errc::SchemaViolation, raw);
  }
  const std::string element = response["element"].get<std::string>();
  auto in_candidates = [&](const ConceptId& id) {
    return std::any_of(candidates.begin(), candidates.end(),
                       [&](const Candidate& c) { return c.id == id; });
  };
  if (element == "NEW") {
    if (!allow_new) {
      throw Error(Errc::NewForbidden, raw);
    }
    if (!response.contains("new_parent") ||
        !response["new_parent"].is_string() ||
        !response.contains("new_label") ||
        !response["new_label"].is_string()) {
      throw Error(Errc::SchemaViolation, raw);
    }
    const std::string parent_text = response["new_parent"].get<std::string>();
    if (!ConceptId::looks_like(parent_text)) {
      throw Error(Errc::SchemaViolation, "bad new_parent: " + raw);
    }
    ConceptId parent = ConceptId::parse(parent_text);
    if (!in_candidates(parent)) {
      throw Error(Errc::ParentNotInCandidates, parent_text);
    }
    std::string label = util::trim(response["new_label"].get<std::string>());
    if (label.empty()) {
      throw Error(Errc::SchemaViolation, "empty new_label: " + raw);
    }
    return ResolvedId{ResolvedId::New{parent, label}};
  }
  if (!ConceptId::looks_like(element)) {
    throw Error(Errc::SchemaViolation, "bad element id: " + raw);
  }
  ConceptId id = ConceptId::parse(element);
  if (!in_candidates(id)) {
    throw Error(Errc::IdNotInCandidates, element);
  }
  return ResolvedId{ResolvedId::Existing{id}};
}

}  // namespace

ResolvedId select_id(const std::string& text,
                     const std::vector<Candidate>& candidates, LlmClient& llm,
                     bool allow_new) {
  if (candidates.empty()) {
    throw std::invalid_argument("select_id: empty candidate list");
  }
  std::string block;
  for (const Candidate& c : candidates) {
    if (!block.empty()) block += '\n';
    block += c.id.str() + " -> " + c.label;
  }
  const std::string user = prompts::render(
      prompts::kSelectIdUser,
      {{"sentence", text}, {"id_to_label_block", block}});
  std::string raw = llm.complete(prompts::kSelectIdSystem, user);
  try {
    return parse_select_response(raw, candidates, allow_new);
  } catch (const Error& e) {
    if (e.code() != Errc::SchemaViolation) throw;
    raw = llm.complete(prompts::kSelectIdSystem, user);
    return parse_select_response(raw, candidates, allow_new);
  }
}

namespace {

ConceptClass slot_class(int slot) {
  switch (slot) {
    case 0: return ConceptClass::Action;
    case 1: return ConceptClass::State;
    case 2: return ConceptClass::Component;
    default: return ConceptClass::Parameter;
  }
}

}  // namespace

std::vector<ExtractionRow> extract_worksheet(const Worksheet& ws,
                                             Ontology& ontology,
                                             LlmClient& llm, int shortlist_k,
                                             ErrorPolicy policy) {
  for (ConceptClass cls : kManufacturingClasses) {
    if (ontology.count(cls) == 0) {
      throw std::invalid_argument(
          std::string("extract_worksheet: ontology has no ") +
          class_name(cls) + " entries");
    }
  }
  // NEW labels allocate exactly one entry per distinct (class, label).
  std::map<std::pair<ConceptClass, std::string>, ConceptId> new_labels;
  std::vector<ExtractionRow> rows;

  for (std::size_t index = 0; index < ws.records.size(); ++index) {
    const FmeaRecord& rec = ws.records[index];
    const std::pair<RecordField, const std::string*> fields[] = {
        {RecordField::Function, &rec.function_text},
        {RecordField::Failure, &rec.failure_text},
        {RecordField::Cause, &rec.cause_text},
        {RecordField::Effect, &rec.effect_text},
    };
    for (const auto& [field, sentence] : fields) {
      if (util::trim(*sentence).empty()) continue;
      try {
        SlotExtraction slots = extract_slots(*sentence, llm);
        ExtractionRow row;
        row.record_index = index;
        row.field = field;
        row.sentence = *sentence;
        const std::optional<std::string>* slot_texts[] = {
            &slots.action, &slots.state, &slots.component, &slots.parameter};
        std::optional<SlotResolution>* resolutions[] = {
            &row.action, &row.state, &row.component, &row.parameter};
        for (int s = 0; s < 4; ++s) {
          if (!slot_texts[s]->has_value()) continue;
          const std::string& text = **slot_texts[s];
          ConceptClass cls = slot_class(s);
          std::vector<Candidate> candidates = shortlist_by_string_match(
              text, ontology.subtree(cls), shortlist_k);
          ResolvedId resolved = select_id(text, candidates, llm, true);
          SlotResolution resolution;
          resolution.text = text;
          if (resolved.is_new()) {
            const auto& created = std::get<ResolvedId::New>(resolved.value);
            auto key = std::make_pair(cls, util::normalize(created.label));
            auto it = new_labels.find(key);
            if (it == new_labels.end()) {
              resolution.concept_id =
                  ontology.add_new_entry(created.parent, created.label);
              resolution.created = true;
              new_labels[key] = resolution.concept_id;
            } else {
              resolution.concept_id = it->second;
            }
          } else {
            resolution.concept_id =
                std::get<ResolvedId::Existing>(resolved.value).id;
          }
          *resolutions[s] = resolution;
        }
        rows.push_back(std::move(row));
      } catch (const Error& e) {
        if (policy == ErrorPolicy::Abort) throw;
        std::cerr << "extract: skipping " << record_field_name(field)
                  << " of record " << index << ": " << e.what() << "\n";
      }
    }
  }
  return rows;
}

}  // namespace fmea
