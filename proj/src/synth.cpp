#include <array>

#include "fmea/error.hpp"
#include "fmea/eval.hpp"
#include "fmea/util.hpp"

namespace fmea {

namespace {

// Vocabulary drawn from the extraction decision rules so the offline
// pipeline resolves every planted concept.
const std::array<const char*, 6> kActions = {
    "conveyance", "gripping", "discharge", "inspection", "cutting", "bonding"};
const std::array<const char*, 5> kComponents = {"robot", "sensor", "conveyor",
                                                "chuck", "cylinder"};
const std::array<const char*, 12> kStates = {
    "misalignment", "contamination", "scratch",      "fracture",
    "slip",         "degradation",   "omission",     "decrease",
    "increase",     "excessive",     "insufficient",
    "foreign substance adhesion"};
const std::array<const char*, 4> kParameters = {"force", "speed", "brightness",
                                                "position"};
const std::array<const char*, 8> kLineObjects = {
    "chip", "board", "housing", "module", "lens", "frame", "panel", "core"};

std::string capitalize(std::string text) {
  if (!text.empty()) {
    text[0] = static_cast<char>(
        std::toupper(static_cast<unsigned char>(text[0])));
  }
  return text;
}

Ontology vocabulary_ontology() {
  Ontology ontology;
  auto add_all = [&](ConceptClass cls, const auto& labels) {
    int ordinal = 1;
    for (const char* label : labels) {
      OntologyEntry entry;
      entry.id = ConceptId{cls, ordinal++};
      entry.label = capitalize(label);
      ontology.insert(entry);
    }
  };
  add_all(ConceptClass::Action, kActions);
  add_all(ConceptClass::State, kStates);
  add_all(ConceptClass::Component, kComponents);
  add_all(ConceptClass::Parameter, kParameters);
  return ontology;
}

// One latent (failure -> causes) rule shared by every line. Cause A is
// introduced one step upstream of the failing function, cause B at the
// same step; the decoy shares the failure's state wording but sits one
// step downstream, so only process order rules it out.
struct Rule {
  std::string fail_state;
  std::string cause_state_a;
  std::string cause_state_b;
  std::string cause_component;
  std::string decoy_component;
  int fail_pos = 1;
};

std::vector<Rule> make_rules(const GeneratorSpec& spec) {
  std::vector<Rule> rules;
  const int F = spec.functions_per_line;
  for (int r = 0; r < spec.rules; ++r) {
    Rule rule;
    rule.fail_state = kStates[static_cast<std::size_t>(r) % kStates.size()];
    rule.cause_state_a =
        kStates[static_cast<std::size_t>(r + spec.rules) % kStates.size()];
    rule.cause_state_b =
        kStates[static_cast<std::size_t>(r + 2 * spec.rules) % kStates.size()];
    rule.cause_component =
        kComponents[static_cast<std::size_t>(r) % kComponents.size()];
    rule.decoy_component =
        kComponents[static_cast<std::size_t>(r + 2) % kComponents.size()];
    rule.fail_pos = 1 + r % (F - 2 > 0 ? F - 2 : 1);
    if (rule.fail_pos >= F - 1) rule.fail_pos = F - 2;
    rules.push_back(rule);
  }
  return rules;
}

struct PhraseVariants {
  std::string canonical;
  std::array<std::string, 3> variants;
};

PhraseVariants cause_phrase_a(const Rule& rule) {
  const std::string& s = rule.cause_state_a;
  const std::string& c = rule.cause_component;
  return {s + " of " + c,
          {c + " " + s, s + " near " + c + " unit", s + " detected at " + c}};
}

PhraseVariants cause_phrase_b(const Rule& rule) {
  const std::string& s = rule.cause_state_b;
  const std::string& c = rule.cause_component;
  return {s + " at " + c,
          {c + " " + s + " issue", s + " around " + c, s + " from " + c}};
}

// Decoy causes repeat the failure's state wording, so a ranker without
// process awareness is drawn to them.
PhraseVariants decoy_phrase(const Rule& rule) {
  const std::string& s = rule.fail_state;
  const std::string& c = rule.decoy_component;
  return {s + " residue near " + c,
          {s + " marks at " + c, c + " " + s + " residue",
           s + " deposit on " + c}};
}

std::string pick_phrase(const PhraseVariants& phrase, double noise,
                        util::Rng& rng, AliasMap* aliases) {
  for (const std::string& variant : phrase.variants) {
    (*aliases)[util::normalize(variant)] = util::normalize(phrase.canonical);
  }
  if (rng.unit() < noise) {
    auto pick = static_cast<std::size_t>(rng.below(phrase.variants.size()));
    return phrase.variants[pick];
  }
  return phrase.canonical;
}

}  // namespace

SyntheticDataset generate_synthetic(const GeneratorSpec& spec,
                                    std::uint64_t seed) {
  if (spec.lines < 2) {
    throw Error(Errc::InfeasibleSpec, "transfer needs at least 2 lines");
  }
  if (spec.functions_per_line < 3) {
    throw Error(Errc::InfeasibleSpec, "need at least 3 functions per line");
  }
  if (spec.rules < 1) {
    throw Error(Errc::InfeasibleSpec, "need at least 1 latent rule");
  }
  if (spec.noise < 0.0 || spec.noise > 1.0) {
    throw Error(Errc::InfeasibleSpec, "noise must lie in [0, 1]");
  }

  SyntheticDataset dataset;
  dataset.ontology = vocabulary_ontology();
  std::vector<Rule> rules = make_rules(spec);
  util::Rng rng(util::mix(seed, 0x5u));

  const int F = spec.functions_per_line;
  const int target_index = spec.lines - 1;

  for (int line = 0; line < spec.lines; ++line) {
    const std::string line_id = "line-" + std::to_string(line + 1);
    const std::string object =
        kLineObjects[static_cast<std::size_t>(line) % kLineObjects.size()];
    const bool is_target = line == target_index;
    if (is_target) dataset.target_line = line_id;

    Worksheet ws;
    ws.line_id = line_id;
    std::vector<std::string> functions;
    for (int f = 0; f < F; ++f) {
      functions.push_back(
          object + " " +
          kActions[static_cast<std::size_t>(f) % kActions.size()]);
    }

    auto add_record = [&](int pos, const std::string& failure,
                          const std::string& cause,
                          const std::string& effect) {
      FmeaRecord rec;
      rec.line_id = line_id;
      rec.order_index = pos;
      rec.function_text = functions[static_cast<std::size_t>(pos)];
      rec.failure_text = failure;
      rec.cause_text = cause;
      rec.effect_text = effect;
      ws.records.push_back(std::move(rec));
    };

    // Filler records pin the process order. They share one line-local
    // cause so routine findings occupy a single candidate slot.
    for (int f = 0; f < F; ++f) {
      add_record(f, object + " station " + std::to_string(f) + " anomaly",
                 "scheduled maintenance finding " + line_id, "downtime");
    }

    for (std::size_t r = 0; r < rules.size(); ++r) {
      const Rule& rule = rules[r];
      const std::string phrase_a =
          pick_phrase(cause_phrase_a(rule), spec.noise, rng, &dataset.aliases);
      const std::string phrase_b =
          pick_phrase(cause_phrase_b(rule), spec.noise, rng, &dataset.aliases);
      const std::string phrase_d =
          pick_phrase(decoy_phrase(rule), spec.noise, rng, &dataset.aliases);

      if (!is_target) {
        // Precursor introduces cause A one step upstream of the failure.
        add_record(rule.fail_pos - 1,
                   object + " " + rule.cause_state_a + " warning", phrase_a,
                   "minor rework");
        // Main records: the rule failure with both causes. Cause A reuses
        // the upstream node, cause B anchors at the failing function.
        add_record(rule.fail_pos, object + " " + rule.fail_state, phrase_a,
                   object + " defect");
        add_record(rule.fail_pos, object + " " + rule.fail_state, phrase_b,
                   object + " defect");
      }
      // The decoy stays on every line, the target included: a same-state
      // cause anchored downstream of the failure.
      add_record(rule.fail_pos + 1, object + " " + rule.fail_state + " recheck",
                 phrase_d, "false alarm");

      if (is_target) {
        Scenario scenario;
        scenario.query.line_id = line_id;
        scenario.query.function =
            functions[static_cast<std::size_t>(rule.fail_pos)];
        scenario.query.description = object + " " + rule.fail_state;
        scenario.truth = {cause_phrase_a(rule).canonical,
                          cause_phrase_b(rule).canonical};
        dataset.scenarios.push_back(std::move(scenario));
      }
    }
    dataset.worksheets.push_back(std::move(ws));
  }
  return dataset;
}

}  // namespace fmea
