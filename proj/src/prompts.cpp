#include "fmea/prompts.hpp"

#include <stdexcept>

namespace fmea::prompts {

const char* const kSlotExtractionSystem =
    R"(You are a slot extractor familiar with terminology used in manufacturing sites.
Given a short Japanese description, extract the primary terms for Action, State, and Object (= Component, Parameter) without normalization.
The output must always be in JSON format. Use null when not applicable.
Do not assign the same word to multiple slots (no duplicate assignments).

Decision rules (important):
- Expressions ending with "function / performance / parameter / setting value / characteristic" are prioritized as Parameter.
- Equipment or device names (e.g., robot, sensor, conveyor, chuck, cylinder) are classified as Component.
- Terms such as "decrease / increase / excessive / insufficient / degradation / fracture / misalignment / slip / contamination / scratch / foreign substance adhesion / omission" are classified as State.
- Operational or processing terms (e.g., conveyance, gripping, discharge, inspection, cutting, bonding, etc.) are classified as Action.)";

const char* const kSlotExtractionUser =
    R"(Description: {sentence}
Respond strictly following the JSON schema below:
{
 "action": {"text": string|null},
 "state": {"text": string|null},
 "object": {
   "component": {"text": string|null},
   "parameter": {"text": string|null}
 }
})";

const char* const kSelectIdSystem =
    R"(You are a classifier for manufacturing process ontology.
You must always return the output in JSON format: {"element": "<ID or NEW>"}.
Select exactly one most appropriate ID from the candidates.
Do not include any extra text or explanations in the output.
If none of the candidates are appropriate, return "NEW".
Only when returning "NEW", use the format {"element":"NEW","new_parent":"<parent ID>","new_label":"<proposed label>"}.
Select exactly one closest parent from the candidates as new_parent.)";

const char* const kSelectIdUser =
    R"(Input sentence:
"""{sentence}"""

Candidates (ID -> Label):
{id_to_label_block}

Example output:
{{"element": "A-010"}}  or  {{"element":"NEW","new_parent":"A-002","new_label":"Shooter conveyor"}})";

std::string render(std::string_view tmpl,
                   const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    char c = tmpl[i];
    if (c == '{') {
      if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
        out.push_back('{');
        i += 2;
        continue;
      }
      std::size_t close = tmpl.find('}', i + 1);
      std::string name(tmpl.substr(i + 1, close - i - 1));
      auto it = close == std::string_view::npos ? values.end()
                                                : values.find(name);
      if (it != values.end()) {
        out += it->second;
        i = close + 1;
        continue;
      }
      // Not a known placeholder: literal brace (the JSON schema block).
      out.push_back('{');
      ++i;
      continue;
    }
    if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out.push_back('}');
      i += 2;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

}  // namespace fmea::prompts
