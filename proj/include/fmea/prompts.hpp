#pragma once

#include <map>
#include <string>
#include <string_view>

namespace fmea::prompts {

// Prompt templates used by the two extraction stages. Placeholders of the
// form {name} are substituted by render(); {{ and }} escape literal braces.

extern const char* const kSlotExtractionSystem;
extern const char* const kSlotExtractionUser;

extern const char* const kSelectIdSystem;
extern const char* const kSelectIdUser;

std::string render(std::string_view tmpl,
                   const std::map<std::string, std::string>& values);

}  // namespace fmea::prompts
