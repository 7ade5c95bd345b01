#pragma once

#include <vector>

#include "fmea/extract.hpp"
#include "fmea/kg.hpp"

namespace fmea {

// Extraction rows with every slot absent, one per non-empty record field;
// used for worksheet-level graphs without conceptualization.
std::vector<ExtractionRow> empty_extraction_rows(const Worksheet& ws);

struct BuildOptions {
  bool conceptualization = true;
  int shortlist_k = 5;
  ErrorPolicy policy = ErrorPolicy::Abort;
};

// One line: parse flow, extract (or skip under conceptualization=off),
// instantiate.
KnowledgeGraph build_line_graph(const Worksheet& ws, Ontology& ontology,
                                LlmClient& llm, const BuildOptions& options);

// All lines merged into the unified graph.
KnowledgeGraph build_kg(const std::vector<Worksheet>& worksheets,
                        Ontology& ontology, LlmClient& llm,
                        const BuildOptions& options);

}  // namespace fmea
