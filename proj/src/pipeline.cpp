#include "fmea/pipeline.hpp"

#include "fmea/util.hpp"

namespace fmea {

std::vector<ExtractionRow> empty_extraction_rows(const Worksheet& ws) {
  std::vector<ExtractionRow> rows;
  for (std::size_t i = 0; i < ws.records.size(); ++i) {
    const FmeaRecord& rec = ws.records[i];
    const std::pair<RecordField, const std::string*> fields[] = {
        {RecordField::Function, &rec.function_text},
        {RecordField::Failure, &rec.failure_text},
        {RecordField::Cause, &rec.cause_text},
        {RecordField::Effect, &rec.effect_text},
    };
    for (const auto& [field, sentence] : fields) {
      if (util::trim(*sentence).empty()) continue;
      ExtractionRow row;
      row.record_index = i;
      row.field = field;
      row.sentence = *sentence;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

KnowledgeGraph build_line_graph(const Worksheet& ws, Ontology& ontology,
                                LlmClient& llm, const BuildOptions& options) {
  ProcessFlow flow = build_process_flow(ws);
  std::vector<ExtractionRow> rows =
      options.conceptualization
          ? extract_worksheet(ws, ontology, llm, options.shortlist_k,
                              options.policy)
          : empty_extraction_rows(ws);
  if (options.conceptualization && options.policy == ErrorPolicy::SkipAndLog &&
      rows.size() != empty_extraction_rows(ws).size()) {
    // Skipped rows would break the one-to-one row contract; fall back to
    // empty rows for the skipped fields.
    std::vector<ExtractionRow> full = empty_extraction_rows(ws);
    std::size_t cursor = 0;
    for (ExtractionRow& row : full) {
      if (cursor < rows.size() &&
          rows[cursor].record_index == row.record_index &&
          rows[cursor].field == row.field) {
        row = rows[cursor++];
      }
    }
    rows = std::move(full);
  }
  return instantiate_graph(ws, rows, flow, ontology);
}

KnowledgeGraph build_kg(const std::vector<Worksheet>& worksheets,
                        Ontology& ontology, LlmClient& llm,
                        const BuildOptions& options) {
  std::vector<KnowledgeGraph> graphs;
  graphs.reserve(worksheets.size());
  for (const Worksheet& ws : worksheets) {
    graphs.push_back(build_line_graph(ws, ontology, llm, options));
  }
  return merge_graphs(graphs);
}

}  // namespace fmea
