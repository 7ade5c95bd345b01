#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fmea {

// One parsed worksheet row. Cause cells holding several causes separated
// by ';' or newlines fan out into one record per cause.
struct FmeaRecord {
  std::string line_id;
  int order_index = 0;  // 0-based position of the function within its line
  std::string function_text;
  std::string failure_text;
  std::string cause_text;
  std::string effect_text;  // may be empty
  std::optional<std::string> recommendation_text;

  bool operator==(const FmeaRecord&) const = default;
};

struct Worksheet {
  std::string line_id;
  std::vector<FmeaRecord> records;  // file order
};

// The line's function chain: deduplicated labels in first-occurrence
// order plus the adjacent precedes pairs.
struct ProcessFlow {
  std::string line_id;
  std::vector<std::string> functions;
  std::vector<std::pair<std::string, std::string>> precedes_pairs;

  std::optional<int> position_of(const std::string& function) const;
};

// Worksheet CSV: header `function,failure,cause,effect,recommendation[,order]`,
// RFC 4180 quoting, UTF-8. Throws MissingColumn, EmptyMandatoryCell,
// EncodingError.
Worksheet parse_worksheet(const std::string& path, const std::string& line_id);
Worksheet parse_worksheet_text(const std::string& content,
                               const std::string& line_id);

ProcessFlow build_process_flow(const Worksheet& ws);

// Minimal RFC 4180 reader; exposed for tests.
std::vector<std::vector<std::string>> parse_csv(const std::string& content);

// Serializes records back to worksheet CSV (with an explicit order
// column); parse_worksheet_text of the result reproduces the worksheet.
std::string worksheet_csv(const Worksheet& ws);

}  // namespace fmea
