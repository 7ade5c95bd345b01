#include "fmea/ingest.hpp"

#include <algorithm>
#include <map>

#include "fmea/error.hpp"
#include "fmea/util.hpp"

namespace fmea {

std::vector<std::vector<std::string>> parse_csv(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  std::size_t i = 0;
  const std::size_t n = content.size();
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(row);
    row.clear();
    row_started = false;
  };
  while (i < n) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_started = true;
        ++i;
        break;
      case ',':
        end_field();
        row_started = true;
        ++i;
        break;
      case '\r':
        if (i + 1 < n && content[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_row();
        ++i;
        break;
      default:
        field.push_back(c);
        row_started = true;
        ++i;
        break;
    }
  }
  if (row_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

namespace {

int find_column(const std::vector<std::string>& header,
                const std::string& name, bool required) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (util::normalize(header[i]) == name) return static_cast<int>(i);
  }
  if (required) throw Error(Errc::MissingColumn, name);
  return -1;
}

std::string cell(const std::vector<std::string>& row, int col) {
  if (col < 0 || col >= static_cast<int>(row.size())) return {};
  return util::trim(row[static_cast<std::size_t>(col)]);
}

struct RawRow {
  int row_number;
  std::string function_text;
  std::string failure_text;
  std::vector<std::string> causes;
  std::string effect_text;
  std::string recommendation;
  long explicit_order = -1;
};

}  // namespace

Worksheet parse_worksheet_text(const std::string& content,
                               const std::string& line_id) {
  if (!util::is_valid_utf8(content)) {
    throw Error(Errc::EncodingError, "worksheet is not valid UTF-8");
  }
  std::vector<std::vector<std::string>> rows = parse_csv(content);
  if (rows.empty()) {
    throw Error(Errc::MissingColumn, "function (file has no header)");
  }
  const auto& header = rows.front();
  const int col_function = find_column(header, "function", true);
  const int col_failure = find_column(header, "failure", true);
  const int col_cause = find_column(header, "cause", true);
  const int col_effect = find_column(header, "effect", true);
  const int col_recommendation = find_column(header, "recommendation", true);
  const int col_order = find_column(header, "order", false);

  std::vector<RawRow> raw;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && util::trim(row[0]).empty()) continue;  // blank line
    RawRow rr;
    rr.row_number = static_cast<int>(r) + 1;
    auto mandatory = [&](int col, const char* name) {
      std::string value = cell(row, col);
      if (value.empty()) {
        throw Error(Errc::EmptyMandatoryCell,
                    "row " + std::to_string(rr.row_number) + ", column " + name);
      }
      return value;
    };
    rr.function_text = mandatory(col_function, "function");
    rr.failure_text = mandatory(col_failure, "failure");
    // A cause cell may hold several causes split by ';' or newlines; each
    // becomes its own record.
    rr.causes = util::split_any_trimmed(mandatory(col_cause, "cause"), ";\n");
    if (rr.causes.empty()) {
      throw Error(Errc::EmptyMandatoryCell,
                  "row " + std::to_string(rr.row_number) + ", column cause");
    }
    rr.effect_text = cell(row, col_effect);
    rr.recommendation = cell(row, col_recommendation);
    if (col_order >= 0) {
      std::string order_text = cell(row, col_order);
      if (!order_text.empty()) {
        try {
          rr.explicit_order = std::stol(order_text);
        } catch (const std::exception&) {
          throw Error(Errc::EmptyMandatoryCell,
                      "row " + std::to_string(rr.row_number) +
                          ", column order (not an integer)");
        }
        if (rr.explicit_order < 0) {
          throw Error(Errc::EmptyMandatoryCell,
                      "row " + std::to_string(rr.row_number) +
                          ", column order (negative)");
        }
      }
    }
    raw.push_back(std::move(rr));
  }

  // order_index is the 0-based rank of the function within its line: rank
  // of (explicit order value if given, else first-occurrence position).
  struct FunctionOrder {
    long key;
    std::size_t first_seen;
  };
  std::map<std::string, FunctionOrder> function_order;
  for (const RawRow& rr : raw) {
    auto it = function_order.find(rr.function_text);
    if (it == function_order.end()) {
      long key = rr.explicit_order >= 0
                     ? rr.explicit_order
                     : static_cast<long>(function_order.size());
      function_order[rr.function_text] = {key, function_order.size()};
    } else if (rr.explicit_order >= 0 && it->second.key != rr.explicit_order) {
      // Keep the first declaration; repeated functions stay at one position.
    }
  }
  std::vector<std::pair<std::string, FunctionOrder>> ordered(
      function_order.begin(), function_order.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second.key != b.second.key) return a.second.key < b.second.key;
    return a.second.first_seen < b.second.first_seen;
  });
  std::map<std::string, int> rank;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    rank[ordered[i].first] = static_cast<int>(i);
  }

  Worksheet ws;
  ws.line_id = line_id;
  for (const RawRow& rr : raw) {
    for (const std::string& cause : rr.causes) {
      FmeaRecord rec;
      rec.line_id = line_id;
      rec.order_index = rank.at(rr.function_text);
      rec.function_text = rr.function_text;
      rec.failure_text = rr.failure_text;
      rec.cause_text = cause;
      rec.effect_text = rr.effect_text;
      if (!rr.recommendation.empty()) rec.recommendation_text = rr.recommendation;
      ws.records.push_back(std::move(rec));
    }
  }
  return ws;
}

Worksheet parse_worksheet(const std::string& path, const std::string& line_id) {
  return parse_worksheet_text(util::read_file(path), line_id);
}

namespace {

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace

std::string worksheet_csv(const Worksheet& ws) {
  std::string out = "function,failure,cause,effect,recommendation,order\n";
  for (const FmeaRecord& rec : ws.records) {
    out += csv_quote(rec.function_text);
    out += ',';
    out += csv_quote(rec.failure_text);
    out += ',';
    out += csv_quote(rec.cause_text);
    out += ',';
    out += csv_quote(rec.effect_text);
    out += ',';
    out += csv_quote(rec.recommendation_text.value_or(""));
    out += ',';
    out += std::to_string(rec.order_index);
    out += '\n';
  }
  return out;
}

std::optional<int> ProcessFlow::position_of(const std::string& function) const {
  for (std::size_t i = 0; i < functions.size(); ++i) {
    if (functions[i] == function) return static_cast<int>(i);
  }
  return std::nullopt;
}

ProcessFlow build_process_flow(const Worksheet& ws) {
  ProcessFlow flow;
  flow.line_id = ws.line_id;
  // Functions deduplicated by first occurrence, then ordered by the ranks
  // parse_worksheet assigned.
  std::vector<std::pair<int, std::string>> seen;
  for (const FmeaRecord& rec : ws.records) {
    bool present = std::any_of(seen.begin(), seen.end(), [&](const auto& p) {
      return p.second == rec.function_text;
    });
    if (!present) seen.emplace_back(rec.order_index, rec.function_text);
  }
  std::stable_sort(seen.begin(), seen.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [index, label] : seen) {
    (void)index;
    flow.functions.push_back(label);
  }
  for (std::size_t i = 0; i + 1 < flow.functions.size(); ++i) {
    flow.precedes_pairs.emplace_back(flow.functions[i], flow.functions[i + 1]);
  }
  return flow;
}

}  // namespace fmea
