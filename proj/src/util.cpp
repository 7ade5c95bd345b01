#include "fmea/util.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fmea/error.hpp"

namespace fmea {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedEntry: return "MalformedEntry";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::DanglingParent: return "DanglingParent";
    case Errc::ClassMismatch: return "ClassMismatch";
    case Errc::UnknownParent: return "UnknownParent";
    case Errc::EmptyLabel: return "EmptyLabel";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::EmptyMandatoryCell: return "EmptyMandatoryCell";
    case Errc::EncodingError: return "EncodingError";
    case Errc::LlmUnavailable: return "LlmUnavailable";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::DuplicateSlots: return "DuplicateSlots";
    case Errc::IdNotInCandidates: return "IdNotInCandidates";
    case Errc::ParentNotInCandidates: return "ParentNotInCandidates";
    case Errc::NewForbidden: return "NewForbidden";
    case Errc::RowMismatch: return "RowMismatch";
    case Errc::UnknownConcept: return "UnknownConcept";
    case Errc::MalformedGraphFile: return "MalformedGraphFile";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::EmptyText: return "EmptyText";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::NoTrainableTriples: return "NoTrainableTriples";
    case Errc::FunctionNotFound: return "FunctionNotFound";
    case Errc::NoEntitiesExtracted: return "NoEntitiesExtracted";
    case Errc::AlignmentMismatch: return "AlignmentMismatch";
    case Errc::EmptyTruth: return "EmptyTruth";
    case Errc::InfeasibleSpec: return "InfeasibleSpec";
    case Errc::UsageError: return "UsageError";
  }
  return "UnknownError";
}

}  // namespace fmea

namespace fmea::util {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
         c == '\v';
}

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ascii_lower(c));
  }
  return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      break;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::vector<std::string> split_any_trimmed(std::string_view text,
                                           std::string_view seps) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (seps.find(c) != std::string_view::npos) {
      std::string piece = trim(current);
      if (!piece.empty()) parts.push_back(piece);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  std::string piece = trim(current);
  if (!piece.empty()) parts.push_back(piece);
  return parts;
}

bool is_valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  const std::size_t n = bytes.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(bytes[i]);
    std::size_t len;
    if (c < 0x80) {
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      if (c < 0xC2) return false;  // overlong
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      if (c > 0xF4) return false;  // beyond U+10FFFF
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(bytes[i + k]) & 0xC0) != 0x80)
        return false;
    }
    i += len;
  }
  return true;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string fnv1a64_hex(std::string_view bytes) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

namespace {

std::set<std::string> trigrams(std::string_view s) {
  std::set<std::string> grams;
  if (s.empty()) return grams;
  if (s.size() < 3) {
    grams.insert(std::string(s));
    return grams;
  }
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) {
    grams.insert(std::string(s.substr(i, 3)));
  }
  return grams;
}

}  // namespace

double trigram_jaccard(std::string_view a, std::string_view b) {
  std::set<std::string> ga = trigrams(a);
  std::set<std::string> gb = trigrams(b);
  if (ga.empty() || gb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& g : ga) {
    if (gb.count(g)) ++inter;
  }
  std::size_t uni = ga.size() + gb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection sampling keeps the draw unbiased and reproducible.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t value;
  do {
    value = engine_();
  } while (value >= limit);
  return value % bound;
}

double Rng::unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_normal_) {
    double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  double u1;
  do {
    u1 = unit();
  } while (u1 <= 0.0);
  double u2 = unit();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * M_PI * u2;
  spare_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace fmea::util
