#include "fmea/ontology.hpp"

#include <algorithm>
#include <set>

#include "fmea/error.hpp"
#include "fmea/util.hpp"

namespace fmea {

char class_prefix(ConceptClass cls) {
  switch (cls) {
    case ConceptClass::Action: return 'A';
    case ConceptClass::State: return 'S';
    case ConceptClass::Component: return 'C';
    case ConceptClass::Parameter: return 'P';
    case ConceptClass::Function: return 'F';
    case ConceptClass::Failure: return 'X';
  }
  return '?';
}

const char* class_name(ConceptClass cls) {
  switch (cls) {
    case ConceptClass::Action: return "Action";
    case ConceptClass::State: return "State";
    case ConceptClass::Component: return "Component";
    case ConceptClass::Parameter: return "Parameter";
    case ConceptClass::Function: return "Function";
    case ConceptClass::Failure: return "Failure";
  }
  return "?";
}

ConceptClass class_from_prefix(char prefix) {
  switch (prefix) {
    case 'A': return ConceptClass::Action;
    case 'S': return ConceptClass::State;
    case 'C': return ConceptClass::Component;
    case 'P': return ConceptClass::Parameter;
    case 'F': return ConceptClass::Function;
    case 'X': return ConceptClass::Failure;
  }
  throw Error(Errc::MalformedEntry,
              std::string("unknown class prefix '") + prefix + "'");
}

ConceptClass class_from_name(const std::string& name) {
  for (ConceptClass cls : kAllClasses) {
    if (name == class_name(cls)) return cls;
  }
  throw Error(Errc::MalformedEntry, "unknown class name '" + name + "'");
}

std::string ConceptId::str() const {
  std::string out;
  out.push_back(class_prefix(cls));
  out.push_back('-');
  out.push_back(static_cast<char>('0' + number / 100 % 10));
  out.push_back(static_cast<char>('0' + number / 10 % 10));
  out.push_back(static_cast<char>('0' + number % 10));
  return out;
}

bool ConceptId::looks_like(const std::string& text) {
  if (text.size() != 5 || text[1] != '-') return false;
  if (std::string("ASCPFX").find(text[0]) == std::string::npos) return false;
  return std::isdigit(static_cast<unsigned char>(text[2])) &&
         std::isdigit(static_cast<unsigned char>(text[3])) &&
         std::isdigit(static_cast<unsigned char>(text[4]));
}

ConceptId ConceptId::parse(const std::string& text) {
  if (!looks_like(text)) {
    throw Error(Errc::MalformedEntry, "bad concept id '" + text + "'");
  }
  ConceptId id;
  id.cls = class_from_prefix(text[0]);
  id.number = (text[2] - '0') * 100 + (text[3] - '0') * 10 + (text[4] - '0');
  return id;
}

void Ontology::check_parent_cycle(const OntologyEntry& entry) const {
  std::set<ConceptId> seen{entry.id};
  std::optional<ConceptId> cursor = entry.parent;
  while (cursor) {
    if (seen.count(*cursor)) {
      throw Error(Errc::MalformedEntry,
                  "parent cycle through " + entry.id.str());
    }
    seen.insert(*cursor);
    auto it = by_id_.find(*cursor);
    if (it == by_id_.end()) break;  // dangling parents are caught elsewhere
    cursor = it->second.parent;
  }
}

void Ontology::insert(const OntologyEntry& entry) {
  if (util::trim(entry.label).empty()) {
    throw Error(Errc::EmptyLabel, "entry " + entry.id.str());
  }
  if (by_id_.count(entry.id)) {
    throw Error(Errc::DuplicateId, entry.id.str());
  }
  if (entry.parent) {
    if (entry.parent->cls != entry.id.cls) {
      throw Error(Errc::ClassMismatch, entry.id.str() + " has parent " +
                                           entry.parent->str() +
                                           " of a different class");
    }
    if (!by_id_.count(*entry.parent)) {
      throw Error(Errc::DanglingParent,
                  entry.id.str() + " -> " + entry.parent->str());
    }
    check_parent_cycle(entry);
  }
  by_id_[entry.id] = entry;
  auto& ids = by_class_[entry.id.cls];
  ids.insert(std::lower_bound(ids.begin(), ids.end(), entry.id), entry.id);
}

bool Ontology::contains(const ConceptId& id) const {
  return by_id_.count(id) != 0;
}

const OntologyEntry& Ontology::at(const ConceptId& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw Error(Errc::UnknownConcept, id.str());
  }
  return it->second;
}

std::vector<OntologyEntry> Ontology::subtree(ConceptClass cls) const {
  std::vector<OntologyEntry> out;
  auto it = by_class_.find(cls);
  if (it == by_class_.end()) return out;
  out.reserve(it->second.size());
  for (const ConceptId& id : it->second) out.push_back(by_id_.at(id));
  return out;
}

std::size_t Ontology::count(ConceptClass cls) const {
  auto it = by_class_.find(cls);
  return it == by_class_.end() ? 0 : it->second.size();
}

ConceptId Ontology::add_new_entry(const ConceptId& parent,
                                  const std::string& label) {
  if (util::trim(label).empty()) {
    throw Error(Errc::EmptyLabel, "new entry under " + parent.str());
  }
  if (!by_id_.count(parent)) {
    throw Error(Errc::UnknownParent, parent.str());
  }
  // Smallest unused ordinal in the parent's class; deterministic across
  // replays regardless of deletion history.
  const auto& ids = by_class_[parent.cls];
  int ordinal = 1;
  for (const ConceptId& id : ids) {
    if (id.number == ordinal) {
      ++ordinal;
    } else if (id.number > ordinal) {
      break;
    }
  }
  if (ordinal > 999) {
    throw Error(Errc::MalformedEntry,
                std::string("ordinal space exhausted for class ") +
                    class_name(parent.cls));
  }
  OntologyEntry entry;
  entry.id = ConceptId{parent.cls, ordinal};
  entry.label = util::trim(label);
  entry.parent = parent;
  insert(entry);
  return entry.id;
}

bool Ontology::operator==(const Ontology& other) const {
  if (by_id_.size() != other.by_id_.size()) return false;
  for (const auto& [id, entry] : by_id_) {
    auto it = other.by_id_.find(id);
    if (it == other.by_id_.end()) return false;
    if (it->second.label != entry.label || it->second.parent != entry.parent)
      return false;
  }
  return true;
}

Ontology parse_ontology(const std::string& content) {
  if (!util::is_valid_utf8(content)) {
    throw Error(Errc::EncodingError, "ontology file is not valid UTF-8");
  }
  struct PendingEntry {
    OntologyEntry entry;
    int line_number;
  };
  std::vector<PendingEntry> pending;
  int line_number = 0;
  for (const std::string& raw_line : util::split(content, '\n')) {
    ++line_number;
    std::string line = raw_line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields = util::split(line, '\t');
    if (fields.size() != 4) {
      throw Error(Errc::MalformedEntry,
                  "line " + std::to_string(line_number) + ": expected 4 fields");
    }
    OntologyEntry entry;
    try {
      entry.id = ConceptId::parse(fields[0]);
    } catch (const Error&) {
      throw Error(Errc::MalformedEntry,
                  "line " + std::to_string(line_number) + ": bad id '" +
                      fields[0] + "'");
    }
    ConceptClass declared = class_from_name(fields[1]);
    if (declared != entry.id.cls) {
      throw Error(Errc::ClassMismatch,
                  entry.id.str() + " declared as " + fields[1]);
    }
    entry.label = util::trim(fields[2]);
    if (entry.label.empty()) {
      throw Error(Errc::MalformedEntry,
                  "line " + std::to_string(line_number) + ": empty label");
    }
    if (fields[3] != "-") {
      entry.parent = ConceptId::parse(fields[3]);
      if (entry.parent->cls != entry.id.cls) {
        throw Error(Errc::ClassMismatch, entry.id.str() + " has parent " +
                                             entry.parent->str() +
                                             " of a different class");
      }
    }
    pending.push_back({entry, line_number});
  }
  // Two passes so parents may be declared after their children.
  Ontology ontology;
  std::set<ConceptId> all_ids;
  for (const auto& p : pending) {
    if (!all_ids.insert(p.entry.id).second) {
      throw Error(Errc::DuplicateId, p.entry.id.str());
    }
  }
  for (const auto& p : pending) {
    if (p.entry.parent && !all_ids.count(*p.entry.parent)) {
      throw Error(Errc::DanglingParent,
                  p.entry.id.str() + " -> " + p.entry.parent->str());
    }
  }
  // Insert parents before children so Ontology::insert sees a consistent
  // registry at each step.
  std::set<ConceptId> inserted;
  std::vector<PendingEntry> queue = pending;
  while (!queue.empty()) {
    std::vector<PendingEntry> deferred;
    bool progressed = false;
    for (const auto& p : queue) {
      if (!p.entry.parent || inserted.count(*p.entry.parent)) {
        ontology.insert(p.entry);
        inserted.insert(p.entry.id);
        progressed = true;
      } else {
        deferred.push_back(p);
      }
    }
    if (!progressed) {
      throw Error(Errc::MalformedEntry,
                  "parent cycle involving " + deferred.front().entry.id.str());
    }
    queue = std::move(deferred);
  }
  return ontology;
}

Ontology load_ontology(const std::string& path) {
  return parse_ontology(util::read_file(path));
}

std::string serialize_ontology(const Ontology& ontology) {
  std::string out;
  for (const auto& [id, entry] : ontology.entries()) {
    out += id.str();
    out += '\t';
    out += class_name(id.cls);
    out += '\t';
    out += entry.label;
    out += '\t';
    out += entry.parent ? entry.parent->str() : "-";
    out += '\n';
  }
  return out;
}

void save_ontology(const Ontology& ontology, const std::string& path) {
  util::write_file(path, serialize_ontology(ontology));
}

}  // namespace fmea
