#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fmea {

// The six concept classes. Action/State/Component/Parameter form the
// manufacturing ontology; Function/Failure form the FMEA ontology.
enum class ConceptClass { Action, State, Component, Parameter, Function, Failure };

inline constexpr std::array<ConceptClass, 6> kAllClasses = {
    ConceptClass::Action,    ConceptClass::State,
    ConceptClass::Component, ConceptClass::Parameter,
    ConceptClass::Function,  ConceptClass::Failure};

inline constexpr std::array<ConceptClass, 4> kManufacturingClasses = {
    ConceptClass::Action, ConceptClass::State, ConceptClass::Component,
    ConceptClass::Parameter};

char class_prefix(ConceptClass cls);          // A S C P F X
const char* class_name(ConceptClass cls);     // "Action" ...
ConceptClass class_from_prefix(char prefix);  // throws MalformedEntry
ConceptClass class_from_name(const std::string& name);

// Class-prefixed identifier, rendered as e.g. "A-010".
struct ConceptId {
  ConceptClass cls = ConceptClass::Action;
  int number = 0;  // 1..999, zero-padded to three digits

  std::string str() const;
  static ConceptId parse(const std::string& text);  // throws MalformedEntry
  static bool looks_like(const std::string& text);

  auto operator<=>(const ConceptId&) const = default;
};

struct OntologyEntry {
  ConceptId id;
  std::string label;
  std::optional<ConceptId> parent;  // same class, acyclic chain

  ConceptClass cls() const { return id.cls; }
};

// Concept registry with per-class subtrees. Immutable after load except
// through add_new_entry; callers serialize mutation.
class Ontology {
 public:
  Ontology() = default;

  // Inserts one entry, keeping indices consistent. Throws DuplicateId,
  // DanglingParent, ClassMismatch, EmptyLabel.
  void insert(const OntologyEntry& entry);

  bool contains(const ConceptId& id) const;
  const OntologyEntry& at(const ConceptId& id) const;  // throws UnknownConcept

  // All entries of one class in ascending id order.
  std::vector<OntologyEntry> subtree(ConceptClass cls) const;

  std::size_t count(ConceptClass cls) const;
  std::size_t size() const { return by_id_.size(); }

  // Allocates the smallest unused ordinal in the parent's class and
  // inserts a child entry there. Throws UnknownParent, EmptyLabel.
  ConceptId add_new_entry(const ConceptId& parent, const std::string& label);

  const std::map<ConceptId, OntologyEntry>& entries() const { return by_id_; }

  bool operator==(const Ontology& other) const;

 private:
  void check_parent_cycle(const OntologyEntry& entry) const;

  std::map<ConceptId, OntologyEntry> by_id_;
  std::map<ConceptClass, std::vector<ConceptId>> by_class_;
};

// Ontology file format: UTF-8 text, one entry per line,
// `id<TAB>class<TAB>label<TAB>parent_or_-`, '#' comment lines ignored.
Ontology load_ontology(const std::string& path);
Ontology parse_ontology(const std::string& content);
std::string serialize_ontology(const Ontology& ontology);  // sorted by id
void save_ontology(const Ontology& ontology, const std::string& path);

}  // namespace fmea
