#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace graphrag::ontology {

struct EntityTypeDecl {
    std::string name;
    std::string description;

    bool operator==(const EntityTypeDecl&) const = default;
};

// Phi(r): the admissible head (domain) and tail (range) entity types of one relation.
struct RelationDecl {
    std::string name;
    std::vector<std::string> domain;
    std::vector<std::string> range;
    std::string description;

    bool operator==(const RelationDecl&) const = default;
};

// Constraint space over entity types, relation types and per-relation
// domain/range. Immutable once built; lookups are case-insensitive on type
// and relation names. Declarations are held in canonical (case-folded name)
// order so that equal schemas compare and render identically.
class OntologySchema {
public:
    // Throws Error{EmptySchema | DanglingType | Parse} when an invariant fails.
    static OntologySchema build(std::string version, std::vector<EntityTypeDecl> entity_types,
                                std::vector<RelationDecl> relations);

    const std::string& version() const noexcept { return version_; }
    const std::vector<EntityTypeDecl>& entity_types() const noexcept { return entity_types_; }
    const std::vector<RelationDecl>& relations() const noexcept { return relations_; }

    const EntityTypeDecl* find_entity_type(std::string_view name) const;
    const RelationDecl* find_relation(std::string_view name) const;

    bool has_descriptions() const noexcept;

    bool operator==(const OntologySchema& other) const {
        return version_ == other.version_ && entity_types_ == other.entity_types_ &&
               relations_ == other.relations_;
    }

private:
    OntologySchema() = default;

    std::string version_;
    std::vector<EntityTypeDecl> entity_types_;
    std::vector<RelationDecl> relations_;
    std::unordered_map<std::string, std::size_t> entity_index_;
    std::unordered_map<std::string, std::size_t> relation_index_;
};

struct CandidateTriple {
    std::string head_name;
    std::string head_type;
    std::string relation;
    std::string tail_name;
    std::string tail_type;
    double lm_score = 0.0;
    std::string source_chunk;

    bool operator==(const CandidateTriple&) const = default;
};

// A schema-valid triple with its constraint-renormalized probability. Type
// and relation names are rewritten to the schema's declared spelling.
struct ValidatedTriple {
    CandidateTriple triple;
    double probability = 0.0;
};

// Parses the JSON schema file format:
//   {"version": "...",
//    "entity_types": [{"name": "...", "description": "..."}],
//    "relations": [{"name": "...", "domain": [...], "range": [...], "description": "..."}]}
// Unknown keys are rejected.
OntologySchema load_schema(std::string_view serialized);

std::string serialize_schema(const OntologySchema& schema);

// Schema indicator: relation declared, head type in its domain, tail type in its range.
bool validate_triple(const CandidateTriple& t, const OntologySchema& s);

// Softmax of lm_score restricted to schema-valid candidates. Output sorted by
// descending probability, ties by (head_name, relation, tail_name).
// Returns nullopt when no candidate is valid.
std::optional<std::vector<ValidatedTriple>> renormalize_candidates(
    const std::vector<CandidateTriple>& candidates, const OntologySchema& s);

// Same softmax without the schema indicator (every candidate survives). Used
// when schema enforcement is switched off for ablation runs.
std::vector<ValidatedTriple> normalize_unconstrained(const std::vector<CandidateTriple>& candidates);

// Deterministic extraction-prompt fragment describing the schema and the
// required triple output protocol.
std::string schema_to_prompt(const OntologySchema& s);

}  // namespace graphrag::ontology
