#include "graphrag/ontology.hpp"

#include "graphrag/error.hpp"
#include "graphrag/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace graphrag::ontology {

using nlohmann::json;

namespace {

std::string fold(std::string_view s) { return text::case_fold(text::trim(s)); }

bool folded_less(const std::string& a, const std::string& b) {
    auto fa = fold(a);
    auto fb = fold(b);
    return fa != fb ? fa < fb : a < b;
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) throw Error(ErrorCode::Parse, where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw Error(ErrorCode::UnknownKey, where + ": unknown key '" + key + "'");
        }
    }
}

std::string required_string(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::Parse, where + ": missing string field '" + key + "'");
    }
    return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) throw Error(ErrorCode::Parse, where + ": field '" + key + "' must be a string");
    return it->get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) {
        throw Error(ErrorCode::Parse, where + ": missing list field '" + key + "'");
    }
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) throw Error(ErrorCode::Parse, where + "." + key + ": entries must be strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

}  // namespace

OntologySchema OntologySchema::build(std::string version, std::vector<EntityTypeDecl> entity_types,
                                     std::vector<RelationDecl> relations) {
    if (entity_types.empty()) throw Error(ErrorCode::EmptySchema, "no entity types declared");
    if (relations.empty()) throw Error(ErrorCode::EmptySchema, "no relations declared");

    OntologySchema s;
    s.version_ = std::move(version);

    std::sort(entity_types.begin(), entity_types.end(),
              [](const auto& a, const auto& b) { return folded_less(a.name, b.name); });
    for (auto& e : entity_types) {
        e.name = std::string(text::trim(e.name));
        if (e.name.empty()) throw Error(ErrorCode::Parse, "entity type with empty name");
        auto key = fold(e.name);
        if (!s.entity_index_.emplace(key, s.entity_types_.size()).second) {
            throw Error(ErrorCode::Parse, "duplicate entity type '" + e.name + "'");
        }
        s.entity_types_.push_back(std::move(e));
    }

    std::sort(relations.begin(), relations.end(),
              [](const auto& a, const auto& b) { return folded_less(a.name, b.name); });
    for (auto& r : relations) {
        r.name = std::string(text::trim(r.name));
        if (r.name.empty()) throw Error(ErrorCode::Parse, "relation with empty name");
        auto canonicalize = [&](std::vector<std::string>& types, const char* side) {
            if (types.empty()) {
                throw Error(ErrorCode::EmptySchema, "relation '" + r.name + "' has an empty " + side);
            }
            std::set<std::string> seen;
            std::vector<std::string> out;
            for (const auto& t : types) {
                auto it = s.entity_index_.find(fold(t));
                if (it == s.entity_index_.end()) {
                    throw Error(ErrorCode::DanglingType, "relation '" + r.name + "' " + side +
                                                             " names undeclared entity type '" + t + "'");
                }
                const auto& declared = s.entity_types_[it->second].name;
                if (seen.insert(declared).second) out.push_back(declared);
            }
            std::sort(out.begin(), out.end(), folded_less);
            types = std::move(out);
        };
        canonicalize(r.domain, "domain");
        canonicalize(r.range, "range");
        if (!s.relation_index_.emplace(fold(r.name), s.relations_.size()).second) {
            throw Error(ErrorCode::Parse, "duplicate relation '" + r.name + "'");
        }
        s.relations_.push_back(std::move(r));
    }
    return s;
}

const EntityTypeDecl* OntologySchema::find_entity_type(std::string_view name) const {
    auto it = entity_index_.find(fold(name));
    return it == entity_index_.end() ? nullptr : &entity_types_[it->second];
}

const RelationDecl* OntologySchema::find_relation(std::string_view name) const {
    auto it = relation_index_.find(fold(name));
    return it == relation_index_.end() ? nullptr : &relations_[it->second];
}

bool OntologySchema::has_descriptions() const noexcept {
    return std::any_of(entity_types_.begin(), entity_types_.end(),
                       [](const auto& e) { return !e.description.empty(); }) ||
           std::any_of(relations_.begin(), relations_.end(),
                       [](const auto& r) { return !r.description.empty(); });
}

OntologySchema load_schema(std::string_view serialized) {
    json doc;
    try {
        doc = json::parse(serialized.begin(), serialized.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("schema: ") + e.what());
    }
    check_keys(doc, {"version", "entity_types", "relations"}, "schema");
    std::string version = required_string(doc, "version", "schema");

    auto et = doc.find("entity_types");
    if (et == doc.end() || !et->is_array()) throw Error(ErrorCode::Parse, "schema: missing list 'entity_types'");
    std::vector<EntityTypeDecl> entity_types;
    for (std::size_t i = 0; i < et->size(); ++i) {
        std::string where = "entity_types[" + std::to_string(i) + "]";
        const auto& obj = (*et)[i];
        check_keys(obj, {"name", "description"}, where);
        entity_types.push_back({required_string(obj, "name", where), optional_string(obj, "description", where)});
    }

    auto rel = doc.find("relations");
    if (rel == doc.end() || !rel->is_array()) throw Error(ErrorCode::Parse, "schema: missing list 'relations'");
    std::vector<RelationDecl> relations;
    for (std::size_t i = 0; i < rel->size(); ++i) {
        std::string where = "relations[" + std::to_string(i) + "]";
        const auto& obj = (*rel)[i];
        check_keys(obj, {"name", "domain", "range", "description"}, where);
        relations.push_back({required_string(obj, "name", where), string_list(obj, "domain", where),
                             string_list(obj, "range", where), optional_string(obj, "description", where)});
    }
    return OntologySchema::build(std::move(version), std::move(entity_types), std::move(relations));
}

std::string serialize_schema(const OntologySchema& schema) {
    json doc;
    doc["version"] = schema.version();
    doc["entity_types"] = json::array();
    for (const auto& e : schema.entity_types()) {
        json obj{{"name", e.name}};
        if (!e.description.empty()) obj["description"] = e.description;
        doc["entity_types"].push_back(std::move(obj));
    }
    doc["relations"] = json::array();
    for (const auto& r : schema.relations()) {
        json obj{{"name", r.name}, {"domain", r.domain}, {"range", r.range}};
        if (!r.description.empty()) obj["description"] = r.description;
        doc["relations"].push_back(std::move(obj));
    }
    return doc.dump(2) + "\n";
}

bool validate_triple(const CandidateTriple& t, const OntologySchema& s) {
    if (text::trim(t.head_name).empty() || text::trim(t.tail_name).empty()) return false;
    const auto* rel = s.find_relation(t.relation);
    if (!rel) return false;
    const auto* head = s.find_entity_type(t.head_type);
    const auto* tail = s.find_entity_type(t.tail_type);
    if (!head || !tail) return false;
    auto contains = [](const std::vector<std::string>& set, const std::string& name) {
        return std::find(set.begin(), set.end(), name) != set.end();
    };
    return contains(rel->domain, head->name) && contains(rel->range, tail->name);
}

namespace {

void softmax_in_place(std::vector<ValidatedTriple>& out) {
    double max_score = -INFINITY;
    for (const auto& v : out) max_score = std::max(max_score, v.triple.lm_score);
    double total = 0.0;
    for (auto& v : out) {
        v.probability = std::exp(v.triple.lm_score - max_score);
        total += v.probability;
    }
    for (auto& v : out) v.probability /= total;
    std::sort(out.begin(), out.end(), [](const ValidatedTriple& a, const ValidatedTriple& b) {
        if (a.probability != b.probability) return a.probability > b.probability;
        return std::tie(a.triple.head_name, a.triple.relation, a.triple.tail_name) <
               std::tie(b.triple.head_name, b.triple.relation, b.triple.tail_name);
    });
}

}  // namespace

std::optional<std::vector<ValidatedTriple>> renormalize_candidates(const std::vector<CandidateTriple>& candidates,
                                                                   const OntologySchema& s) {
    std::vector<ValidatedTriple> out;
    for (const auto& c : candidates) {
        if (!validate_triple(c, s)) continue;
        ValidatedTriple v{c, 0.0};
        v.triple.relation = s.find_relation(c.relation)->name;
        v.triple.head_type = s.find_entity_type(c.head_type)->name;
        v.triple.tail_type = s.find_entity_type(c.tail_type)->name;
        out.push_back(std::move(v));
    }
    if (out.empty()) return std::nullopt;
    softmax_in_place(out);
    return out;
}

std::vector<ValidatedTriple> normalize_unconstrained(const std::vector<CandidateTriple>& candidates) {
    std::vector<ValidatedTriple> out;
    for (const auto& c : candidates) out.push_back({c, 0.0});
    if (!out.empty()) softmax_in_place(out);
    return out;
}

std::string schema_to_prompt(const OntologySchema& s) {
    std::ostringstream os;
    os << "Extract knowledge triples from the text using ONLY the schema below.\n\n";
    os << "Entity types:\n";
    for (const auto& e : s.entity_types()) os << "- " << e.name << "\n";
    os << "\nRelations (head type -> tail type):\n";
    for (const auto& r : s.relations()) {
        os << r.name << ": " << join(r.domain, " | ") << " -> " << join(r.range, " | ") << "\n";
    }
    if (s.has_descriptions()) {
        os << "\nDescriptions:\n";
        for (const auto& e : s.entity_types()) {
            if (!e.description.empty()) os << "- " << e.name << ": " << e.description << "\n";
        }
        for (const auto& r : s.relations()) {
            if (!r.description.empty()) os << "- " << r.name << ": " << r.description << "\n";
        }
    }
    os << "\nOutput one triple per line in the form:\n"
       << "(head | head_type | relation | tail | tail_type | confidence)\n"
       << "Entity attributes (such as year or location) may be given one per line as:\n"
       << "{entity | entity_type | attribute | value}\n"
       << "Do not output triples whose relation or entity types are not listed above.\n";
    return os.str();
}

}  // namespace graphrag::ontology
