#include "graphrag/graph_store.hpp"

#include "graphrag/error.hpp"
#include "graphrag/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <deque>
#include <sstream>

namespace graphrag::graph {

using nlohmann::json;

bool Subgraph::contains(NodeId id) const {
    return std::binary_search(nodes.begin(), nodes.end(), id);
}

KnowledgeGraph::KnowledgeGraph(std::vector<std::string> entity_types, std::string schema_version)
    : entity_types_(std::move(entity_types)), schema_version_(std::move(schema_version)) {}

std::string KnowledgeGraph::resolve_type(std::string_view entity_type) const {
    auto trimmed = text::trim(entity_type);
    if (trimmed.empty()) throw Error(ErrorCode::InvalidEntityType, "empty entity type");
    if (entity_types_.empty()) return std::string(trimmed);
    auto folded = text::case_fold(trimmed);
    for (const auto& t : entity_types_) {
        if (text::case_fold(t) == folded) return t;
    }
    throw Error(ErrorCode::InvalidEntityType, "'" + std::string(trimmed) + "' is not a declared entity type");
}

void KnowledgeGraph::index_name(NodeId id, std::string_view surface) {
    name_index_[text::canonical_name(surface)].insert(id);
}

NodeId KnowledgeGraph::upsert_node(std::string_view name, std::string_view entity_type,
                                   const AttributeMap& attributes, const ChunkId& chunk) {
    auto surface = text::collapse_whitespace(name);
    if (surface.empty()) throw Error(ErrorCode::EmptyInput, "node name is empty");
    auto type = resolve_type(entity_type);
    auto key = std::make_pair(text::canonical_name(surface), text::case_fold(type));

    GraphNode* node = nullptr;
    NodeId id{};
    if (auto it = key_index_.find(key); it != key_index_.end()) {
        id = it->second;
        node = &nodes_[index_of(id)];
        if (surface != node->name && node->aliases.insert(surface).second) index_name(id, surface);
    } else {
        id = node_id(nodes_.size());
        nodes_.push_back(GraphNode{id, surface, type, {}, {}, {}});
        out_.emplace_back();
        in_.emplace_back();
        undirected_.emplace_back();
        key_index_.emplace(std::move(key), id);
        index_name(id, surface);
        node = &nodes_.back();
    }

    for (const auto& [raw_key, values] : attributes) {
        auto k = text::canonical_name(raw_key);
        if (k.empty()) continue;
        auto& slot = node->attributes[k];
        for (const auto& v : values) {
            auto value = text::collapse_whitespace(v);
            if (value.empty()) continue;
            auto canon = text::case_fold(value);
            bool present = std::any_of(slot.begin(), slot.end(),
                                       [&](const std::string& s) { return text::case_fold(s) == canon; });
            if (!present) slot.push_back(std::move(value));
        }
        if (slot.empty()) node->attributes.erase(k);
    }
    if (!chunk.empty()) node->source_chunks.insert(chunk);
    return id;
}

void KnowledgeGraph::index_edge(EdgeIndex e) {
    const auto& edge = edges_[e];
    out_[index_of(edge.head)].push_back(e);
    in_[index_of(edge.tail)].push_back(e);
}

EdgeIndex KnowledgeGraph::add_edge(NodeId head, std::string_view relation, NodeId tail, const ChunkId& chunk) {
    if (!contains(head)) throw Error(ErrorCode::UnknownNode, "head id " + std::to_string(index_of(head)));
    if (!contains(tail)) throw Error(ErrorCode::UnknownNode, "tail id " + std::to_string(index_of(tail)));
    std::string rel(text::trim(relation));
    if (rel.empty()) throw Error(ErrorCode::EmptyInput, "relation name is empty");

    auto key = std::make_tuple(head, tail, rel);
    EdgeIndex e;
    if (auto it = edge_index_.find(key); it != edge_index_.end()) {
        e = it->second;
        if (!edges_[e].source_chunks.insert(chunk).second) return e;
    } else {
        e = edges_.size();
        edges_.push_back(GraphEdge{head, tail, rel, 0.0, {chunk}});
        edge_index_.emplace(std::move(key), e);
        index_edge(e);
    }
    edges_[e].weight += 1.0;
    if (head != tail) {
        undirected_[index_of(head)][tail] += 1.0;
        undirected_[index_of(tail)][head] += 1.0;
        total_weight_ += 1.0;
    }
    return e;
}

void KnowledgeGraph::add_chunk(Chunk chunk) {
    if (chunk.text.empty()) throw Error(ErrorCode::EmptyInput, "chunk '" + chunk.id + "' has empty text");
    if (chunks_.count(chunk.id)) throw Error(ErrorCode::CorruptedRecord, "duplicate chunk id '" + chunk.id + "'");
    if (!chunk_positions_.emplace(chunk.document_id, chunk.char_offset).second) {
        throw Error(ErrorCode::CorruptedRecord, "duplicate (document, offset) for chunk '" + chunk.id + "'");
    }
    auto id = chunk.id;
    chunks_.emplace(std::move(id), std::move(chunk));
}

const GraphNode& KnowledgeGraph::node(NodeId id) const {
    if (!contains(id)) throw Error(ErrorCode::UnknownNode, "id " + std::to_string(index_of(id)));
    return nodes_[index_of(id)];
}

const Chunk* KnowledgeGraph::find_chunk(const ChunkId& id) const {
    auto it = chunks_.find(id);
    return it == chunks_.end() ? nullptr : &it->second;
}

std::vector<NodeId> KnowledgeGraph::find_by_name(std::string_view name) const {
    auto it = name_index_.find(text::canonical_name(name));
    if (it == name_index_.end()) return {};
    return {it->second.begin(), it->second.end()};
}

std::optional<NodeId> KnowledgeGraph::find(std::string_view name, std::string_view entity_type) const {
    auto it = key_index_.find({text::canonical_name(name), text::case_fold(text::trim(entity_type))});
    if (it == key_index_.end()) return std::nullopt;
    return it->second;
}

std::span<const EdgeIndex> KnowledgeGraph::out_edges(NodeId id) const {
    node(id);
    return out_[index_of(id)];
}

std::span<const EdgeIndex> KnowledgeGraph::in_edges(NodeId id) const {
    node(id);
    return in_[index_of(id)];
}

const std::map<NodeId, double>& KnowledgeGraph::undirected_neighbors(NodeId id) const {
    node(id);
    return undirected_[index_of(id)];
}

std::size_t KnowledgeGraph::degree(NodeId id) const { return undirected_neighbors(id).size(); }

double KnowledgeGraph::weighted_degree(NodeId id) const {
    double sum = 0.0;
    for (const auto& [nb, w] : undirected_neighbors(id)) sum += w;
    return sum;
}

double KnowledgeGraph::undirected_weight(NodeId a, NodeId b) const {
    const auto& nbrs = undirected_neighbors(a);
    auto it = nbrs.find(b);
    return it == nbrs.end() ? 0.0 : it->second;
}

bool KnowledgeGraph::adjacent(NodeId a, NodeId b) const { return undirected_weight(a, b) > 0.0; }

Subgraph KnowledgeGraph::neighborhood(NodeId id, std::size_t k) const {
    node(id);
    std::vector<std::size_t> dist(nodes_.size(), SIZE_MAX);
    std::deque<NodeId> queue{id};
    dist[index_of(id)] = 0;
    Subgraph sub;
    while (!queue.empty()) {
        auto u = queue.front();
        queue.pop_front();
        sub.nodes.push_back(u);
        if (dist[index_of(u)] == k) continue;
        for (const auto& [v, w] : undirected_[index_of(u)]) {
            if (dist[index_of(v)] != SIZE_MAX) continue;
            dist[index_of(v)] = dist[index_of(u)] + 1;
            queue.push_back(v);
        }
    }
    std::sort(sub.nodes.begin(), sub.nodes.end());
    for (auto u : sub.nodes) {
        for (auto e : out_[index_of(u)]) {
            if (sub.contains(edges_[e].tail)) sub.edges.push_back(e);
        }
    }
    std::sort(sub.edges.begin(), sub.edges.end());
    return sub;
}

std::vector<std::string> KnowledgeGraph::audit() const {
    std::vector<std::string> problems;
    const auto n = nodes_.size();
    if (out_.size() != n || in_.size() != n || undirected_.size() != n) {
        problems.emplace_back("adjacency index size differs from node count");
        return problems;
    }
    std::vector<std::vector<EdgeIndex>> out(n), in(n);
    std::vector<std::map<NodeId, double>> und(n);
    double total = 0.0;
    for (EdgeIndex e = 0; e < edges_.size(); ++e) {
        const auto& edge = edges_[e];
        if (!contains(edge.head) || !contains(edge.tail)) {
            problems.push_back("edge " + std::to_string(e) + " references a missing node");
            continue;
        }
        if (edge.weight < 1.0 || edge.weight != static_cast<double>(edge.source_chunks.size())) {
            problems.push_back("edge " + std::to_string(e) + " weight disagrees with its provenance");
        }
        out[index_of(edge.head)].push_back(e);
        in[index_of(edge.tail)].push_back(e);
        if (!edge.self_loop()) {
            und[index_of(edge.head)][edge.tail] += edge.weight;
            und[index_of(edge.tail)][edge.head] += edge.weight;
            total += edge.weight;
        }
        auto it = edge_index_.find({edge.head, edge.tail, edge.relation});
        if (it == edge_index_.end() || it->second != e) {
            problems.push_back("edge " + std::to_string(e) + " missing from the edge key index");
        }
    }
    if (edge_index_.size() != edges_.size()) problems.emplace_back("duplicate (head, tail, relation) edges");
    auto sorted = [](std::vector<EdgeIndex> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    std::size_t degree_sum = 0;
    std::size_t undirected_pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (sorted(out_[i]) != out[i]) problems.push_back("forward index mismatch at node " + std::to_string(i));
        if (sorted(in_[i]) != in[i]) problems.push_back("reverse index mismatch at node " + std::to_string(i));
        if (undirected_[i] != und[i]) problems.push_back("undirected index mismatch at node " + std::to_string(i));
        degree_sum += und[i].size();
        for (const auto& [j, w] : und[i]) {
            if (index_of(j) > i) ++undirected_pairs;
        }
        if (nodes_[i].id != node_id(i)) problems.push_back("node " + std::to_string(i) + " has a foreign id");
        auto names = find_by_name(nodes_[i].name);
        if (std::find(names.begin(), names.end(), node_id(i)) == names.end()) {
            problems.push_back("name index misses node " + std::to_string(i));
        }
    }
    if (degree_sum != 2 * undirected_pairs) problems.emplace_back("degree sum is not twice the undirected edge count");
    if (total != total_weight_) problems.emplace_back("total weight bookkeeping drifted");
    return problems;
}

std::string KnowledgeGraph::serialize() const {
    std::ostringstream os;
    json meta{{"kind", "meta"},
              {"format", "graphrag-graph"},
              {"version", kGraphFormatVersion},
              {"schema_version", schema_version_},
              {"entity_types", entity_types_},
              {"nodes", nodes_.size()},
              {"edges", edges_.size()},
              {"chunks", chunks_.size()}};
    os << meta.dump() << '\n';
    for (const auto& n : nodes_) {
        json rec{{"kind", "node"},
                 {"id", index_of(n.id)},
                 {"name", n.name},
                 {"type", n.entity_type},
                 {"attributes", n.attributes},
                 {"aliases", n.aliases},
                 {"source_chunks", n.source_chunks}};
        os << rec.dump() << '\n';
    }
    for (const auto& e : edges_) {
        json rec{{"kind", "edge"},
                 {"head", index_of(e.head)},
                 {"tail", index_of(e.tail)},
                 {"relation", e.relation},
                 {"weight", e.weight},
                 {"source_chunks", e.source_chunks}};
        os << rec.dump() << '\n';
    }
    for (const auto& [id, c] : chunks_) {
        json rec{{"kind", "chunk"},
                 {"id", c.id},
                 {"document_id", c.document_id},
                 {"char_offset", c.char_offset},
                 {"text", c.text}};
        os << rec.dump() << '\n';
    }
    return os.str();
}

namespace {

[[noreturn]] void corrupt(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::CorruptedRecord, "graph line " + std::to_string(line) + ": " + what);
}

}  // namespace

KnowledgeGraph KnowledgeGraph::deserialize(std::string_view data) {
    std::vector<json> records;
    std::size_t start = 0;
    while (start < data.size()) {
        auto end = data.find('\n', start);
        if (end == std::string_view::npos) corrupt(records.size() + 1, "unterminated record");
        auto line = data.substr(start, end - start);
        start = end + 1;
        if (text::trim(line).empty()) continue;
        try {
            records.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            corrupt(records.size() + 1, e.what());
        }
    }
    if (records.empty()) corrupt(1, "missing meta record");

    const auto& meta = records.front();
    try {
        if (meta.at("kind") != "meta" || meta.at("format") != "graphrag-graph") corrupt(1, "first record is not meta");
        if (meta.at("version").get<int>() != kGraphFormatVersion) {
            throw Error(ErrorCode::VersionMismatch, "graph format version " + meta.at("version").dump());
        }
        KnowledgeGraph g(meta.at("entity_types").get<std::vector<std::string>>(),
                         meta.at("schema_version").get<std::string>());
        const auto node_total = meta.at("nodes").get<std::size_t>();
        const auto edge_total = meta.at("edges").get<std::size_t>();
        const auto chunk_total = meta.at("chunks").get<std::size_t>();
        if (records.size() != 1 + node_total + edge_total + chunk_total) {
            corrupt(records.size(), "record count disagrees with meta (truncated?)");
        }

        // Records must appear in kind order: nodes, then edges, then chunks.
        int stage = 0;
        for (std::size_t r = 1; r < records.size(); ++r) {
            const auto& rec = records[r];
            const auto kind = rec.at("kind").get<std::string>();
            const int rank = kind == "node" ? 0 : kind == "edge" ? 1 : kind == "chunk" ? 2 : -1;
            if (rank < 0) corrupt(r + 1, "unknown record kind '" + kind + "'");
            if (rank < stage) corrupt(r + 1, "record kind '" + kind + "' out of order");
            stage = rank;
            if (kind == "node") {
                if (rec.at("id").get<std::size_t>() != g.nodes_.size()) corrupt(r + 1, "non-sequential node id");
                GraphNode n;
                n.id = node_id(g.nodes_.size());
                n.name = rec.at("name").get<std::string>();
                n.entity_type = rec.at("type").get<std::string>();
                n.attributes = rec.at("attributes").get<AttributeMap>();
                n.aliases = rec.at("aliases").get<std::set<std::string>>();
                n.source_chunks = rec.at("source_chunks").get<std::set<ChunkId>>();
                if (n.name.empty()) corrupt(r + 1, "empty node name");
                auto key = std::make_pair(text::canonical_name(n.name), text::case_fold(n.entity_type));
                if (!g.key_index_.emplace(key, n.id).second) corrupt(r + 1, "duplicate node key");
                g.index_name(n.id, n.name);
                for (const auto& a : n.aliases) g.index_name(n.id, a);
                g.nodes_.push_back(std::move(n));
                g.out_.emplace_back();
                g.in_.emplace_back();
                g.undirected_.emplace_back();
            } else if (kind == "edge") {
                GraphEdge e;
                e.head = node_id(rec.at("head").get<std::size_t>());
                e.tail = node_id(rec.at("tail").get<std::size_t>());
                if (!g.contains(e.head) || !g.contains(e.tail)) corrupt(r + 1, "edge references an undeclared node");
                e.relation = rec.at("relation").get<std::string>();
                e.weight = rec.at("weight").get<double>();
                e.source_chunks = rec.at("source_chunks").get<std::set<ChunkId>>();
                if (e.weight < 1.0 || e.weight != static_cast<double>(e.source_chunks.size())) {
                    corrupt(r + 1, "edge weight disagrees with provenance");
                }
                auto key = std::make_tuple(e.head, e.tail, e.relation);
                if (!g.edge_index_.emplace(key, g.edges_.size()).second) corrupt(r + 1, "duplicate edge");
                g.edges_.push_back(std::move(e));
                const auto& added = g.edges_.back();
                g.index_edge(g.edges_.size() - 1);
                if (!added.self_loop()) {
                    g.undirected_[index_of(added.head)][added.tail] += added.weight;
                    g.undirected_[index_of(added.tail)][added.head] += added.weight;
                    g.total_weight_ += added.weight;
                }
            } else {
                Chunk c{rec.at("id").get<std::string>(), rec.at("document_id").get<std::string>(),
                        rec.at("text").get<std::string>(), rec.at("char_offset").get<std::size_t>()};
                if (c.text.empty() || g.chunks_.count(c.id) ||
                    g.chunk_positions_.count({c.document_id, c.char_offset})) {
                    corrupt(r + 1, "invalid or duplicate chunk");
                }
                g.add_chunk(std::move(c));
            }
        }
        for (const auto& n : g.nodes_) {
            for (const auto& c : n.source_chunks) {
                if (!g.chunks_.count(c)) corrupt(0, "node references unknown chunk '" + c + "'");
            }
        }
        for (const auto& e : g.edges_) {
            for (const auto& c : e.source_chunks) {
                if (!g.chunks_.count(c)) corrupt(0, "edge references unknown chunk '" + c + "'");
            }
        }
        return g;
    } catch (const json::exception& e) {
        corrupt(0, e.what());
    }
}

}  // namespace graphrag::graph
