#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace graphrag::graph {

enum class NodeId : std::uint32_t {};

constexpr std::size_t index_of(NodeId id) noexcept { return static_cast<std::size_t>(id); }
constexpr NodeId node_id(std::size_t i) noexcept { return static_cast<NodeId>(i); }

using ChunkId = std::string;
using EdgeIndex = std::size_t;

// Attribute key -> values. Keys are canonical (case folded); values keep the
// first-seen surface form, earliest first.
using AttributeMap = std::map<std::string, std::vector<std::string>>;

struct GraphNode {
    NodeId id{};
    std::string name;
    std::string entity_type;
    AttributeMap attributes;
    std::set<ChunkId> source_chunks;
    std::set<std::string> aliases;

    bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
    NodeId head{};
    NodeId tail{};
    std::string relation;
    double weight = 0.0;
    std::set<ChunkId> source_chunks;

    bool self_loop() const noexcept { return head == tail; }
    bool operator==(const GraphEdge&) const = default;
};

struct Chunk {
    ChunkId id;
    std::string document_id;
    std::string text;
    std::size_t char_offset = 0;

    bool operator==(const Chunk&) const = default;
};

struct Subgraph {
    std::vector<NodeId> nodes;      // ascending
    std::vector<EdgeIndex> edges;   // ascending

    bool contains(NodeId id) const;
};

// Directed property graph with provenance. Edges are stored in SPO direction;
// the undirected view used by clustering merges both directions and skips
// self-loops. Node ids are allocated monotonically and never reused.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    // Restricts node types to `entity_types` (matched case-insensitively and
    // stored in the declared spelling). An empty list accepts any type.
    explicit KnowledgeGraph(std::vector<std::string> entity_types, std::string schema_version = {});

    NodeId upsert_node(std::string_view name, std::string_view entity_type, const AttributeMap& attributes,
                       const ChunkId& chunk);
    EdgeIndex add_edge(NodeId head, std::string_view relation, NodeId tail, const ChunkId& chunk);
    void add_chunk(Chunk chunk);

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    bool contains(NodeId id) const noexcept { return index_of(id) < nodes_.size(); }

    const GraphNode& node(NodeId id) const;
    std::span<const GraphNode> nodes() const noexcept { return nodes_; }
    std::span<const GraphEdge> edges() const noexcept { return edges_; }
    const GraphEdge& edge(EdgeIndex e) const { return edges_.at(e); }

    const std::map<ChunkId, Chunk>& chunks() const noexcept { return chunks_; }
    const Chunk* find_chunk(const ChunkId& id) const;

    // All nodes whose canonical name or alias equals canonical(name), any type.
    std::vector<NodeId> find_by_name(std::string_view name) const;
    std::optional<NodeId> find(std::string_view name, std::string_view entity_type) const;

    std::span<const EdgeIndex> out_edges(NodeId id) const;
    std::span<const EdgeIndex> in_edges(NodeId id) const;

    // Undirected view, self-loops excluded.
    const std::map<NodeId, double>& undirected_neighbors(NodeId id) const;
    std::size_t degree(NodeId id) const;
    double weighted_degree(NodeId id) const;
    double undirected_weight(NodeId a, NodeId b) const;
    bool adjacent(NodeId a, NodeId b) const;
    // Sum of non-self-loop edge weights (m).
    double total_weight() const noexcept { return total_weight_; }

    // Induced subgraph on nodes within undirected hop distance <= k.
    Subgraph neighborhood(NodeId id, std::size_t k) const;

    // Rebuilds every index from the edge/node lists and reports mismatches.
    // An empty result means the graph is consistent.
    std::vector<std::string> audit() const;

    const std::vector<std::string>& entity_types() const noexcept { return entity_types_; }
    const std::string& schema_version() const noexcept { return schema_version_; }

    // Structural equality: nodes, edges, chunks and schema binding.
    bool operator==(const KnowledgeGraph& other) const {
        return nodes_ == other.nodes_ && edges_ == other.edges_ && chunks_ == other.chunks_ &&
               entity_types_ == other.entity_types_ && schema_version_ == other.schema_version_;
    }

    std::string serialize() const;
    static KnowledgeGraph deserialize(std::string_view data);

private:
    std::string resolve_type(std::string_view entity_type) const;
    void index_name(NodeId id, std::string_view surface);
    void index_edge(EdgeIndex e);

    std::vector<std::string> entity_types_;
    std::string schema_version_;

    std::vector<GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::map<ChunkId, Chunk> chunks_;
    std::set<std::pair<std::string, std::size_t>> chunk_positions_;

    std::map<std::pair<std::string, std::string>, NodeId> key_index_;  // (canonical name, folded type)
    std::map<std::string, std::set<NodeId>> name_index_;               // canonical surface -> ids
    std::map<std::tuple<NodeId, NodeId, std::string>, EdgeIndex> edge_index_;
    std::vector<std::vector<EdgeIndex>> out_;
    std::vector<std::vector<EdgeIndex>> in_;
    std::vector<std::map<NodeId, double>> undirected_;
    double total_weight_ = 0.0;
};

inline constexpr int kGraphFormatVersion = 1;

}  // namespace graphrag::graph
