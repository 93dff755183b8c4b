#pragma once

#include "graphrag/clients.hpp"
#include "graphrag/graph_store.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace graphrag::community {

using graph::KnowledgeGraph;
using graph::NodeId;

// Node -> community assignment with dense ids 0..community_count-1.
struct Partition {
    std::vector<std::size_t> assignment;  // indexed by node index
    std::size_t community_count = 0;

    // Renumbers arbitrary labels densely in order of first appearance.
    static Partition from_labels(const std::vector<std::size_t>& labels);
    static Partition singletons(std::size_t n);

    std::size_t community_of(NodeId id) const { return assignment.at(graph::index_of(id)); }
    std::vector<std::vector<NodeId>> groups() const;

    bool operator==(const Partition&) const = default;
};

// Which same-community node pairs contribute attribute similarity.
enum class PairScope {
    TwoHop,    // pairs within undirected distance 2 (local, used by default)
    FullPair,  // every pair, as the objective is literally written
};

struct ClusterParams {
    double alpha = 0.5;
    double tau = 0.3;
    std::size_t max_passes = 10;
    std::size_t min_community_size = 2;
    std::optional<std::uint64_t> seed;  // shuffles the visit order when set
    PairScope pair_scope = PairScope::TwoHop;
    // When set, S_ij is 1 if i and j share a value for this key, else 0.
    std::optional<std::string> similarity_key;
    // Recompute the objective around every accepted move (small graphs only).
    bool verify_deltas = false;

    void validate() const;
};

struct Dimension {
    enum class Kind { Topology, Attribute, Multihop };
    Kind kind = Kind::Topology;
    std::string key;    // attribute key
    std::string value;  // attribute value (canonical)
    NodeId root{};
    std::size_t hops = 0;

    std::string label(const KnowledgeGraph& g) const;
    bool operator==(const Dimension&) const = default;
};

struct Community {
    std::size_t id = 0;
    Dimension dimension;
    std::vector<NodeId> members;            // C_k, ascending
    std::vector<NodeId> completed_members;  // C_k plus absorbed boundary nodes, ascending
    std::vector<graph::EdgeIndex> internal_edges;

    bool operator==(const Community&) const = default;
};

struct CommunityReport {
    std::size_t community_id = 0;
    std::string title;
    std::string summary;
    Dimension dimension;
    std::vector<std::string> member_names;
    std::vector<std::string> key_relations;
    Vector embedding;
    std::vector<graph::ChunkId> source_chunks;
    bool from_template = false;

    bool operator==(const CommunityReport&) const = default;
};

// Jaccard over canonicalized (key, value) pairs; 0 when both maps are empty.
double attribute_similarity(const graph::AttributeMap& a, const graph::AttributeMap& b);

// 1 when the two maps share a canonical value for `key`, else 0.
double key_similarity(const graph::AttributeMap& a, const graph::AttributeMap& b, const std::string& key);

// Q_multi = 1/2m * sum_ij [(A_ij - k_i k_j / 2m) + alpha * S_ij] delta(c_i, c_j), with A the
// undirected weighted adjacency without self-loops. The structural sum runs
// over all ordered pairs including i = j; the attribute sum excludes i = j.
// Throws UndefinedModularity when the graph has no nodes or m = 0.
double modularity_multi(const KnowledgeGraph& g, const Partition& p, double alpha,
                        PairScope scope = PairScope::FullPair,
                        const std::optional<std::string>& similarity_key = std::nullopt);

struct LouvainStats {
    std::size_t passes = 0;
    std::size_t moves = 0;
    double modularity = 0.0;
    double max_delta_error = 0.0;  // filled when verify_deltas is set
};

// Louvain local moving + aggregation with Q_multi as the objective. Nodes
// are visited in ascending id order and move to the neighbouring community
// with the largest positive gain (ties -> lowest community id).
Partition louvain_cluster(const KnowledgeGraph& g, const ClusterParams& params, LouvainStats* stats = nullptr);

// Affinity |N(u) ∩ members| / deg(u) for every non-member with an edge into members.
std::map<NodeId, double> boundary_affinities(const KnowledgeGraph& g, const std::vector<NodeId>& members);

// Absorbs neighbours whose affinity to the ORIGINAL members is >= tau (one round).
Community complete_community(const KnowledgeGraph& g, Community community, double tau);

// One community per canonical value of `key`, values ascending; nodes with
// several values join several communities. Communities smaller than
// min_community_size are dropped.
std::vector<Community> attribute_cluster(const KnowledgeGraph& g, const std::string& key,
                                         std::size_t min_community_size = 2);

// Nodes reachable from `root` along a directed simple path of length <= hops
// whose relation sequence is a prefix of one of `patterns` (empty = any).
Community multihop_subgraph(const KnowledgeGraph& g, NodeId root, std::size_t hops,
                            const std::vector<std::vector<std::string>>& patterns);

struct MultihopSpec {
    std::string root;  // entity name
    std::size_t hops = 2;
    std::vector<std::vector<std::string>> patterns;
};

struct CommunityConfig {
    ClusterParams params;
    std::vector<std::string> attribute_keys;
    std::vector<MultihopSpec> multihop;
};

struct CommunitySet {
    Partition topology;
    std::vector<Community> communities;
    std::vector<std::string> warnings;
};

// Topology clustering + completion, then every attribute dimension and
// multihop root. Community ids are sequential in that order.
CommunitySet build_communities(const KnowledgeGraph& g, const CommunityConfig& cfg, LouvainStats* stats = nullptr);

// Structured context handed to the summarizer (members with attributes,
// relations among completed members, attribute histogram, excerpts).
std::string report_context(const Community& c, const KnowledgeGraph& g);

// Summarizes via `client` when given, falling back to a deterministic
// template when it is absent, throws, or replies with nothing usable.
CommunityReport generate_report(const Community& c, const KnowledgeGraph& g, ChatClient* client,
                                EmbeddingClient& embedder, std::vector<std::string>* diagnostics = nullptr);

std::vector<CommunityReport> generate_reports(const std::vector<Community>& communities, const KnowledgeGraph& g,
                                              ChatClient* client, EmbeddingClient& embedder, std::size_t workers = 4,
                                              std::vector<std::string>* diagnostics = nullptr);

// Record-per-line community file: a meta record, then `community` and
// `report` records.
std::string serialize_communities(const CommunitySet& set, const std::vector<CommunityReport>& reports,
                                  std::size_t embedding_dimension);

struct LoadedCommunities {
    CommunitySet set;
    std::vector<CommunityReport> reports;
    std::size_t embedding_dimension = 0;
};

LoadedCommunities deserialize_communities(std::string_view data, const KnowledgeGraph& g);

}  // namespace graphrag::community
