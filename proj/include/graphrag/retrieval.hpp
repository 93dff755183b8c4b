#pragma once

#include "graphrag/clients.hpp"
#include "graphrag/community.hpp"
#include "graphrag/embedding.hpp"
#include "graphrag/graph_store.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace graphrag::retrieval {

using graph::ChunkId;
using graph::KnowledgeGraph;
using graph::NodeId;

// Prefix tree over case-folded token sequences of node names and aliases.
class EntityTrie {
public:
    void insert(const std::vector<std::string>& tokens, NodeId id);

    // Exact lookup of a full sequence; nullptr when absent or not terminal.
    const std::set<NodeId>* lookup(const std::vector<std::string>& tokens) const;

    struct Match {
        std::size_t length = 0;  // tokens consumed; 0 = no match
        const std::set<NodeId>* ids = nullptr;
    };
    // Longest terminal sequence starting at tokens[pos].
    Match longest_match(const std::vector<std::string>& tokens, std::size_t pos) const;

    bool empty() const noexcept { return nodes_.size() == 1; }

private:
    struct TrieNode {
        std::map<std::string, std::size_t, std::less<>> next;
        std::set<NodeId> ids;
    };
    std::vector<TrieNode> nodes_{1};
};

EntityTrie build_trie(const KnowledgeGraph& g);

struct EntityLink {
    NodeId id{};
    std::size_t begin = 0;  // token span [begin, end)
    std::size_t end = 0;
    double confidence = 0.0;  // P(e|q)

    bool operator==(const EntityLink&) const = default;
};

// Greedy left-to-right longest match. P(e|q) = span tokens / query tokens,
// split equally across the ids of an ambiguous name.
std::vector<EntityLink> link_entities(const std::vector<std::string>& query_tokens, const EntityTrie& trie);
std::vector<EntityLink> link_entities(std::string_view query, const EntityTrie& trie);

// Stop words used by the abstraction score (data/stopwords-v1.txt).
const std::set<std::string, std::less<>>& stopwords();
std::string_view stopwords_version();

struct FusionConfig {
    double w1 = 4.0;
    double w2 = 1.0;
    std::size_t khop = 2;
    std::size_t topk_candidates = 24;
    std::size_t final_k = 8;
    std::size_t vector_k = 24;          // chunks taken from the vector channel before capping
    std::size_t community_fanout = 3;   // top communities whose chunks join the candidate set
    bool graph_channel = true;
    bool community_channel = true;

    void validate() const;
};

struct QueryAnalysis {
    std::string query;
    std::vector<std::string> tokens;
    std::vector<EntityLink> links;
    double entity_density = 0.0;     // Ñ_ent in [0, 1]
    double abstraction_score = 0.0;  // H_sem >= 0, natural log
    double beta = 0.5;               // strictly in (0, 1)
};

// Logistic function, clamped to the open interval (0, 1).
double sigmoid(double x);

// beta = sigmoid(w1 * density - w2 * entropy).
double beta_from(double entity_density, double abstraction_score, double w1, double w2);

// Shannon entropy (natural log) of the unigram distribution of `tokens`.
double unigram_entropy(const std::vector<std::string>& tokens);

// Throws EmptyInput when the query has no tokens.
QueryAnalysis compute_beta(std::string_view query, const EntityTrie& trie, const FusionConfig& cfg);

// Per chunk: sum over links of P(e|q) * |{v in N(e) : chunk in prov(v)}| / |N(e)|,
// with N(e) the khop undirected neighbourhood including e. Chunks scoring 0
// are absent.
std::map<ChunkId, double> graph_channel_scores(const QueryAnalysis& analysis, const KnowledgeGraph& g,
                                               std::size_t khop);

// Single-chunk form of the above. Throws UnknownChunk.
double score_graph_channel(const QueryAnalysis& analysis, const ChunkId& chunk, const KnowledgeGraph& g,
                           std::size_t khop);

// Cosine of the query against every report embedding, negatives clamped to 0.
std::map<std::size_t, double> score_community_channel(std::span<const double> query_vector,
                                                      const std::vector<community::CommunityReport>& reports);

// Min-max normalization; a constant vector maps to 1 when positive, else 0.
std::vector<double> min_max_normalize(const std::vector<double>& values);

// beta * g + (1 - beta) * c, elementwise on already-normalized channels.
std::vector<double> mix(double beta, const std::vector<double>& graph_scores,
                        const std::vector<double>& community_scores);

struct FusionInput {
    ChunkId chunk;
    double s_graph = 0.0;
    double s_comm = 0.0;  // max over communities containing the chunk; 0 when none
};

// Normalizes both channels over `inputs` and mixes them with beta.
std::vector<double> fuse(double beta, const std::vector<FusionInput>& inputs);

struct RetrievalResult {
    ChunkId chunk;
    double s_graph = 0.0;
    double s_comm = 0.0;
    double s_vector = 0.0;
    double fused = 0.0;
    double rerank_score = 0.0;
    std::vector<NodeId> entities;          // linked entities whose neighbourhood touches the chunk
    std::vector<std::size_t> communities;  // communities containing the chunk, best first
};

// Orders by rerank score (descending), then fused score, then chunk id, and
// keeps the first k. On client failure the rerank scores are zeroed, which
// leaves the fused ordering.
std::vector<RetrievalResult> rerank_select(std::string_view query, std::vector<RetrievalResult> candidates,
                                           RerankClient* client, const KnowledgeGraph& g, std::size_t k,
                                           std::vector<std::string>* diagnostics = nullptr);

// Immutable, query-ready index.
struct IndexBundle {
    KnowledgeGraph graph;
    std::vector<community::Community> communities;
    std::vector<community::CommunityReport> reports;
    embedding::VectorStore chunk_vectors;
    EntityTrie trie;
    std::map<ChunkId, std::vector<std::size_t>> chunk_communities;  // sorted community ids

    static IndexBundle assemble(KnowledgeGraph graph, std::vector<community::Community> communities,
                                std::vector<community::CommunityReport> reports,
                                embedding::VectorStore chunk_vectors);
};

struct RetrievalResponse {
    QueryAnalysis analysis;
    std::vector<RetrievalResult> results;
    std::size_t candidate_count = 0;
    std::vector<std::string> diagnostics;
};

struct QueryClients {
    EmbeddingClient* embedder = nullptr;  // null disables vector and community channels
    RerankClient* reranker = nullptr;     // null keeps fused order
};

// Candidate pre-fusion score: max(s_graph, s_comm, max(s_vector, 0)).
std::vector<ChunkId> gather_candidates(const IndexBundle& index, const std::map<ChunkId, double>& graph_scores,
                                       const std::map<ChunkId, double>& comm_scores,
                                       const std::map<ChunkId, double>& vector_scores,
                                       const std::vector<ChunkId>& community_chunks, const FusionConfig& cfg);

RetrievalResponse retrieve(std::string_view query, const IndexBundle& index, const QueryClients& clients,
                           const FusionConfig& cfg);

}  // namespace graphrag::retrieval
