#include "graphrag/retrieval.hpp"

#include "graphrag/error.hpp"
#include "graphrag/text.hpp"
#include "stopwords.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace graphrag::retrieval {

using graph::index_of;

void EntityTrie::insert(const std::vector<std::string>& tokens, NodeId id) {
    if (tokens.empty()) return;
    std::size_t at = 0;
    for (const auto& t : tokens) {
        auto it = nodes_[at].next.find(t);
        if (it == nodes_[at].next.end()) {
            nodes_.emplace_back();
            it = nodes_[at].next.emplace(t, nodes_.size() - 1).first;
        }
        at = it->second;
    }
    nodes_[at].ids.insert(id);
}

const std::set<NodeId>* EntityTrie::lookup(const std::vector<std::string>& tokens) const {
    std::size_t at = 0;
    for (const auto& t : tokens) {
        auto it = nodes_[at].next.find(t);
        if (it == nodes_[at].next.end()) return nullptr;
        at = it->second;
    }
    return nodes_[at].ids.empty() ? nullptr : &nodes_[at].ids;
}

EntityTrie::Match EntityTrie::longest_match(const std::vector<std::string>& tokens, std::size_t pos) const {
    Match best;
    std::size_t at = 0;
    for (std::size_t i = pos; i < tokens.size(); ++i) {
        auto it = nodes_[at].next.find(tokens[i]);
        if (it == nodes_[at].next.end()) break;
        at = it->second;
        if (!nodes_[at].ids.empty()) best = {i - pos + 1, &nodes_[at].ids};
    }
    return best;
}

EntityTrie build_trie(const KnowledgeGraph& g) {
    EntityTrie trie;
    for (const auto& n : g.nodes()) {
        trie.insert(text::tokenize(n.name), n.id);
        for (const auto& alias : n.aliases) trie.insert(text::tokenize(alias), n.id);
    }
    return trie;
}

std::vector<EntityLink> link_entities(const std::vector<std::string>& tokens, const EntityTrie& trie) {
    std::vector<EntityLink> out;
    const double total = static_cast<double>(tokens.size());
    for (std::size_t pos = 0; pos < tokens.size();) {
        auto m = trie.longest_match(tokens, pos);
        if (m.length == 0) {
            ++pos;
            continue;
        }
        const double p = static_cast<double>(m.length) / total / static_cast<double>(m.ids->size());
        for (auto id : *m.ids) out.push_back({id, pos, pos + m.length, p});
        pos += m.length;
    }
    return out;
}

std::vector<EntityLink> link_entities(std::string_view query, const EntityTrie& trie) {
    return link_entities(text::tokenize(query), trie);
}

const std::set<std::string, std::less<>>& stopwords() {
    static const auto words = [] {
        std::set<std::string, std::less<>> out;
        for (auto line : text::split(detail::kStopwordsText, '\n')) {
            auto word = text::trim(line);
            if (word.empty() || word.front() == '#') continue;
            out.insert(text::case_fold(word));
        }
        return out;
    }();
    return words;
}

std::string_view stopwords_version() { return detail::kStopwordsVersion; }

void FusionConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(w1) || !positive(w2)) throw Error(ErrorCode::Config, "fusion weights w1, w2 must be positive");
    if (khop == 0 || topk_candidates == 0 || final_k == 0 || vector_k == 0) {
        throw Error(ErrorCode::Config, "fusion khop and top-k values must be positive");
    }
    if (final_k > topk_candidates) throw Error(ErrorCode::Config, "final_k must not exceed topk_candidates");
}

double sigmoid(double x) {
    double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    return std::clamp(s, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

double beta_from(double entity_density, double abstraction_score, double w1, double w2) {
    return sigmoid(w1 * entity_density - w2 * abstraction_score);
}

double unigram_entropy(const std::vector<std::string>& tokens) {
    if (tokens.empty()) return 0.0;
    std::map<std::string_view, std::size_t> counts;
    for (const auto& t : tokens) ++counts[t];
    const double n = static_cast<double>(tokens.size());
    double h = 0.0;
    for (const auto& [t, c] : counts) {
        double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

QueryAnalysis compute_beta(std::string_view query, const EntityTrie& trie, const FusionConfig& cfg) {
    QueryAnalysis a;
    a.query = std::string(query);
    a.tokens = text::tokenize(query);
    if (a.tokens.empty()) throw Error(ErrorCode::EmptyInput, "query has no tokens");
    a.links = link_entities(a.tokens, trie);

    std::vector<bool> covered(a.tokens.size(), false);
    for (const auto& l : a.links) {
        for (auto i = l.begin; i < l.end; ++i) covered[i] = true;
    }
    std::vector<std::string> residual;
    std::size_t covered_count = 0;
    const auto& stop = stopwords();
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
        if (covered[i]) {
            ++covered_count;
        } else if (!stop.count(a.tokens[i])) {
            residual.push_back(a.tokens[i]);
        }
    }
    a.entity_density = static_cast<double>(covered_count) / static_cast<double>(a.tokens.size());
    a.abstraction_score = unigram_entropy(residual);
    a.beta = beta_from(a.entity_density, a.abstraction_score, cfg.w1, cfg.w2);
    return a;
}

std::map<ChunkId, double> graph_channel_scores(const QueryAnalysis& analysis, const KnowledgeGraph& g,
                                               std::size_t khop) {
    std::map<ChunkId, double> out;
    for (const auto& link : analysis.links) {
        auto hood = g.neighborhood(link.id, khop);
        std::map<ChunkId, std::size_t> hits;
        for (auto v : hood.nodes) {
            for (const auto& c : g.node(v).source_chunks) ++hits[c];
        }
        const double size = static_cast<double>(hood.nodes.size());
        for (const auto& [c, h] : hits) out[c] += link.confidence * static_cast<double>(h) / size;
    }
    return out;
}

double score_graph_channel(const QueryAnalysis& analysis, const ChunkId& chunk, const KnowledgeGraph& g,
                           std::size_t khop) {
    if (!g.find_chunk(chunk)) throw Error(ErrorCode::UnknownChunk, "unknown chunk '" + chunk + "'");
    double score = 0.0;
    for (const auto& link : analysis.links) {
        auto hood = g.neighborhood(link.id, khop);
        std::size_t hits = 0;
        for (auto v : hood.nodes) hits += g.node(v).source_chunks.count(chunk);
        score += link.confidence * static_cast<double>(hits) / static_cast<double>(hood.nodes.size());
    }
    return score;
}

std::map<std::size_t, double> score_community_channel(std::span<const double> query_vector,
                                                      const std::vector<community::CommunityReport>& reports) {
    std::map<std::size_t, double> out;
    for (const auto& r : reports) {
        bool degenerate = false;
        double c = embedding::cosine(query_vector, r.embedding, &degenerate);
        out[r.community_id] = std::max(c, 0.0);
    }
    return out;
}

std::vector<double> min_max_normalize(const std::vector<double>& values) {
    if (values.empty()) return {};
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double min = *lo, max = *hi;
    std::vector<double> out(values.size());
    if (max - min <= 0.0) {
        std::fill(out.begin(), out.end(), max > 0.0 ? 1.0 : 0.0);
        return out;
    }
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - min) / (max - min);
    return out;
}

std::vector<double> mix(double beta, const std::vector<double>& graph_scores,
                        const std::vector<double>& community_scores) {
    if (graph_scores.size() != community_scores.size()) {
        throw Error(ErrorCode::DimensionMismatch, "channel score vectors differ in length");
    }
    std::vector<double> out(graph_scores.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = beta * graph_scores[i] + (1.0 - beta) * community_scores[i];
    }
    return out;
}

std::vector<double> fuse(double beta, const std::vector<FusionInput>& inputs) {
    std::vector<double> g, c;
    for (const auto& in : inputs) {
        g.push_back(in.s_graph);
        c.push_back(in.s_comm);
    }
    return mix(beta, min_max_normalize(g), min_max_normalize(c));
}

std::vector<RetrievalResult> rerank_select(std::string_view query, std::vector<RetrievalResult> candidates,
                                           RerankClient* client, const KnowledgeGraph& g, std::size_t k,
                                           std::vector<std::string>* diagnostics) {
    bool ok = false;
    if (client && !candidates.empty()) {
        try {
            std::vector<std::string> passages;
            for (const auto& c : candidates) {
                const auto* chunk = g.find_chunk(c.chunk);
                passages.push_back(chunk ? chunk->text : std::string{});
            }
            auto scores = client->score(query, passages);
            if (scores.size() != candidates.size()) {
                throw Error(ErrorCode::DimensionMismatch, "reranker returned " + std::to_string(scores.size()) +
                                                              " scores for " + std::to_string(candidates.size()) +
                                                              " passages");
            }
            for (std::size_t i = 0; i < scores.size(); ++i) {
                if (!std::isfinite(scores[i])) throw Error(ErrorCode::Parse, "reranker returned a non-finite score");
                candidates[i].rerank_score = scores[i];
            }
            ok = true;
        } catch (const std::exception& e) {
            if (diagnostics) diagnostics->push_back(std::string("rerank failed, using fused order: ") + e.what());
            spdlog::warn("rerank failed, using fused order: {}", e.what());
        }
    }
    if (!ok) {
        for (auto& c : candidates) c.rerank_score = 0.0;
    }
    std::sort(candidates.begin(), candidates.end(), [](const RetrievalResult& a, const RetrievalResult& b) {
        if (a.rerank_score != b.rerank_score) return a.rerank_score > b.rerank_score;
        if (a.fused != b.fused) return a.fused > b.fused;
        return a.chunk < b.chunk;
    });
    if (candidates.size() > k) candidates.resize(k);
    return candidates;
}

IndexBundle IndexBundle::assemble(KnowledgeGraph graph, std::vector<community::Community> communities,
                                  std::vector<community::CommunityReport> reports,
                                  embedding::VectorStore chunk_vectors) {
    IndexBundle b{std::move(graph), std::move(communities), std::move(reports), std::move(chunk_vectors), {}, {}};
    b.trie = build_trie(b.graph);
    for (const auto& c : b.communities) {
        std::set<ChunkId> chunks;
        for (auto v : c.completed_members) {
            const auto& src = b.graph.node(v).source_chunks;
            chunks.insert(src.begin(), src.end());
        }
        for (const auto& chunk : chunks) b.chunk_communities[chunk].push_back(c.id);
    }
    for (auto& [chunk, ids] : b.chunk_communities) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }
    b.chunk_vectors.freeze();
    return b;
}

namespace {

double lookup(const std::map<ChunkId, double>& m, const ChunkId& c) {
    auto it = m.find(c);
    return it == m.end() ? 0.0 : it->second;
}

template <typename Key>
std::vector<std::pair<Key, double>> ranked(const std::map<Key, double>& m) {
    std::vector<std::pair<Key, double>> out(m.begin(), m.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

}  // namespace

std::vector<ChunkId> gather_candidates(const IndexBundle& index, const std::map<ChunkId, double>& graph_scores,
                                       const std::map<ChunkId, double>& comm_scores,
                                       const std::map<ChunkId, double>& vector_scores,
                                       const std::vector<ChunkId>& community_chunks, const FusionConfig& cfg) {
    std::set<ChunkId> pool;
    auto by_vector = ranked(vector_scores);
    for (std::size_t i = 0; i < by_vector.size() && i < cfg.vector_k; ++i) pool.insert(by_vector[i].first);
    for (const auto& [c, s] : graph_scores) {
        if (s > 0.0) pool.insert(c);
    }
    pool.insert(community_chunks.begin(), community_chunks.end());

    std::vector<std::pair<ChunkId, double>> scored;
    for (const auto& c : pool) {
        if (!index.graph.find_chunk(c)) continue;
        double cap = std::max({lookup(graph_scores, c), lookup(comm_scores, c), std::max(lookup(vector_scores, c), 0.0)});
        scored.emplace_back(c, cap);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (scored.size() > cfg.topk_candidates) scored.resize(cfg.topk_candidates);
    std::vector<ChunkId> out;
    for (auto& [c, s] : scored) out.push_back(std::move(c));
    return out;
}

RetrievalResponse retrieve(std::string_view query, const IndexBundle& index, const QueryClients& clients,
                           const FusionConfig& cfg) {
    cfg.validate();
    if (index.graph.chunks().empty()) throw Error(ErrorCode::EmptyInput, "index has no chunks");

    RetrievalResponse resp;
    resp.analysis = compute_beta(query, index.trie, cfg);
    const auto& a = resp.analysis;

    std::map<ChunkId, double> graph_scores;
    if (cfg.graph_channel) graph_scores = graph_channel_scores(a, index.graph, cfg.khop);

    std::optional<Vector> qv;
    if (clients.embedder) {
        try {
            auto vs = clients.embedder->embed({std::string(query)});
            if (vs.size() != 1) throw Error(ErrorCode::DimensionMismatch, "embedder returned no vector");
            qv = std::move(vs.front());
        } catch (const std::exception& e) {
            resp.diagnostics.push_back(std::string("query embedding failed; vector and community channels off: ") +
                                       e.what());
        }
    } else {
        resp.diagnostics.push_back("no embedder; vector and community channels off");
    }

    std::map<ChunkId, double> vector_scores;
    std::map<std::size_t, double> report_scores;
    if (qv) {
        try {
            for (const auto& hit : index.chunk_vectors.top_k(*qv, std::max<std::size_t>(index.chunk_vectors.size(), 1))) {
                vector_scores[hit.ref] = hit.score;
            }
        } catch (const std::exception& e) {
            resp.diagnostics.push_back(std::string("vector channel failed: ") + e.what());
        }
        if (cfg.community_channel) {
            try {
                report_scores = score_community_channel(*qv, index.reports);
            } catch (const std::exception& e) {
                resp.diagnostics.push_back(std::string("community channel failed: ") + e.what());
            }
        }
    }

    std::map<ChunkId, double> comm_scores;
    for (const auto& [chunk, ids] : index.chunk_communities) {
        double best = 0.0;
        for (auto id : ids) {
            auto it = report_scores.find(id);
            if (it != report_scores.end()) best = std::max(best, it->second);
        }
        if (best > 0.0) comm_scores[chunk] = best;
    }

    std::vector<ChunkId> community_chunks;
    auto top_reports = ranked(report_scores);
    for (std::size_t i = 0; i < top_reports.size() && i < cfg.community_fanout; ++i) {
        if (top_reports[i].second <= 0.0) break;
        for (const auto& r : index.reports) {
            if (r.community_id == top_reports[i].first) {
                community_chunks.insert(community_chunks.end(), r.source_chunks.begin(), r.source_chunks.end());
            }
        }
    }

    auto candidates = gather_candidates(index, graph_scores, comm_scores, vector_scores, community_chunks, cfg);
    resp.candidate_count = candidates.size();

    std::vector<FusionInput> inputs;
    for (const auto& c : candidates) inputs.push_back({c, lookup(graph_scores, c), lookup(comm_scores, c)});
    auto fused = fuse(a.beta, inputs);

    std::vector<RetrievalResult> results;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        RetrievalResult r;
        r.chunk = candidates[i];
        r.s_graph = inputs[i].s_graph;
        r.s_comm = inputs[i].s_comm;
        r.s_vector = lookup(vector_scores, r.chunk);
        r.fused = fused[i];
        std::set<NodeId> entities;
        for (const auto& link : a.links) {
            if (!cfg.graph_channel) break;
            for (auto v : index.graph.neighborhood(link.id, cfg.khop).nodes) {
                if (index.graph.node(v).source_chunks.count(r.chunk)) {
                    entities.insert(link.id);
                    break;
                }
            }
        }
        r.entities.assign(entities.begin(), entities.end());
        if (auto it = index.chunk_communities.find(r.chunk); it != index.chunk_communities.end()) {
            for (auto id : it->second) {
                auto s = report_scores.find(id);
                if (s != report_scores.end() && s->second > 0.0) r.communities.push_back(id);
            }
            std::stable_sort(r.communities.begin(), r.communities.end(),
                             [&](std::size_t x, std::size_t y) { return report_scores[x] > report_scores[y]; });
        }
        results.push_back(std::move(r));
    }

    resp.results = rerank_select(query, std::move(results), clients.reranker, index.graph, cfg.final_k,
                                 &resp.diagnostics);
    return resp;
}

}  // namespace graphrag::retrieval
