#include "graphrag/community.hpp"

#include "graphrag/error.hpp"
#include "graphrag/text.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace graphrag::community {

using graph::index_of;
using graph::node_id;

Partition Partition::from_labels(const std::vector<std::size_t>& labels) {
    Partition p;
    std::map<std::size_t, std::size_t> dense;
    p.assignment.reserve(labels.size());
    for (auto l : labels) {
        auto [it, inserted] = dense.emplace(l, dense.size());
        p.assignment.push_back(it->second);
    }
    p.community_count = dense.size();
    return p;
}

Partition Partition::singletons(std::size_t n) {
    std::vector<std::size_t> labels(n);
    std::iota(labels.begin(), labels.end(), 0);
    return from_labels(labels);
}

std::vector<std::vector<NodeId>> Partition::groups() const {
    std::vector<std::vector<NodeId>> out(community_count);
    for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(node_id(i));
    return out;
}

void ClusterParams::validate() const {
    if (!std::isfinite(alpha) || alpha < 0.0) throw Error(ErrorCode::Config, "alpha must be finite and >= 0");
    if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::Config, "tau must lie in [0, 1]");
    if (max_passes == 0) throw Error(ErrorCode::Config, "max_passes must be positive");
}

std::string Dimension::label(const KnowledgeGraph& g) const {
    switch (kind) {
    case Kind::Topology: return "topology";
    case Kind::Attribute: return key + " = " + value;
    case Kind::Multihop: {
        std::string root_name = g.contains(root) ? g.node(root).name : std::to_string(index_of(root));
        return "multihop from " + root_name + " within " + std::to_string(hops) + " hops";
    }
    }
    return {};
}

namespace {

using PairSet = std::set<std::pair<std::string, std::string>>;

PairSet canonical_pairs(const graph::AttributeMap& a) {
    PairSet out;
    for (const auto& [k, values] : a) {
        auto key = text::canonical_name(k);
        for (const auto& v : values) out.emplace(key, text::canonical_name(v));
    }
    return out;
}

double jaccard(const PairSet& a, const PairSet& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& p : a) inter += b.count(p);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

struct PairSim {
    std::size_t i;
    std::size_t j;
    double s;
};

// Positive-similarity pairs i < j admitted by the scope.
std::vector<PairSim> similar_pairs(const KnowledgeGraph& g, PairScope scope,
                                   const std::optional<std::string>& key) {
    const auto n = g.node_count();
    std::vector<PairSet> pairs(n);
    std::vector<std::set<std::string>> key_values(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& attrs = g.nodes()[i].attributes;
        if (key) {
            auto it = attrs.find(text::canonical_name(*key));
            if (it != attrs.end()) {
                for (const auto& v : it->second) key_values[i].insert(text::canonical_name(v));
            }
        } else {
            pairs[i] = canonical_pairs(attrs);
        }
    }
    auto sim = [&](std::size_t i, std::size_t j) {
        if (key) {
            for (const auto& v : key_values[i]) {
                if (key_values[j].count(v)) return 1.0;
            }
            return 0.0;
        }
        return jaccard(pairs[i], pairs[j]);
    };
    auto has_attrs = [&](std::size_t i) { return key ? !key_values[i].empty() : !pairs[i].empty(); };

    std::vector<PairSim> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!has_attrs(i)) continue;
        std::set<std::size_t> partners;
        if (scope == PairScope::FullPair) {
            for (std::size_t j = i + 1; j < n; ++j) partners.insert(j);
        } else {
            for (const auto& [v, w] : g.undirected_neighbors(node_id(i))) {
                if (index_of(v) > i) partners.insert(index_of(v));
                for (const auto& [u, w2] : g.undirected_neighbors(v)) {
                    if (index_of(u) > i) partners.insert(index_of(u));
                }
            }
        }
        for (auto j : partners) {
            if (!has_attrs(j)) continue;
            double s = sim(i, j);
            if (s > 0.0) out.push_back({i, j, s});
        }
    }
    return out;
}

void require_modularity_defined(const KnowledgeGraph& g) {
    if (g.node_count() == 0) throw Error(ErrorCode::UndefinedModularity, "graph has no nodes");
    if (g.total_weight() <= 0.0) throw Error(ErrorCode::UndefinedModularity, "graph has no edges (m = 0)");
}

double modularity_with_pairs(const KnowledgeGraph& g, const std::vector<std::size_t>& labels, double alpha,
                             const std::vector<PairSim>& pairs) {
    const double two_m = 2.0 * g.total_weight();
    std::map<std::size_t, double> degree_sum;
    double internal = 0.0;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        for (const auto& [j, w] : g.undirected_neighbors(node_id(i))) {
            if (labels[i] == labels[index_of(j)]) internal += w;
            degree_sum[labels[i]] += w;
        }
    }
    double expected = 0.0;
    for (const auto& [c, k] : degree_sum) expected += k * k / two_m;
    double attr = 0.0;
    for (const auto& p : pairs) {
        if (labels[p.i] == labels[p.j]) attr += 2.0 * p.s;
    }
    return (internal - expected + alpha * attr) / two_m;
}

struct Level {
    std::vector<std::map<std::size_t, double>> w;
    std::vector<std::map<std::size_t, double>> s;
    std::vector<double> k;
};

}  // namespace

double attribute_similarity(const graph::AttributeMap& a, const graph::AttributeMap& b) {
    return jaccard(canonical_pairs(a), canonical_pairs(b));
}

double key_similarity(const graph::AttributeMap& a, const graph::AttributeMap& b, const std::string& key) {
    auto k = text::canonical_name(key);
    auto ia = a.find(k);
    auto ib = b.find(k);
    if (ia == a.end() || ib == b.end()) return 0.0;
    for (const auto& va : ia->second) {
        for (const auto& vb : ib->second) {
            if (text::canonical_name(va) == text::canonical_name(vb)) return 1.0;
        }
    }
    return 0.0;
}

double modularity_multi(const KnowledgeGraph& g, const Partition& p, double alpha, PairScope scope,
                        const std::optional<std::string>& similarity_key) {
    require_modularity_defined(g);
    if (p.assignment.size() != g.node_count()) {
        throw Error(ErrorCode::Config, "partition does not cover the graph");
    }
    auto pairs = alpha != 0.0 ? similar_pairs(g, scope, similarity_key) : std::vector<PairSim>{};
    return modularity_with_pairs(g, p.assignment, alpha, pairs);
}

Partition louvain_cluster(const KnowledgeGraph& g, const ClusterParams& params, LouvainStats* stats) {
    params.validate();
    require_modularity_defined(g);

    const std::size_t n = g.node_count();
    const double two_m = 2.0 * g.total_weight();
    const double alpha = params.alpha;
    const auto pairs = alpha != 0.0 ? similar_pairs(g, params.pair_scope, params.similarity_key)
                                    : std::vector<PairSim>{};

    Level level;
    level.w.resize(n);
    level.s.resize(n);
    level.k.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, w] : g.undirected_neighbors(node_id(i))) {
            level.w[i][index_of(j)] = w;
            level.k[i] += w;
        }
    }
    for (const auto& p : pairs) {
        level.s[p.i][p.j] += p.s;
        level.s[p.j][p.i] += p.s;
    }

    LouvainStats local;
    std::vector<std::size_t> labels(n);  // original node -> level node
    std::iota(labels.begin(), labels.end(), 0);
    std::optional<std::mt19937_64> rng;
    if (params.seed) rng.emplace(*params.seed);
    constexpr double kEps = 1e-12;

    for (std::size_t pass = 0; pass < params.max_passes; ++pass) {
        const std::size_t ln = level.k.size();
        std::vector<std::size_t> comm(ln);
        std::iota(comm.begin(), comm.end(), 0);
        std::vector<double> total(level.k);
        bool improved = false;

        auto projected = [&] {
            std::vector<std::size_t> out(n);
            for (std::size_t i = 0; i < n; ++i) out[i] = comm[labels[i]];
            return out;
        };

        std::vector<std::size_t> order(ln);
        std::iota(order.begin(), order.end(), 0);
        for (bool moved = true; moved;) {
            moved = false;
            if (rng) std::shuffle(order.begin(), order.end(), *rng);
            for (auto u : order) {
                const auto current = comm[u];
                std::map<std::size_t, std::pair<double, double>> links;  // community -> (edge weight, similarity)
                for (const auto& [v, w] : level.w[u]) links[comm[v]].first += w;
                if (alpha != 0.0) {
                    for (const auto& [v, s] : level.s[u]) links[comm[v]].second += s;
                }
                total[current] -= level.k[u];
                auto gain = [&](std::size_t c) {
                    auto it = links.find(c);
                    double wl = it == links.end() ? 0.0 : it->second.first;
                    double sl = it == links.end() ? 0.0 : it->second.second;
                    return wl - level.k[u] * total[c] / two_m + alpha * sl;
                };
                const double stay = gain(current);
                std::size_t best = current;
                double best_gain = -std::numeric_limits<double>::infinity();
                for (const auto& [c, unused] : links) {
                    if (c == current) continue;
                    double gc = gain(c);
                    if (gc > best_gain + kEps) {
                        best = c;
                        best_gain = gc;
                    }
                }
                if (best != current && best_gain - stay > kEps) {
                    double before = 0.0;
                    if (params.verify_deltas) before = modularity_with_pairs(g, projected(), alpha, pairs);
                    comm[u] = best;
                    total[best] += level.k[u];
                    moved = improved = true;
                    ++local.moves;
                    if (params.verify_deltas) {
                        double after = modularity_with_pairs(g, projected(), alpha, pairs);
                        double predicted = (best_gain - stay) / (two_m / 2.0);
                        local.max_delta_error = std::max(local.max_delta_error, std::abs(after - before - predicted));
                    }
                } else {
                    total[current] += level.k[u];
                }
            }
        }
        if (!improved) break;
        ++local.passes;

        std::map<std::size_t, std::size_t> dense;
        for (std::size_t u = 0; u < ln; ++u) dense.emplace(comm[u], dense.size());
        for (auto& l : labels) l = dense.at(comm[l]);

        Level next;
        const auto nc = dense.size();
        next.w.resize(nc);
        next.s.resize(nc);
        next.k.assign(nc, 0.0);
        for (std::size_t u = 0; u < ln; ++u) {
            const auto cu = dense.at(comm[u]);
            next.k[cu] += level.k[u];
            for (const auto& [v, w] : level.w[u]) {
                auto cv = dense.at(comm[v]);
                if (cu != cv) next.w[cu][cv] += w;
            }
            for (const auto& [v, s] : level.s[u]) {
                auto cv = dense.at(comm[v]);
                if (cu != cv) next.s[cu][cv] += s;
            }
        }
        level = std::move(next);
    }

    auto result = Partition::from_labels(labels);
    local.modularity = modularity_with_pairs(g, result.assignment, alpha, pairs);
    if (stats) *stats = local;
    return result;
}

std::map<NodeId, double> boundary_affinities(const KnowledgeGraph& g, const std::vector<NodeId>& members) {
    std::vector<bool> inside(g.node_count(), false);
    for (auto m : members) inside.at(index_of(m)) = true;
    std::map<NodeId, double> out;
    for (auto m : members) {
        for (const auto& [u, w] : g.undirected_neighbors(m)) {
            if (inside[index_of(u)] || out.count(u)) continue;
            std::size_t internal = 0;
            for (const auto& [x, wx] : g.undirected_neighbors(u)) internal += inside[index_of(x)] ? 1 : 0;
            out[u] = static_cast<double>(internal) / static_cast<double>(g.degree(u));
        }
    }
    return out;
}

namespace {

std::vector<graph::EdgeIndex> edges_within(const KnowledgeGraph& g, const std::vector<NodeId>& nodes) {
    std::vector<bool> inside(g.node_count(), false);
    for (auto v : nodes) inside[index_of(v)] = true;
    std::vector<graph::EdgeIndex> out;
    for (graph::EdgeIndex e = 0; e < g.edge_count(); ++e) {
        const auto& edge = g.edge(e);
        if (inside[index_of(edge.head)] && inside[index_of(edge.tail)]) out.push_back(e);
    }
    return out;
}

}  // namespace

Community complete_community(const KnowledgeGraph& g, Community community, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::Config, "tau must lie in [0, 1]");
    std::sort(community.members.begin(), community.members.end());
    std::set<NodeId> completed(community.members.begin(), community.members.end());
    for (const auto& [u, affinity] : boundary_affinities(g, community.members)) {
        if (affinity >= tau) completed.insert(u);
    }
    community.completed_members.assign(completed.begin(), completed.end());
    community.internal_edges = edges_within(g, community.completed_members);
    return community;
}

std::vector<Community> attribute_cluster(const KnowledgeGraph& g, const std::string& key,
                                         std::size_t min_community_size) {
    if (text::trim(key).empty()) throw Error(ErrorCode::Config, "attribute key is empty");
    const auto k = text::canonical_name(key);
    std::map<std::string, std::pair<std::string, std::set<NodeId>>> groups;  // canonical value -> (surface, members)
    for (const auto& n : g.nodes()) {
        auto it = n.attributes.find(k);
        if (it == n.attributes.end()) continue;
        for (const auto& v : it->second) {
            auto& slot = groups[text::canonical_name(v)];
            if (slot.first.empty()) slot.first = v;
            slot.second.insert(n.id);
        }
    }
    std::vector<Community> out;
    for (auto& [canon, group] : groups) {
        if (group.second.size() < min_community_size) continue;
        Community c;
        c.id = out.size();
        c.dimension = {Dimension::Kind::Attribute, k, group.first, NodeId{}, 0};
        c.members.assign(group.second.begin(), group.second.end());
        c.completed_members = c.members;
        c.internal_edges = edges_within(g, c.members);
        out.push_back(std::move(c));
    }
    return out;
}

Community multihop_subgraph(const KnowledgeGraph& g, NodeId root, std::size_t hops,
                            const std::vector<std::vector<std::string>>& patterns) {
    g.node(root);
    std::vector<std::vector<std::string>> folded;
    for (const auto& p : patterns) {
        std::vector<std::string> f;
        for (const auto& r : p) f.push_back(text::case_fold(text::trim(r)));
        folded.push_back(std::move(f));
    }
    std::vector<std::string> sequence;
    auto prefix_matches = [&] {
        if (folded.empty()) return true;
        return std::any_of(folded.begin(), folded.end(), [&](const std::vector<std::string>& p) {
            return sequence.size() <= p.size() && std::equal(sequence.begin(), sequence.end(), p.begin());
        });
    };

    std::set<NodeId> reached{root};
    std::vector<bool> on_path(g.node_count(), false);
    on_path[index_of(root)] = true;
    auto dfs = [&](auto&& self, NodeId u, std::size_t depth) -> void {
        if (depth == hops) return;
        for (auto e : g.out_edges(u)) {
            const auto& edge = g.edge(e);
            if (on_path[index_of(edge.tail)]) continue;
            sequence.push_back(text::case_fold(edge.relation));
            if (prefix_matches()) {
                reached.insert(edge.tail);
                on_path[index_of(edge.tail)] = true;
                self(self, edge.tail, depth + 1);
                on_path[index_of(edge.tail)] = false;
            }
            sequence.pop_back();
        }
    };
    dfs(dfs, root, 0);

    Community c;
    c.dimension = {Dimension::Kind::Multihop, {}, {}, root, hops};
    c.members.assign(reached.begin(), reached.end());
    c.completed_members = c.members;
    c.internal_edges = edges_within(g, c.members);
    return c;
}

CommunitySet build_communities(const KnowledgeGraph& g, const CommunityConfig& cfg, LouvainStats* stats) {
    cfg.params.validate();
    CommunitySet out;
    out.topology = louvain_cluster(g, cfg.params, stats);
    for (auto& members : out.topology.groups()) {
        if (members.size() < cfg.params.min_community_size) continue;
        Community c;
        c.id = out.communities.size();
        c.members = std::move(members);
        out.communities.push_back(complete_community(g, std::move(c), cfg.params.tau));
    }
    for (const auto& key : cfg.attribute_keys) {
        auto dims = attribute_cluster(g, key, cfg.params.min_community_size);
        if (dims.empty()) {
            out.warnings.push_back("attribute key '" + key + "' produced no communities");
            spdlog::warn("{}", out.warnings.back());
        }
        for (auto& c : dims) {
            c.id = out.communities.size();
            out.communities.push_back(std::move(c));
        }
    }
    for (const auto& spec : cfg.multihop) {
        auto roots = g.find_by_name(spec.root);
        if (roots.empty()) {
            out.warnings.push_back("multihop root '" + spec.root + "' is not in the graph");
            spdlog::warn("{}", out.warnings.back());
            continue;
        }
        for (auto root : roots) {
            auto c = multihop_subgraph(g, root, spec.hops, spec.patterns);
            if (c.members.size() < cfg.params.min_community_size) {
                out.warnings.push_back("multihop community from '" + spec.root + "' is below the minimum size");
                continue;
            }
            c.id = out.communities.size();
            out.communities.push_back(std::move(c));
        }
    }
    return out;
}

namespace {

std::string format_attributes(const graph::AttributeMap& attrs) {
    std::string out;
    for (const auto& [k, values] : attrs) {
        for (const auto& v : values) {
            if (!out.empty()) out += "; ";
            out += k + "=" + v;
        }
    }
    return out;
}

std::string relation_line(const KnowledgeGraph& g, graph::EdgeIndex e) {
    const auto& edge = g.edge(e);
    return g.node(edge.head).name + " " + edge.relation + " " + g.node(edge.tail).name;
}

std::string histogram_line(const Community& c, const KnowledgeGraph& g) {
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (auto v : c.completed_members) {
        for (const auto& [k, values] : g.node(v).attributes) {
            for (const auto& value : values) ++counts[{k, value}];
        }
    }
    std::vector<std::pair<std::pair<std::string, std::string>, std::size_t>> rows(counts.begin(), counts.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::string out = "Attribute histogram:";
    if (rows.empty()) return out + " none";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += (i ? "; " : " ") + rows[i].first.first + "=" + rows[i].first.second + " (" +
               std::to_string(rows[i].second) + ")";
    }
    return out;
}

std::vector<graph::ChunkId> report_chunks(const Community& c, const KnowledgeGraph& g) {
    std::set<graph::ChunkId> chunks;
    for (auto v : c.completed_members) {
        const auto& src = g.node(v).source_chunks;
        chunks.insert(src.begin(), src.end());
    }
    return {chunks.begin(), chunks.end()};
}

std::string template_title(const Community& c, const KnowledgeGraph& g) {
    std::string title = c.dimension.label(g) + ":";
    for (std::size_t i = 0; i < c.members.size() && i < 3; ++i) {
        title += (i ? ", " : " ") + g.node(c.members[i]).name;
    }
    if (c.members.size() > 3) title += ", ...";
    return title;
}

std::string dimension_sentence(const Community& c, const KnowledgeGraph& g) {
    switch (c.dimension.kind) {
    case Dimension::Kind::Topology: return "Densely connected entity community.";
    case Dimension::Kind::Attribute:
        return "Entities grouped by " + c.dimension.key + " = " + c.dimension.value + ".";
    case Dimension::Kind::Multihop: return "Relation chains " + c.dimension.label(g) + ".";
    }
    return {};
}

std::string template_summary(const Community& c, const KnowledgeGraph& g) {
    std::ostringstream os;
    os << dimension_sentence(c, g) << "\nEntities: ";
    for (std::size_t i = 0; i < c.completed_members.size(); ++i) {
        const auto& n = g.node(c.completed_members[i]);
        os << (i ? "; " : "") << n.name << " (" << n.entity_type << ")";
    }
    os << "\nRelations: ";
    for (std::size_t i = 0; i < c.internal_edges.size(); ++i) os << (i ? "; " : "") << relation_line(g, c.internal_edges[i]);
    if (c.internal_edges.empty()) os << "none";
    os << "\n" << histogram_line(c, g) << "\n";
    return os.str();
}

constexpr std::string_view kReportSystemPrompt =
    "You write community reports for a knowledge graph. Using only the context, reply with a line "
    "'TITLE: <short title>' followed by 'SUMMARY: <one paragraph summary>'. Mention every entity, "
    "the key relations and the shared attributes.";

}  // namespace

std::string report_context(const Community& c, const KnowledgeGraph& g) {
    std::vector<bool> core(g.node_count(), false);
    for (auto v : c.members) core[index_of(v)] = true;
    std::ostringstream os;
    os << "Community " << c.id << " (" << c.dimension.label(g) << ")\n";
    os << "Entities:\n";
    for (auto v : c.completed_members) {
        const auto& n = g.node(v);
        os << "- " << n.name << " (" << n.entity_type << ")";
        if (!core[index_of(v)]) os << " [boundary]";
        auto attrs = format_attributes(n.attributes);
        if (!attrs.empty()) os << " attributes: " << attrs;
        os << "\n";
    }
    os << "Relations:\n";
    for (auto e : c.internal_edges) os << "- " << relation_line(g, e) << "\n";
    os << histogram_line(c, g) << "\n";
    os << "Excerpts:\n";
    auto chunks = report_chunks(c, g);
    for (std::size_t i = 0; i < chunks.size() && i < 5; ++i) {
        if (const auto* chunk = g.find_chunk(chunks[i])) {
            os << "- [" << chunk->id << "] " << text::collapse_whitespace(chunk->text.substr(0, 200)) << "\n";
        }
    }
    return os.str();
}

CommunityReport generate_report(const Community& c, const KnowledgeGraph& g, ChatClient* client,
                                EmbeddingClient& embedder, std::vector<std::string>* diagnostics) {
    if (c.members.empty()) throw Error(ErrorCode::EmptyInput, "community " + std::to_string(c.id) + " is empty");
    CommunityReport r;
    r.community_id = c.id;
    r.dimension = c.dimension;
    for (auto v : c.completed_members) r.member_names.push_back(g.node(v).name);
    for (auto e : c.internal_edges) r.key_relations.push_back(relation_line(g, e));
    r.source_chunks = report_chunks(c, g);

    if (client) {
        try {
            auto reply = client->complete(kReportSystemPrompt, report_context(c, g), 0.0);
            auto title_at = reply.find("TITLE:");
            auto summary_at = reply.find("SUMMARY:");
            if (title_at != std::string::npos && summary_at != std::string::npos && summary_at > title_at) {
                r.title = text::collapse_whitespace(reply.substr(title_at + 6, summary_at - title_at - 6));
                r.summary = std::string(text::trim(reply.substr(summary_at + 8)));
            } else {
                r.summary = std::string(text::trim(reply));
            }
        } catch (const std::exception& e) {
            if (diagnostics) diagnostics->push_back("community " + std::to_string(c.id) + ": summarizer failed: " + e.what());
            r.summary.clear();
        }
    }
    if (r.summary.empty()) {
        r.summary = template_summary(c, g);
        r.from_template = true;
    }
    if (r.title.empty()) r.title = template_title(c, g);

    auto vectors = embedder.embed({r.summary});
    if (vectors.size() != 1 || vectors.front().size() != embedder.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "embedder returned a malformed vector for community " +
                                                      std::to_string(c.id));
    }
    r.embedding = std::move(vectors.front());
    return r;
}

std::vector<CommunityReport> generate_reports(const std::vector<Community>& communities, const KnowledgeGraph& g,
                                              ChatClient* client, EmbeddingClient& embedder, std::size_t workers,
                                              std::vector<std::string>* diagnostics) {
    std::vector<std::optional<CommunityReport>> out(communities.size());
    std::vector<std::vector<std::string>> diags(communities.size());
    std::vector<std::exception_ptr> errors(communities.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < communities.size(); i = next++) {
            try {
                out[i] = generate_report(communities[i], g, client, embedder, &diags[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < std::min(workers, communities.size()); ++w) pool.emplace_back(worker);
        worker();
    }
    std::vector<CommunityReport> reports;
    for (std::size_t i = 0; i < communities.size(); ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        if (diagnostics) diagnostics->insert(diagnostics->end(), diags[i].begin(), diags[i].end());
        reports.push_back(std::move(*out[i]));
    }
    return reports;
}

namespace {

using nlohmann::json;

json dimension_json(const Dimension& d) {
    switch (d.kind) {
    case Dimension::Kind::Topology: return json{{"kind", "topology"}};
    case Dimension::Kind::Attribute: return json{{"kind", "attribute"}, {"key", d.key}, {"value", d.value}};
    case Dimension::Kind::Multihop:
        return json{{"kind", "multihop"}, {"root", index_of(d.root)}, {"hops", d.hops}};
    }
    return {};
}

Dimension dimension_from_json(const json& j) {
    Dimension d;
    auto kind = j.at("kind").get<std::string>();
    if (kind == "topology") {
        d.kind = Dimension::Kind::Topology;
    } else if (kind == "attribute") {
        d.kind = Dimension::Kind::Attribute;
        d.key = j.at("key").get<std::string>();
        d.value = j.at("value").get<std::string>();
    } else if (kind == "multihop") {
        d.kind = Dimension::Kind::Multihop;
        d.root = node_id(j.at("root").get<std::size_t>());
        d.hops = j.at("hops").get<std::size_t>();
    } else {
        throw Error(ErrorCode::CorruptedRecord, "unknown community dimension '" + kind + "'");
    }
    return d;
}

std::vector<std::size_t> ids_of(const std::vector<NodeId>& nodes) {
    std::vector<std::size_t> out;
    for (auto v : nodes) out.push_back(index_of(v));
    return out;
}

std::vector<NodeId> nodes_of(const json& j, const KnowledgeGraph& g) {
    std::vector<NodeId> out;
    for (auto i : j.get<std::vector<std::size_t>>()) {
        if (!g.contains(node_id(i))) throw Error(ErrorCode::CorruptedRecord, "community references unknown node");
        out.push_back(node_id(i));
    }
    return out;
}

}  // namespace

std::string serialize_communities(const CommunitySet& set, const std::vector<CommunityReport>& reports,
                                  std::size_t embedding_dimension) {
    std::ostringstream os;
    json meta{{"kind", "meta"},
              {"format", "graphrag-communities"},
              {"version", 1},
              {"embedding_dimension", embedding_dimension},
              {"communities", set.communities.size()},
              {"reports", reports.size()},
              {"topology_assignment", set.topology.assignment},
              {"warnings", set.warnings}};
    os << meta.dump() << '\n';
    for (const auto& c : set.communities) {
        json rec{{"kind", "community"},
                 {"id", c.id},
                 {"dimension", dimension_json(c.dimension)},
                 {"members", ids_of(c.members)},
                 {"completed_members", ids_of(c.completed_members)},
                 {"internal_edges", c.internal_edges}};
        os << rec.dump() << '\n';
    }
    for (const auto& r : reports) {
        json rec{{"kind", "report"},
                 {"community_id", r.community_id},
                 {"title", r.title},
                 {"summary", r.summary},
                 {"dimension", dimension_json(r.dimension)},
                 {"members", r.member_names},
                 {"relations", r.key_relations},
                 {"source_chunks", r.source_chunks},
                 {"template", r.from_template},
                 {"embedding", r.embedding}};
        os << rec.dump() << '\n';
    }
    return os.str();
}

LoadedCommunities deserialize_communities(std::string_view data, const KnowledgeGraph& g) {
    LoadedCommunities out;
    std::size_t expected_communities = 0, expected_reports = 0;
    bool saw_meta = false;
    std::size_t line_no = 0;
    try {
        for (auto line : text::split(data, '\n')) {
            ++line_no;
            if (text::trim(line).empty()) continue;
            auto rec = json::parse(line);
            auto kind = rec.at("kind").get<std::string>();
            if (!saw_meta) {
                if (kind != "meta" || rec.at("format") != "graphrag-communities") {
                    throw Error(ErrorCode::CorruptedRecord, "community file must start with a meta record");
                }
                if (rec.at("version").get<int>() != 1) throw Error(ErrorCode::VersionMismatch, "community file version");
                out.embedding_dimension = rec.at("embedding_dimension").get<std::size_t>();
                expected_communities = rec.at("communities").get<std::size_t>();
                expected_reports = rec.at("reports").get<std::size_t>();
                auto labels = rec.at("topology_assignment").get<std::vector<std::size_t>>();
                if (labels.size() != g.node_count()) {
                    throw Error(ErrorCode::CorruptedRecord, "topology assignment does not cover the graph");
                }
                out.set.topology = Partition::from_labels(labels);
                out.set.warnings = rec.at("warnings").get<std::vector<std::string>>();
                saw_meta = true;
            } else if (kind == "community") {
                Community c;
                c.id = rec.at("id").get<std::size_t>();
                c.dimension = dimension_from_json(rec.at("dimension"));
                c.members = nodes_of(rec.at("members"), g);
                c.completed_members = nodes_of(rec.at("completed_members"), g);
                c.internal_edges = rec.at("internal_edges").get<std::vector<graph::EdgeIndex>>();
                out.set.communities.push_back(std::move(c));
            } else if (kind == "report") {
                CommunityReport r;
                r.community_id = rec.at("community_id").get<std::size_t>();
                r.title = rec.at("title").get<std::string>();
                r.summary = rec.at("summary").get<std::string>();
                r.dimension = dimension_from_json(rec.at("dimension"));
                r.member_names = rec.at("members").get<std::vector<std::string>>();
                r.key_relations = rec.at("relations").get<std::vector<std::string>>();
                r.source_chunks = rec.at("source_chunks").get<std::vector<graph::ChunkId>>();
                r.from_template = rec.at("template").get<bool>();
                r.embedding = rec.at("embedding").get<Vector>();
                if (r.embedding.size() != out.embedding_dimension) {
                    throw Error(ErrorCode::DimensionMismatch, "report embedding dimension");
                }
                out.reports.push_back(std::move(r));
            } else {
                throw Error(ErrorCode::CorruptedRecord, "unknown record kind '" + kind + "'");
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptedRecord, "communities line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!saw_meta || out.set.communities.size() != expected_communities || out.reports.size() != expected_reports) {
        throw Error(ErrorCode::CorruptedRecord, "community file is truncated");
    }
    return out;
}

}  // namespace graphrag::community
