// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "graphrag/community.hpp"
#include "graphrag/error.hpp"
#include "graphrag/eval.hpp"
#include "graphrag/ontology.hpp"
#include "graphrag/pipeline.hpp"
#include "graphrag/retrieval.hpp"
#include "support/oracles.hpp"
#include "support/published_f1.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

namespace cm = graphrag::community;
namespace pl = graphrag::pipeline;
namespace rt = graphrag::retrieval;
namespace fs = std::filesystem;
using graphrag::graph::KnowledgeGraph;
using graphrag::graph::node_id;
using nlohmann::json;

namespace {

// Tolerances.
constexpr double kTableTol = 0.02;     // printed F1 cells carry two decimals
constexpr double kRoundTol = 0.005;    // half a unit in the last printed place
constexpr double kExactTol = 1e-9;     // objective and oracle agreement
constexpr double kProbTol = 1e-12;     // softmax identities
constexpr double kBetaTol = 1e-12;     // sigma(-ln 4) = 0.2
constexpr std::size_t kOptimalNeeded = 8;

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& why) {
        if (!ok && pass) detail = why;
        pass = pass && ok;
    }
};

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

// 1. Published table arithmetic.
Outcome table_arithmetic() {
    Outcome o;
    std::size_t matched = 0;
    for (std::size_t i = 0; i < published_f1::kCells.size(); ++i) {
        const auto& c = published_f1::kCells[i];
        const double got = graphrag::eval::f1(c.relevancy, c.recall);
        o.require(std::abs(got - harmonic(c.relevancy, c.recall)) < kExactTol, "f1 disagrees with the harmonic mean");
        if (i == published_f1::kMisprintedCell) continue;
        if (std::abs(got - c.f1) <= kTableTol) ++matched;
        else o.require(false, std::string(c.type) + "/" + std::string(c.method) + " F1 " + fmt_double(got));
    }
    const double dify = graphrag::eval::f1(46.00, 54.82);
    o.require(std::abs(dify - 50.03) <= kTableTol, "Dify average F1 " + fmt_double(dify));
    const double mean_of_f1 = (61.79 + 48.65 + 35.22) / 3.0;
    o.require(std::abs(mean_of_f1 - 50.03) > kTableTol, "average-of-F1 convention also matches");

    // Average row computed from the method's type rows, as aggregate() does.
    std::vector<graphrag::eval::QueryScore> rows{
        {"i", graphrag::eval::QueryType::Inference, {96.76, 84.53}},
        {"c", graphrag::eval::QueryType::Comparison, {60.28, 79.44}},
        {"t", graphrag::eval::QueryType::Temporal, {39.38, 79.52}},
    };
    auto avg = graphrag::eval::aggregate(rows).rows.back();
    o.require(std::abs(avg.relevancy - 65.47) <= kRoundTol, "Proposed mean relevancy " + fmt_double(avg.relevancy));
    o.require(std::abs(avg.recall - 81.16) <= kRoundTol, "Proposed mean recall " + fmt_double(avg.recall));
    o.require(std::abs(avg.f1 - 72.48) <= kTableTol, "Proposed F1 of averages " + fmt_double(avg.f1));
    const double printed = graphrag::eval::f1(64.47, 81.16);
    o.require(printed >= 71.86 - kRoundTol && printed <= 72.48 + kRoundTol,
              "F1(64.47, 81.16) outside [71.86, 72.48]: " + fmt_double(printed));
    if (o.pass) {
        o.detail = std::to_string(matched) + "/15 cells within 0.02; Dify avg 50.03; Proposed avg F1(" +
                   fmt_double(avg.relevancy) + ", 81.16) = " + fmt_double(avg.f1) +
                   " (printed Rel 64.47 is a misprint of 65.47; F1(64.47, 81.16) = " + fmt_double(printed) +
                   " lies in the band)";
    }
    return o;
}

// 2. Objective against independent oracles.
Outcome modularity_oracles() {
    Outcome o;
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 2 + rng() % 7;
        auto g = oracle::random_graph(rng, n, 0.45);
        auto a = oracle::adjacency(g);
        auto s = oracle::jaccard_matrix(g);
        for (int p = 0; p < 8; ++p) {
            std::vector<std::size_t> labels(n);
            for (auto& l : labels) l = rng() % (1 + rng() % n);
            auto part = cm::Partition::from_labels(labels);
            double d0 = std::abs(cm::modularity_multi(g, part, 0.0) - oracle::classical_modularity(a, labels));
            worst = std::max(worst, d0);
            for (double alpha : {0.5, 1.0}) {
                double d = std::abs(cm::modularity_multi(g, part, alpha, cm::PairScope::FullPair) -
                                    oracle::literal_qmulti(a, s, labels, alpha));
                worst = std::max(worst, d);
            }
        }
    }
    o.require(worst <= kExactTol, "max deviation " + fmt_double(worst));
    if (o.pass) o.detail = "25 graphs x 8 partitions, max |dQ| = " + fmt_double(worst);
    return o;
}

// 3. Louvain against exhaustive enumeration.
Outcome clustering_optimality() {
    Outcome o;
    std::mt19937_64 rng(7);
    std::size_t optimal = 0;
    std::string misses;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 4 + rng() % 4;
        auto g = oracle::random_graph(rng, n, 0.4);
        const double alpha = trial % 2 ? 1.0 : 0.5;
        auto a = oracle::adjacency(g);
        auto s = oracle::jaccard_matrix(g);
        double best = -1e300;
        oracle::for_each_partition(n, [&](const std::vector<std::size_t>& labels) {
            best = std::max(best, oracle::literal_qmulti(a, s, labels, alpha));
        });
        cm::ClusterParams params;
        params.alpha = alpha;
        params.pair_scope = cm::PairScope::FullPair;
        auto p = cm::louvain_cluster(g, params);
        const double q = oracle::literal_qmulti(a, s, p.assignment, alpha);
        std::vector<std::size_t> single(n);
        for (std::size_t i = 0; i < n; ++i) single[i] = i;
        const double q_single = oracle::literal_qmulti(a, s, single, alpha);
        o.require(q >= q_single - kExactTol, "instance " + std::to_string(trial) + " below singletons");
        if (std::abs(q - best) <= kExactTol) ++optimal;
        else misses += " #" + std::to_string(trial) + " (" + fmt_double(q) + " vs " + fmt_double(best) + ")";
    }
    o.require(optimal >= kOptimalNeeded, std::to_string(optimal) + "/10 optimal;" + misses);
    if (o.pass) o.detail = std::to_string(optimal) + "/10 at the exhaustive optimum, none below singletons" +
                           (misses.empty() ? "" : "; misses:" + misses);
    return o;
}

// 4. Boundary completion properties.
Outcome completion_properties() {
    Outcome o;
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 200 && o.pass; ++trial) {
        const std::size_t n = 3 + rng() % 12;
        auto g = oracle::random_graph(rng, n, 0.1 + 0.05 * static_cast<double>(rng() % 6), 2, false);
        auto a = oracle::adjacency(g);
        std::vector<bool> inside(n, false);
        cm::Community c;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng() % 3 == 0) inside[i] = true;
        }
        inside[rng() % n] = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (inside[i]) c.members.push_back(node_id(i));
        }
        // Oracle affinities from the binary adjacency.
        std::map<std::size_t, double> expect;
        for (std::size_t u = 0; u < n; ++u) {
            if (inside[u]) continue;
            double deg = 0, in = 0;
            for (std::size_t w = 0; w < n; ++w) {
                if (a[u][w] <= 0) continue;
                deg += 1;
                in += inside[w] ? 1 : 0;
            }
            if (in > 0) expect[u] = in / deg;
        }
        auto got = cm::boundary_affinities(g, c.members);
        o.require(got.size() == expect.size(), "boundary set differs");
        for (const auto& [u, aff] : got) {
            o.require(aff >= 0.0 && aff <= 1.0, "affinity out of range");
            auto it = expect.find(graphrag::graph::index_of(u));
            o.require(it != expect.end() && std::abs(it->second - aff) < kExactTol, "affinity differs from oracle");
        }
        std::vector<graphrag::graph::NodeId> previous;
        const double taus[] = {1.0, 0.8, 0.6, 0.5, 0.4, 0.25, 0.1, 0.0};
        for (double tau : taus) {
            auto done = cm::complete_community(g, c, tau);
            const auto& cm_ = done.completed_members;
            o.require(std::includes(cm_.begin(), cm_.end(), c.members.begin(), c.members.end()), "members not kept");
            o.require(std::includes(cm_.begin(), cm_.end(), previous.begin(), previous.end()), "tau monotonicity");
            std::set<std::size_t> oracle_set;
            for (std::size_t i = 0; i < n; ++i) {
                if (inside[i]) oracle_set.insert(i);
            }
            for (const auto& [u, aff] : expect) {
                if (aff >= tau) oracle_set.insert(u);
            }
            std::set<std::size_t> got_set;
            for (auto v : cm_) got_set.insert(graphrag::graph::index_of(v));
            o.require(got_set == oracle_set, "completed set differs from single-round oracle");
            if (tau == 0.0) {
                for (const auto& [u, aff] : expect) o.require(got_set.count(u) == 1, "tau = 0 left a neighbour out");
            }
            auto again = cm::complete_community(g, done, tau);
            o.require(again.completed_members == cm_, "completion is not idempotent");
            previous = cm_;
        }
    }
    if (o.pass) o.detail = "200 cases: subset, monotone in tau, affinity in [0,1] and equal to oracle, tau=0 absorbs all, single round";
    return o;
}

// 5. Multihop against path enumeration.
Outcome multihop_correctness() {
    Outcome o;
    std::mt19937_64 rng(55);
    const std::vector<std::string> rels{"A", "B", "C"};
    for (int trial = 0; trial < 100 && o.pass; ++trial) {
        const std::size_t n = 3 + rng() % 10;
        auto g = oracle::random_graph(rng, n, 0.12 + 0.02 * static_cast<double>(rng() % 5), 1, false, true);
        std::vector<std::vector<std::string>> patterns;
        const std::size_t count = rng() % 3;  // 0 = unrestricted
        for (std::size_t p = 0; p < count; ++p) {
            std::vector<std::string> pat;
            const std::size_t len = 1 + rng() % 2;
            for (std::size_t i = 0; i < len; ++i) pat.push_back(rels[rng() % 3]);
            patterns.push_back(pat);
        }
        const std::size_t root = rng() % n;
        const std::size_t hops = rng() % 4;
        auto c = cm::multihop_subgraph(g, node_id(root), hops, patterns);
        std::set<std::size_t> got;
        for (auto v : c.members) got.insert(graphrag::graph::index_of(v));
        o.require(got == oracle::multihop_nodes(g, root, hops, patterns),
                  "case " + std::to_string(trial) + " differs from enumeration");
    }
    if (o.pass) o.detail = "100 random directed graphs (<= 12 nodes, N <= 3) equal path enumeration";
    return o;
}

// 6. Constraint renormalization.
Outcome renormalization() {
    Outcome o;
    auto schema = graphrag::ontology::load_schema(R"({"version": "v",
        "entity_types": [{"name": "Person"}, {"name": "Organization"}, {"name": "City"}],
        "relations": [{"name": "WorksAt", "domain": ["Person"], "range": ["Organization"]},
                      {"name": "LocatedIn", "domain": ["Organization"], "range": ["City"]}]})");
    const std::vector<std::array<const char*, 3>> shapes{
        {"Person", "WorksAt", "Organization"}, {"Organization", "LocatedIn", "City"},
        {"Organization", "WorksAt", "Person"}, {"City", "LocatedIn", "Person"}, {"Person", "Founded", "Organization"}};
    std::mt19937_64 rng(606);
    std::normal_distribution<double> score(0.0, 4.0);
    for (int trial = 0; trial < 500 && o.pass; ++trial) {
        const std::size_t n = 1 + rng() % 8;
        std::vector<graphrag::ontology::CandidateTriple> cands;
        std::vector<double> valid_scores;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = shapes[rng() % shapes.size()];
            cands.push_back({"h" + std::to_string(i), s[0], s[1], "t" + std::to_string(i), s[2], score(rng), "c"});
            if (graphrag::ontology::validate_triple(cands.back(), schema)) valid_scores.push_back(cands.back().lm_score);
        }
        auto out = graphrag::ontology::renormalize_candidates(cands, schema);
        if (valid_scores.empty()) {
            o.require(!out.has_value(), "empty valid set not signalled");
            continue;
        }
        o.require(out.has_value() && out->size() == valid_scores.size(), "invalid candidates kept mass");
        if (!o.pass) break;
        double sum = 0;
        for (const auto& v : *out) sum += v.probability;
        o.require(std::abs(sum - 1.0) <= kProbTol, "probabilities sum to " + fmt_double(sum));
        auto expect = oracle::softmax(valid_scores);
        std::map<std::string, double> by_head;
        for (const auto& v : *out) by_head[v.triple.head_name] = v.probability;
        std::size_t k = 0;
        for (const auto& c : cands) {
            if (!graphrag::ontology::validate_triple(c, schema)) continue;
            o.require(std::abs(by_head[c.head_name] - expect[k++]) <= kProbTol, "differs from softmax oracle");
        }
        const double shift = score(rng) * 25.0;
        auto shifted = cands;
        for (auto& c : shifted) c.lm_score += shift;
        auto out2 = graphrag::ontology::renormalize_candidates(shifted, schema);
        for (std::size_t i = 0; i < out->size(); ++i) {
            o.require(std::abs(out->at(i).probability - out2->at(i).probability) <= kProbTol, "not shift invariant");
        }
    }
    if (o.pass) o.detail = "500 candidate sets: sum to one, shift invariant, invalid zero mass, equal to softmax oracle";
    return o;
}

// 7. Fusion weight contract.
Outcome beta_contract() {
    Outcome o;
    for (double x : {-1e6, -800.0, -40.0, -1.0, 0.0, 1.0, 40.0, 800.0, 1e6}) {
        const double s = rt::sigmoid(x);
        o.require(s > 0.0 && s < 1.0, "sigmoid(" + fmt_double(x) + ") not in (0,1)");
    }
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> dens(0.0, 1.0), ent(0.0, 5.0);
    for (int i = 0; i < 2000; ++i) {
        double n1 = dens(rng), n2 = dens(rng), h = ent(rng);
        if (n1 > n2) std::swap(n1, n2);
        o.require(rt::beta_from(n1, h, 4, 1) <= rt::beta_from(n2, h, 4, 1), "not monotone in density");
        double h1 = ent(rng), h2 = ent(rng), n = dens(rng);
        if (h1 > h2) std::swap(h1, h2);
        o.require(rt::beta_from(n, h1, 4, 1) >= rt::beta_from(n, h2, 4, 1), "not monotone in entropy");
    }
    KnowledgeGraph g;
    g.upsert_node("Hubei Provincial Museum", "Museum", {}, "c");
    auto trie = rt::build_trie(g);
    rt::FusionConfig cfg;
    auto a = rt::compute_beta("bronze ritual vessels significance", trie, cfg);
    o.require(a.entity_density == 0.0, "density should be 0");
    o.require(std::abs(a.abstraction_score - std::log(4.0)) <= kBetaTol, "entropy should be ln 4");
    o.require(std::abs(a.beta - 0.2) <= kBetaTol, "beta = " + fmt_double(a.beta));
    auto full = rt::compute_beta("Hubei Provincial Museum", trie, cfg);
    o.require(std::abs(full.beta - oracle::sigmoid(4.0)) <= kBetaTol, "fully linked beta");
    if (o.pass) o.detail = "sigma in (0,1) at extremes; 2000 monotone pairs; beta(ln 4 construction) = " + fmt_double(a.beta);
    return o;
}

// Topology optimum of the fixture graph, by exhaustive enumeration per
// connected component with two-hop-masked attribute similarity.
double brute_force_topology(const KnowledgeGraph& g, double alpha) {
    const auto a = oracle::adjacency(g);
    const auto s = oracle::jaccard_matrix(g);
    const std::size_t n = a.size();
    std::vector<std::vector<std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = oracle::hop_distances(g, i);
    std::vector<double> k(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j];
        two_m += k[i];
    }
    std::vector<bool> seen(n, false);
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        if (seen[r]) continue;
        std::vector<std::size_t> comp;
        for (std::size_t v = 0; v < n; ++v) {
            if (dist[r][v] != SIZE_MAX) {
                comp.push_back(v);
                seen[v] = true;
            }
        }
        double best = -1e300;
        oracle::for_each_partition(comp.size(), [&](const std::vector<std::size_t>& labels) {
            double q = 0.0;
            for (std::size_t x = 0; x < comp.size(); ++x) {
                for (std::size_t y = 0; y < comp.size(); ++y) {
                    if (labels[x] != labels[y]) continue;
                    const auto i = comp[x], j = comp[y];
                    q += a[i][j] - k[i] * k[j] / two_m;
                    if (i != j && dist[i][j] <= 2) q += alpha * s[i][j];
                }
            }
            best = std::max(best, q);
        });
        total += best;
    }
    return total / two_m;
}

// 8. End-to-end determinism against the committed goldens.
Outcome end_to_end(const fs::path& fixture, const fs::path& golden) {
    Outcome o;
    const std::string query = "Which artifacts are from the Warring States period?";
    const auto cfg = pl::load_config(fixture / "config.json");
    auto run = [&](const fs::path& dir) {
        fs::remove_all(dir);
        pl::CommandOptions opts;
        opts.index_dir = dir / "index";
        opts.out_dir = dir / "eval";
        std::ostringstream sink;
        pl::cmd_index(cfg, opts, sink);
        pl::cmd_cluster(cfg, opts, sink);
        std::ostringstream retrieved;
        auto ropts = opts;
        ropts.query = query;
        ropts.json = true;
        pl::cmd_retrieve(cfg, ropts, retrieved);
        pl::write_file(dir / "retrieve_museum.json", retrieved.str());
        pl::cmd_eval(cfg, opts, sink);
    };
    const auto base = fs::temp_directory_path() / "graphrag_acceptance";
    run(base / "a");
    run(base / "b");
    const std::vector<std::pair<std::string, std::string>> files{
        {"index/graph.jsonl", "graph.jsonl"},           {"index/embeddings.jsonl", "embeddings.jsonl"},
        {"index/extraction.jsonl", "extraction.jsonl"}, {"index/communities.jsonl", "communities.jsonl"},
        {"retrieve_museum.json", "retrieve_museum.json"}, {"eval/eval_report.json", "eval_report.json"},
        {"eval/eval_table.txt", "eval_table.txt"},
    };
    for (const auto& [produced, gold] : files) {
        const auto x = pl::read_file(base / "a" / produced);
        o.require(x == pl::read_file(base / "b" / produced), produced + " differs between runs");
        o.require(x == pl::read_file(golden / gold), produced + " differs from golden");
    }
    auto manifest = [](const fs::path& p) {
        auto m = json::parse(pl::read_file(p));
        m.erase("created_at");
        return m;
    };
    auto ma = manifest(base / "a" / "index" / "manifest.json");
    o.require(ma == manifest(base / "b" / "index" / "manifest.json"), "manifest differs between runs");
    o.require(ma == manifest(golden / "manifest.json"), "manifest differs from golden");

    auto resp = json::parse(pl::read_file(base / "a" / "retrieve_museum.json"));
    const auto& results = resp["results"];
    o.require(!results.empty(), "no results for the museum query");
    std::size_t ws_id = SIZE_MAX;
    auto bundle = pl::load_index(base / "a" / "index", cfg.clients.embedding_dimension);
    for (const auto& c : bundle.communities) {
        if (c.dimension.kind == cm::Dimension::Kind::Attribute && c.dimension.value == "Warring States") ws_id = c.id;
    }
    o.require(ws_id != SIZE_MAX, "no Warring States community");
    for (const auto& r : results) {
        bool in_ws = false;
        for (const auto& c : r["communities"]) in_ws = in_ws || c["id"].get<std::size_t>() == ws_id;
        o.require(in_ws && r["text"].get<std::string>().find("Warring States") != std::string::npos,
                  "result " + r["chunk"].get<std::string>() + " is not Warring States evidence");
    }

    // Golden topology partition against the exhaustive optimum.
    const auto& g = bundle.graph;
    auto meta = json::parse(pl::read_file(golden / "communities.jsonl").substr(0, pl::read_file(golden / "communities.jsonl").find('\n')));
    auto golden_partition = cm::Partition::from_labels(meta["topology_assignment"].get<std::vector<std::size_t>>());
    const double alpha = cfg.cluster.params.alpha;
    const double q_golden = cm::modularity_multi(g, golden_partition, alpha, cm::PairScope::TwoHop);
    const double q_best = brute_force_topology(g, alpha);
    o.require(std::abs(q_golden - q_best) <= kExactTol,
              "golden topology Q " + fmt_double(q_golden) + " vs optimum " + fmt_double(q_best));
    fs::remove_all(base);
    if (o.pass) {
        o.detail = "two runs byte-identical and equal to goldens; top " + std::to_string(results.size()) +
                   " results are Warring States evidence; golden topology Q = optimum " + fmt_double(q_best);
    }
    return o;
}

// 9. Fusion ranking laws.
Outcome fusion_laws() {
    Outcome o;
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto argmax = [](const std::vector<double>& v) {
        return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    };
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 12;
        std::vector<double> g(n), c(n);
        for (auto& x : g) x = u(rng);
        for (auto& x : c) x = u(rng);
        const double beta = 0.01 + 0.98 * u(rng);
        const double scale = 0.1 + 10.0 * u(rng);
        auto gs = g, cs = c;
        for (auto& x : gs) x *= scale;
        for (auto& x : cs) x *= scale;
        o.require(argmax(rt::mix(beta, g, c)) == argmax(rt::mix(beta, gs, cs)), "argmax changed under scaling");
        std::vector<double> flat(n, u(rng));
        auto fused = rt::mix(beta, g, flat);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (g[i] > g[j]) o.require(fused[i] > fused[j], "equal community scores changed the graph order");
            }
        }
    }
    // High beta with well-separated graph scores keeps the graph order.
    std::vector<rt::FusionInput> sep;
    const double comm[] = {1.0, 0.0, 0.7, 0.2, 0.9, 0.4};
    for (int i = 0; i < 6; ++i) sep.push_back({"c" + std::to_string(i), 0.2 * i, comm[i]});
    auto f = rt::fuse(0.98, sep);
    for (int i = 0; i + 1 < 6; ++i) o.require(f[i + 1] > f[i], "beta = 0.98 fixture does not follow the graph order");
    // Equal graph scores: the chunk in the better community ranks first for any beta < 1.
    for (double beta : {0.0 + 1e-6, 0.3, 0.5, 0.9, 0.999}) {
        auto t = rt::fuse(beta, {{"x", 0.5, 0.3}, {"y", 0.5, 0.8}, {"z", 0.1, 0.0}});
        o.require(t[1] > t[0], "community tie-break fails at beta " + fmt_double(beta));
    }
    if (o.pass) o.detail = "1000 random scalings keep the argmax; beta->1 fixture follows graph order; community breaks graph ties";
    return o;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    const fs::path fixture = fs::path(GRAPHRAG_FIXTURE_DIR) / "museum";
    const fs::path golden = fs::path(GRAPHRAG_GOLDEN_DIR) / "museum";
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"table arithmetic", table_arithmetic},
        {"modularity oracle equivalence", modularity_oracles},
        {"clustering optimality", clustering_optimality},
        {"completion properties", completion_properties},
        {"multihop correctness", multihop_correctness},
        {"constraint renormalization", renormalization},
        {"beta contract", beta_contract},
        {"end-to-end determinism", [&] { return end_to_end(fixture, golden); }},
        {"fusion ranking laws", fusion_laws},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        failed += o.pass ? 0 : 1;
    }
    return failed ? 1 : 0;
}
