#include "graphrag/community.hpp"
#include "graphrag/embedding.hpp"
#include "graphrag/error.hpp"
#include "graphrag/stubs.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace graphrag;
using namespace graphrag::community;
using graph::node_id;

namespace {

KnowledgeGraph from_edges(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                          const std::string& rel = "R") {
    KnowledgeGraph g;
    for (std::size_t i = 0; i < n; ++i) g.upsert_node("n" + std::to_string(i), "T", {}, "c0");
    for (auto [a, b] : edges) g.add_edge(node_id(a), rel, node_id(b), "c0");
    return g;
}

KnowledgeGraph two_triangles() { return from_edges(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}}); }

std::vector<NodeId> ids(std::initializer_list<std::size_t> xs) {
    std::vector<NodeId> out;
    for (auto x : xs) out.push_back(node_id(x));
    return out;
}

// Best Q_multi over every partition, by exhaustive enumeration with the literal oracle.
std::pair<double, Partition> brute_force(const KnowledgeGraph& g, double alpha) {
    auto a = oracle::adjacency(g);
    auto s = oracle::jaccard_matrix(g);
    double best = -1e300;
    std::vector<std::size_t> arg;
    oracle::for_each_partition(g.node_count(), [&](const std::vector<std::size_t>& labels) {
        double q = oracle::literal_qmulti(a, s, labels, alpha);
        if (q > best + 1e-12) {
            best = q;
            arg = labels;
        }
    });
    return {best, Partition::from_labels(arg)};
}

// Two 4-cliques joined by the bridge 3-4. Node 3 shares its attributes with the right clique.
KnowledgeGraph attribute_pull_fixture() {
    KnowledgeGraph g;
    for (std::size_t i = 0; i < 8; ++i) {
        graph::AttributeMap attrs;
        attrs["color"] = {i < 3 ? "red" : "blue"};
        attrs["era"] = {i < 3 ? "early" : "late"};
        g.upsert_node("n" + std::to_string(i), "T", attrs, "c0");
    }
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            g.add_edge(node_id(i), "R", node_id(j), "c0");
            g.add_edge(node_id(i + 4), "R", node_id(j + 4), "c0");
        }
    }
    g.add_edge(node_id(3), "R", node_id(4), "c0");
    return g;
}

}  // namespace

TEST_SUITE("community") {
    TEST_CASE("attribute similarity examples") {
        graph::AttributeMap a{{"year", {"475 BC"}}, {"location", {"Hubei"}}};
        graph::AttributeMap b{{"year", {"475 BC"}}};
        graph::AttributeMap c{{"color", {"red"}}};
        CHECK(attribute_similarity(a, a) == 1.0);
        CHECK(attribute_similarity(a, c) == 0.0);
        CHECK(attribute_similarity(a, b) == doctest::Approx(0.5));
        CHECK(attribute_similarity({}, {}) == 0.0);
        CHECK(attribute_similarity({{"Year", {"475 bc"}}}, b) == 1.0);
        CHECK(key_similarity(a, b, "year") == 1.0);
        CHECK(key_similarity(a, c, "year") == 0.0);
    }

    TEST_CASE("partitions renumber densely in order of first appearance") {
        auto p = Partition::from_labels({7, 3, 7, 9});
        CHECK(p.assignment == std::vector<std::size_t>{0, 1, 0, 2});
        CHECK(p.community_count == 3);
        CHECK(p.groups().size() == 3);
    }

    TEST_CASE("modularity examples") {
        auto g = two_triangles();
        // Each triangle: (6 - 36/12)/12 = 0.25; two of them give 0.5.
        CHECK(modularity_multi(g, Partition::from_labels({0, 0, 0, 1, 1, 1}), 0.0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(oracle::classical_modularity(oracle::adjacency(g), {0, 0, 0, 1, 1, 1}) == doctest::Approx(0.5));
        CHECK(std::abs(modularity_multi(g, Partition::from_labels({0, 0, 0, 0, 0, 0}), 0.0)) < 1e-12);

        KnowledgeGraph empty;
        CHECK_THROWS_AS(modularity_multi(empty, Partition{}, 0.0), Error);
        auto isolated = from_edges(3, {});
        CHECK_THROWS_AS(modularity_multi(isolated, Partition::singletons(3), 0.0), Error);
    }

    TEST_CASE("modularity matches the classical and literal oracles on random graphs") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            std::size_t n = 2 + rng() % 7;
            auto g = oracle::random_graph(rng, n, 0.4);
            auto a = oracle::adjacency(g);
            auto s = oracle::jaccard_matrix(g);
            std::vector<std::size_t> labels(n);
            for (auto& l : labels) l = rng() % 3;
            auto p = Partition::from_labels(labels);
            CHECK(std::abs(modularity_multi(g, p, 0.0) - oracle::classical_modularity(a, labels)) < 1e-9);
            for (double alpha : {0.5, 1.0, 2.5}) {
                CHECK(std::abs(modularity_multi(g, p, alpha, PairScope::FullPair) -
                               oracle::literal_qmulti(a, s, labels, alpha)) < 1e-9);
            }
        }
    }

    TEST_CASE("two-hop scope drops attribute pairs farther than two hops apart") {
        // Path 0-1-2-3 with matching attributes on the endpoints only.
        KnowledgeGraph g;
        for (std::size_t i = 0; i < 4; ++i) {
            graph::AttributeMap attrs;
            if (i == 0 || i == 3) attrs["k"] = {"v"};
            g.upsert_node("n" + std::to_string(i), "T", attrs, "c");
        }
        for (std::size_t i = 0; i < 3; ++i) g.add_edge(node_id(i), "R", node_id(i + 1), "c");
        auto p = Partition::from_labels({0, 0, 0, 0});
        const double structural = modularity_multi(g, p, 0.0);
        CHECK(modularity_multi(g, p, 1.0, PairScope::TwoHop) == doctest::Approx(structural));
        // Pair (0,3) counted twice over ordered pairs, S = 1, 2m = 6.
        CHECK(modularity_multi(g, p, 1.0, PairScope::FullPair) == doctest::Approx(structural + 2.0 / 6.0));
    }

    TEST_CASE("louvain examples") {
        ClusterParams params;
        params.alpha = 0.0;
        SUBCASE("two disjoint triangles") {
            auto g = two_triangles();
            auto p = louvain_cluster(g, params);
            CHECK(p == Partition::from_labels({0, 0, 0, 1, 1, 1}));
            CHECK(p == brute_force(g, 0.0).second);
        }
        SUBCASE("single edge joins both nodes") {
            auto g = from_edges(2, {{0, 1}});
            auto p = louvain_cluster(g, params);
            CHECK(p.community_count == 1);
            CHECK(modularity_multi(g, p, 0.0) == doctest::Approx(0.0));
            CHECK(modularity_multi(g, Partition::singletons(2), 0.0) == doctest::Approx(-0.5));
        }
        SUBCASE("attribute pull changes the optimum") {
            auto g = attribute_pull_fixture();
            params.pair_scope = PairScope::FullPair;
            auto [q0, p0] = brute_force(g, 0.0);
            auto [q2, p2] = brute_force(g, 2.0);
            CHECK(p0 == Partition::from_labels({0, 0, 0, 0, 1, 1, 1, 1}));
            CHECK(p2 == Partition::from_labels({0, 0, 0, 1, 1, 1, 1, 1}));
            CHECK(louvain_cluster(g, params) == p0);
            params.alpha = 2.0;
            auto found = louvain_cluster(g, params);
            CHECK(found == p2);
            CHECK(modularity_multi(g, found, 2.0) == doctest::Approx(q2).epsilon(1e-9));
        }
    }

    TEST_CASE("louvain never ends below singletons and its deltas are exact") {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 25; ++trial) {
            auto g = oracle::random_graph(rng, 4 + rng() % 9, 0.3);
            for (auto scope : {PairScope::TwoHop, PairScope::FullPair}) {
                ClusterParams params;
                params.alpha = 0.5 * static_cast<double>(trial % 4);
                params.pair_scope = scope;
                params.verify_deltas = true;
                LouvainStats stats;
                auto p = louvain_cluster(g, params, &stats);
                CHECK(stats.max_delta_error <= 1e-9);
                CHECK(modularity_multi(g, p, params.alpha, scope) >=
                      modularity_multi(g, Partition::singletons(g.node_count()), params.alpha, scope) - 1e-12);
                CHECK(stats.modularity == doctest::Approx(modularity_multi(g, p, params.alpha, scope)));
            }
        }
    }

    TEST_CASE("louvain is deterministic, and seeded shuffles are repeatable") {
        std::mt19937_64 rng(4);
        auto g = oracle::random_graph(rng, 30, 0.1);
        ClusterParams params;
        CHECK(louvain_cluster(g, params) == louvain_cluster(g, params));
        params.seed = 99;
        CHECK(louvain_cluster(g, params) == louvain_cluster(g, params));
    }

    TEST_CASE("completion examples") {
        SUBCASE("star center with one of four edges into the community") {
            // Community {1, 2} with 1-2; center 0 links to 1, 3, 4, 5.
            auto g = from_edges(6, {{1, 2}, {0, 1}, {0, 3}, {0, 4}, {0, 5}});
            Community c;
            c.members = ids({1, 2});
            CHECK(boundary_affinities(g, c.members).at(node_id(0)) == doctest::Approx(0.25));
            CHECK(complete_community(g, c, 0.25).completed_members == ids({0, 1, 2}));
            CHECK(complete_community(g, c, 0.2500001).completed_members == ids({1, 2}));
        }
        SUBCASE("tau zero absorbs every neighbour, tau one only fully internal ones") {
            auto g = from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {3, 4}, {1, 5}});
            Community c;
            c.members = ids({0, 1, 2});
            CHECK(complete_community(g, c, 0.0).completed_members == ids({0, 1, 2, 3, 5}));
            // Node 5 has a single edge, into the community.
            CHECK(complete_community(g, c, 1.0).completed_members == ids({0, 1, 2, 5}));
        }
        SUBCASE("no cascading through absorbed nodes") {
            auto g = from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
            Community c;
            c.members = ids({0, 1});
            CHECK(complete_community(g, c, 0.5).completed_members == ids({0, 1, 2}));
        }
    }

    TEST_CASE("completion properties on random graphs") {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 40; ++trial) {
            auto g = oracle::random_graph(rng, 12, 0.25, 2, false);
            auto a = oracle::adjacency(g);
            Community c;
            for (std::size_t i = 0; i < g.node_count(); ++i) {
                if (rng() % 3 == 0) c.members.push_back(node_id(i));
            }
            if (c.members.empty()) c.members.push_back(node_id(0));
            for (const auto& [u, aff] : boundary_affinities(g, c.members)) {
                CHECK(aff >= 0.0);
                CHECK(aff <= 1.0);
                double in = 0, deg = 0;
                for (std::size_t w = 0; w < a.size(); ++w) {
                    if (a[graph::index_of(u)][w] == 0) continue;
                    deg += 1;
                    in += std::count(c.members.begin(), c.members.end(), node_id(w)) ? 1 : 0;
                }
                CHECK(aff == doctest::Approx(in / deg));
            }
            std::vector<NodeId> previous;
            for (double tau : {1.0, 0.75, 0.5, 0.25, 0.0}) {
                auto done = complete_community(g, c, tau).completed_members;
                CHECK(std::includes(done.begin(), done.end(), c.members.begin(), c.members.end()));
                CHECK(std::includes(done.begin(), done.end(), previous.begin(), previous.end()));
                previous = done;
            }
        }
    }

    TEST_CASE("attribute clustering") {
        KnowledgeGraph g;
        for (auto [name, year] : std::vector<std::pair<std::string, std::string>>{
                 {"Bell", "Warring States"}, {"Box", "warring  states"}, {"Jade", "Warring States"},
                 {"Lamp", "Han"}, {"Suit", "Han"}, {"Sword", "Spring And Autumn"}}) {
            g.upsert_node(name, "Artifact", {{"year", {year}}}, "c");
        }
        g.upsert_node("Museum", "Museum", {}, "c");
        auto out = attribute_cluster(g, "year");
        REQUIRE(out.size() == 2);
        CHECK(out[0].dimension.value == "Han");
        CHECK(out[0].members.size() == 2);
        CHECK(out[1].dimension.value == "Warring States");
        CHECK(out[1].members.size() == 3);
        CHECK(attribute_cluster(g, "color").empty());
        CHECK(attribute_cluster(g, "year", 1).size() == 3);

        KnowledgeGraph multi;
        multi.upsert_node("a", "T", {{"year", {"1990", "1991"}}}, "c");
        multi.upsert_node("b", "T", {{"year", {"1990"}}}, "c");
        multi.upsert_node("c", "T", {{"year", {"1991"}}}, "c");
        auto both = attribute_cluster(multi, "year");
        REQUIRE(both.size() == 2);
        CHECK(both[0].members == ids({0, 1}));
        CHECK(both[1].members == ids({0, 2}));
    }

    TEST_CASE("multihop examples") {
        KnowledgeGraph g;
        auto a = g.upsert_node("a", "T", {}, "c");
        auto b = g.upsert_node("b", "T", {}, "c");
        auto c = g.upsert_node("c", "T", {}, "c");
        g.add_edge(a, "cause", b, "c");
        g.add_edge(b, "effect", c, "c");
        CHECK(multihop_subgraph(g, a, 2, {{"cause", "effect"}}).members == std::vector<NodeId>{a, b, c});
        CHECK(multihop_subgraph(g, a, 1, {{"cause", "effect"}}).members == std::vector<NodeId>{a, b});
        CHECK(multihop_subgraph(g, a, 2, {{"cause", "cause"}}).members == std::vector<NodeId>{a, b});
        CHECK(multihop_subgraph(g, a, 0, {}).members == std::vector<NodeId>{a});
        CHECK(multihop_subgraph(g, c, 3, {}).members == std::vector<NodeId>{c});
        CHECK(multihop_subgraph(g, a, 2, {{"Cause", "EFFECT"}}).members.size() == 3);
        CHECK_THROWS_AS(multihop_subgraph(g, node_id(9), 1, {}), Error);
    }

    TEST_CASE("multihop matches path enumeration and is monotone in the hop bound") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 30; ++trial) {
            auto g = oracle::random_graph(rng, 8, 0.25, 1, false, true);
            std::vector<std::vector<std::string>> patterns;
            if (trial % 3 == 1) patterns = {{"A", "B"}};
            if (trial % 3 == 2) patterns = {{"a", "a", "c"}, {"B"}};
            std::size_t root = rng() % g.node_count();
            std::size_t previous = 0;
            for (std::size_t hops = 0; hops <= 3; ++hops) {
                auto c = multihop_subgraph(g, node_id(root), hops, patterns);
                auto expect = oracle::multihop_nodes(g, root, hops, patterns);
                std::set<std::size_t> got;
                for (auto v : c.members) got.insert(graph::index_of(v));
                CHECK(got == expect);
                CHECK(got.size() >= previous);
                previous = got.size();
            }
        }
    }

    TEST_CASE("reports") {
        KnowledgeGraph g;
        g.add_chunk({"c1", "d", "The Bell is held by the Hubei Museum.", 0});
        auto bell = g.upsert_node("Bell", "Artifact", {{"year", {"Warring States"}}}, "c1");
        auto box = g.upsert_node("Box", "Artifact", {{"year", {"Warring States"}}}, "c1");
        auto museum = g.upsert_node("Hubei Museum", "Museum", {}, "c1");
        auto city = g.upsert_node("Wuhan", "Location", {}, "c1");
        g.add_edge(bell, "HeldBy", museum, "c1");
        g.add_edge(box, "HeldBy", museum, "c1");
        g.add_edge(museum, "LocatedIn", city, "c1");
        embedding::HashingEmbedder embedder(32);

        Community c;
        c.id = 4;
        c.members = {bell, box, museum};
        c = complete_community(g, c, 1.0);
        REQUIRE(c.completed_members.size() == 4);

        SUBCASE("template fallback names every entity") {
            auto r = generate_report(c, g, nullptr, embedder);
            CHECK(r.from_template);
            for (auto name : {"Bell", "Box", "Hubei Museum"}) CHECK(r.summary.find(name) != std::string::npos);
            CHECK(r.summary.find("Attribute histogram: year=Warring States (2)") != std::string::npos);
            CHECK(r.embedding.size() == 32);
            CHECK(r.source_chunks == std::vector<std::string>{"c1"});
        }
        SUBCASE("boundary relations reach the context") {
            auto ctx = report_context(c, g);
            CHECK(ctx.find("Wuhan (Location) [boundary]") != std::string::npos);
            CHECK(ctx.find("Hubei Museum LocatedIn Wuhan") != std::string::npos);
        }
        SUBCASE("echoing client") {
            stubs::FunctionChatClient echo(
                [](auto, std::string_view user) { return "TITLE: Echo\nSUMMARY: " + std::string(user); });
            auto r = generate_report(c, g, &echo, embedder);
            CHECK_FALSE(r.from_template);
            CHECK(r.title == "Echo");
            CHECK(r.summary.find("Attribute histogram:") != std::string::npos);
        }
        SUBCASE("failing client falls back with a diagnostic") {
            stubs::FunctionChatClient broken([](auto, auto) -> std::string { throw TransportError("down"); });
            std::vector<std::string> diags;
            auto r = generate_report(c, g, &broken, embedder, &diags);
            CHECK(r.from_template);
            CHECK(diags.size() == 1);
        }
    }

    TEST_CASE("community files round trip") {
        std::mt19937_64 rng(31);
        auto g = oracle::random_graph(rng, 14, 0.25);
        CommunityConfig cfg;
        cfg.attribute_keys = {"color"};
        cfg.multihop = {{"n0", 2, {}}};
        auto set = build_communities(g, cfg);
        embedding::HashingEmbedder embedder(16);
        auto reports = generate_reports(set.communities, g, nullptr, embedder, 2);
        auto data = serialize_communities(set, reports, 16);
        auto loaded = deserialize_communities(data, g);
        CHECK(loaded.set.topology == set.topology);
        CHECK(loaded.set.communities == set.communities);
        CHECK(loaded.reports == reports);
        CHECK(loaded.embedding_dimension == 16);
        CHECK(serialize_communities(loaded.set, loaded.reports, 16) == data);
        CHECK_THROWS_AS(deserialize_communities(data.substr(0, data.size() / 3), g), Error);
    }

    TEST_CASE("build_communities orders dimensions and warns on absent keys") {
        std::mt19937_64 rng(2);
        auto g = oracle::random_graph(rng, 10, 0.3);
        CommunityConfig cfg;
        cfg.attribute_keys = {"color", "weight"};
        cfg.multihop = {{"n1", 2, {}}};
        auto set = build_communities(g, cfg);
        std::size_t expected_id = 0;
        bool seen_attr = false, seen_hop = false;
        for (const auto& c : set.communities) {
            CHECK(c.id == expected_id++);
            if (c.dimension.kind == Dimension::Kind::Topology) CHECK_FALSE(seen_attr);
            if (c.dimension.kind == Dimension::Kind::Attribute) {
                seen_attr = true;
                CHECK_FALSE(seen_hop);
            }
            if (c.dimension.kind == Dimension::Kind::Multihop) seen_hop = true;
        }
        CHECK(seen_hop);
        CHECK(std::any_of(set.warnings.begin(), set.warnings.end(),
                          [](const std::string& w) { return w.find("weight") != std::string::npos; }));
    }
}
