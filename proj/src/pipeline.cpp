#include "graphrag/pipeline.hpp"

#include "graphrag/embedding.hpp"
#include "graphrag/error.hpp"
#include "graphrag/eval.hpp"
#include "graphrag/http_clients.hpp"
#include "graphrag/ontology.hpp"
#include "graphrag/stubs.hpp"
#include "graphrag/text.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace graphrag::pipeline {

using nlohmann::json;

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::Io, "write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot replace " + p.string() + ": " + ec.message());
}

namespace {

// Rejects keys outside `allowed` so that typos fail loudly.
void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw Error(ErrorCode::Config, where + " must be an object");
    for (const auto& [k, v] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw Error(ErrorCode::UnknownKey, where + ": unknown key '" + k + "'");
        }
    }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& dst, const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, where + "." + key + ": " + e.what());
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

extraction::Boundary parse_boundary(const std::string& s) {
    auto f = text::case_fold(s);
    if (f == "paragraph") return extraction::Boundary::Paragraph;
    if (f == "sentence") return extraction::Boundary::Sentence;
    if (f == "hard") return extraction::Boundary::Hard;
    throw Error(ErrorCode::Config, "chunking.split_preference: unknown boundary '" + s + "'");
}

std::string now_utc() {
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                    std::chrono::system_clock::now())));
}

ontology::OntologySchema load_schema_file(const fs::path& p) {
    if (p.empty()) throw Error(ErrorCode::Config, "configuration has no schema path");
    return ontology::load_schema(read_file(p));
}

json read_manifest(const fs::path& dir) {
    auto p = dir / kManifestFile;
    if (!fs::exists(p)) throw Error(ErrorCode::Io, "no index at " + dir.string() + " (manifest.json missing)");
    try {
        return json::parse(read_file(p));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::CorruptedRecord, "manifest.json: " + std::string(e.what()));
    }
}

void write_manifest(const fs::path& dir, const json& manifest) { write_file(dir / kManifestFile, manifest.dump(2) + "\n"); }

fs::path index_dir_of(const PipelineConfig& cfg, const CommandOptions& opts) {
    auto dir = opts.index_dir ? *opts.index_dir : cfg.index_dir;
    if (dir.empty()) throw Error(ErrorCode::Config, "no index directory configured");
    return dir;
}

retrieval::FusionConfig fusion_of(const PipelineConfig& cfg, const CommandOptions& opts) {
    auto f = cfg.fusion;
    if (opts.k) {
        f.final_k = *opts.k;
        f.topk_candidates = std::max(f.topk_candidates, f.final_k);
    }
    f.graph_channel = cfg.ablation.graph_channel;
    f.community_channel = cfg.ablation.community_channel;
    f.validate();
    return f;
}

}  // namespace

void PipelineConfig::validate() const {
    chunking.validate();
    cluster.params.validate();
    fusion.validate();
    if (workers == 0) throw Error(ErrorCode::Config, "extraction.workers must be positive");
    if (!(failure_threshold >= 0.0 && failure_threshold <= 1.0)) {
        throw Error(ErrorCode::Config, "extraction.failure_threshold must lie in [0, 1]");
    }
    if (clients.mode != "stub" && clients.mode != "http") {
        throw Error(ErrorCode::Config, "clients.mode must be 'stub' or 'http'");
    }
    if (clients.embedding_dimension == 0) throw Error(ErrorCode::Config, "clients.embedding_dimension must be positive");
    for (const auto& m : cluster.multihop) {
        if (m.root.empty() || m.hops == 0) throw Error(ErrorCode::Config, "cluster.multihop entries need a root and hops >= 1");
    }
}

std::string PipelineConfig::hash() const { return text::hex64(text::fnv1a64(raw.dump())); }

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
    PipelineConfig cfg;
    check_keys(doc, "config", {"schema", "corpus", "index_dir", "benchmark", "chunking", "extraction", "cluster",
                               "fusion", "clients", "ablation", "eval"});
    std::string schema, corpus, index_dir, benchmark;
    read_opt(doc, "schema", schema, "config");
    read_opt(doc, "corpus", corpus, "config");
    read_opt(doc, "index_dir", index_dir, "config");
    read_opt(doc, "benchmark", benchmark, "config");
    cfg.schema = resolve(base_dir, schema);
    cfg.corpus = resolve(base_dir, corpus);
    cfg.index_dir = resolve(base_dir, index_dir);
    cfg.benchmark = resolve(base_dir, benchmark);

    if (doc.contains("chunking")) {
        const auto& c = doc.at("chunking");
        check_keys(c, "chunking", {"max_chars", "overlap_chars", "split_preference"});
        read_opt(c, "max_chars", cfg.chunking.max_chars, "chunking");
        read_opt(c, "overlap_chars", cfg.chunking.overlap_chars, "chunking");
        if (c.contains("split_preference")) {
            cfg.chunking.split_preference.clear();
            for (const auto& b : c.at("split_preference")) cfg.chunking.split_preference.push_back(parse_boundary(b.get<std::string>()));
        }
    }
    if (doc.contains("extraction")) {
        const auto& e = doc.at("extraction");
        check_keys(e, "extraction", {"workers", "failure_threshold"});
        read_opt(e, "workers", cfg.workers, "extraction");
        read_opt(e, "failure_threshold", cfg.failure_threshold, "extraction");
    }
    if (doc.contains("cluster")) {
        const auto& c = doc.at("cluster");
        check_keys(c, "cluster", {"alpha", "tau", "max_passes", "min_community_size", "seed", "pair_scope",
                                  "similarity_key", "attribute_keys", "multihop"});
        auto& p = cfg.cluster.params;
        read_opt(c, "alpha", p.alpha, "cluster");
        read_opt(c, "tau", p.tau, "cluster");
        read_opt(c, "max_passes", p.max_passes, "cluster");
        read_opt(c, "min_community_size", p.min_community_size, "cluster");
        if (c.contains("seed") && !c.at("seed").is_null()) p.seed = c.at("seed").get<std::uint64_t>();
        if (c.contains("similarity_key") && !c.at("similarity_key").is_null()) {
            p.similarity_key = c.at("similarity_key").get<std::string>();
        }
        std::string scope = "two_hop";
        read_opt(c, "pair_scope", scope, "cluster");
        if (scope == "two_hop") {
            p.pair_scope = community::PairScope::TwoHop;
        } else if (scope == "full_pair") {
            p.pair_scope = community::PairScope::FullPair;
        } else {
            throw Error(ErrorCode::Config, "cluster.pair_scope must be 'two_hop' or 'full_pair'");
        }
        read_opt(c, "attribute_keys", cfg.cluster.attribute_keys, "cluster");
        if (c.contains("multihop")) {
            for (const auto& m : c.at("multihop")) {
                check_keys(m, "cluster.multihop[]", {"root", "hops", "patterns"});
                community::MultihopSpec spec;
                read_opt(m, "root", spec.root, "cluster.multihop[]");
                read_opt(m, "hops", spec.hops, "cluster.multihop[]");
                read_opt(m, "patterns", spec.patterns, "cluster.multihop[]");
                cfg.cluster.multihop.push_back(std::move(spec));
            }
        }
    }
    if (doc.contains("fusion")) {
        const auto& f = doc.at("fusion");
        check_keys(f, "fusion", {"w1", "w2", "khop", "topk_candidates", "final_k", "vector_k", "community_fanout"});
        read_opt(f, "w1", cfg.fusion.w1, "fusion");
        read_opt(f, "w2", cfg.fusion.w2, "fusion");
        read_opt(f, "khop", cfg.fusion.khop, "fusion");
        read_opt(f, "topk_candidates", cfg.fusion.topk_candidates, "fusion");
        read_opt(f, "final_k", cfg.fusion.final_k, "fusion");
        read_opt(f, "vector_k", cfg.fusion.vector_k, "fusion");
        read_opt(f, "community_fanout", cfg.fusion.community_fanout, "fusion");
    }
    if (doc.contains("clients")) {
        const auto& c = doc.at("clients");
        check_keys(c, "clients", {"mode", "stub_rules", "embedding_dimension", "chat_endpoint", "chat_model",
                                  "embed_endpoint", "embed_model", "rerank_endpoint", "rerank_model", "llm_reports"});
        auto& cc = cfg.clients;
        read_opt(c, "mode", cc.mode, "clients");
        std::string rules;
        read_opt(c, "stub_rules", rules, "clients");
        cc.stub_rules = resolve(base_dir, rules);
        read_opt(c, "embedding_dimension", cc.embedding_dimension, "clients");
        read_opt(c, "chat_endpoint", cc.chat_endpoint, "clients");
        read_opt(c, "chat_model", cc.chat_model, "clients");
        read_opt(c, "embed_endpoint", cc.embed_endpoint, "clients");
        read_opt(c, "embed_model", cc.embed_model, "clients");
        read_opt(c, "rerank_endpoint", cc.rerank_endpoint, "clients");
        read_opt(c, "rerank_model", cc.rerank_model, "clients");
        read_opt(c, "llm_reports", cc.llm_reports, "clients");
    }
    if (doc.contains("ablation")) {
        const auto& a = doc.at("ablation");
        check_keys(a, "ablation", {"schema", "graph_channel", "community_channel"});
        read_opt(a, "schema", cfg.ablation.schema, "ablation");
        read_opt(a, "graph_channel", cfg.ablation.graph_channel, "ablation");
        read_opt(a, "community_channel", cfg.ablation.community_channel, "ablation");
    }
    if (doc.contains("eval")) {
        const auto& e = doc.at("eval");
        check_keys(e, "eval", {"judge"});
        read_opt(e, "judge", cfg.judge, "eval");
    }
    cfg.raw = doc;
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
    return parse_config(doc, fs::absolute(path).parent_path());
}

void apply_ablation(PipelineConfig& cfg, const std::string& name) {
    auto n = text::case_fold(name);
    if (n == "schema") {
        cfg.ablation.schema = false;
        cfg.raw["ablation"]["schema"] = false;
    } else if (n == "community") {
        cfg.ablation.community_channel = false;
        cfg.raw["ablation"]["community_channel"] = false;
    } else if (n == "graph") {
        cfg.ablation.graph_channel = false;
        cfg.raw["ablation"]["graph_channel"] = false;
    } else {
        throw Error(ErrorCode::Config, "unknown ablation '" + name + "' (expected schema, community or graph)");
    }
}

Clients make_clients(const PipelineConfig& cfg, bool need_chat) {
    Clients c;
    const auto& cc = cfg.clients;
    if (cc.mode == "stub") {
        if (need_chat) {
            if (cc.stub_rules.empty()) throw Error(ErrorCode::Config, "stub mode needs clients.stub_rules");
            c.chat = std::make_unique<stubs::PatternStubChatClient>(
                stubs::PatternStubChatClient::from_json(read_file(cc.stub_rules)));
        }
        c.embedder = std::make_unique<embedding::HashingEmbedder>(cc.embedding_dimension);
        c.reranker = std::make_unique<embedding::OverlapReranker>();
        return c;
    }
    auto endpoint = [](const std::string& configured, const std::string& prefix, const std::string& model) {
        auto env = http::endpoint_from_env(prefix, model);
        if (env) return env;
        if (configured.empty()) return std::optional<http::Endpoint>{};
        const char* key = std::getenv((prefix + "_KEY").c_str());
        return std::optional<http::Endpoint>{http::Endpoint{configured, key ? key : "", model}};
    };
    if (need_chat || cc.llm_reports || cfg.judge) {
        auto ep = endpoint(cc.chat_endpoint, "GRAPHRAG_LLM", cc.chat_model);
        if (!ep) throw Error(ErrorCode::Config, "http mode needs GRAPHRAG_LLM_ENDPOINT or clients.chat_endpoint");
        c.chat = std::make_unique<http::OpenAIChatClient>(*ep);
    }
    auto embed = endpoint(cc.embed_endpoint, "GRAPHRAG_EMBED", cc.embed_model);
    if (!embed) throw Error(ErrorCode::Config, "http mode needs GRAPHRAG_EMBED_ENDPOINT or clients.embed_endpoint");
    c.embedder = std::make_unique<http::OpenAIEmbeddingClient>(*embed, cc.embedding_dimension);
    if (auto rerank = endpoint(cc.rerank_endpoint, "GRAPHRAG_RERANK", cc.rerank_model)) {
        c.reranker = std::make_unique<http::HttpRerankClient>(*rerank);
    } else {
        spdlog::warn("no rerank endpoint configured; results keep the fused order");
    }
    return c;
}

std::string serialize_embeddings(const embedding::VectorStore& store, const std::string& identity) {
    std::ostringstream os;
    os << json{{"kind", "meta"},
               {"format", "graphrag-embeddings"},
               {"version", 1},
               {"dimension", store.dimension()},
               {"embedder", identity},
               {"count", store.size()}}
              .dump()
       << '\n';
    for (std::size_t i = 0; i < store.size(); ++i) {
        os << json{{"kind", "vector"}, {"ref", store.refs()[i]}, {"vector", store.vector_at(i)}}.dump() << '\n';
    }
    return os.str();
}

embedding::VectorStore deserialize_embeddings(std::string_view data, std::size_t expected_dimension) {
    std::optional<embedding::VectorStore> store;
    std::size_t expected = 0;
    std::size_t line_no = 0;
    try {
        for (auto line : text::split(data, '\n')) {
            ++line_no;
            if (text::trim(line).empty()) continue;
            auto rec = json::parse(line);
            if (!store) {
                if (rec.at("kind") != "meta" || rec.at("format") != "graphrag-embeddings") {
                    throw Error(ErrorCode::CorruptedRecord, "embeddings file must start with a meta record");
                }
                if (rec.at("version").get<int>() != 1) throw Error(ErrorCode::VersionMismatch, "embeddings version");
                auto dim = rec.at("dimension").get<std::size_t>();
                if (dim != expected_dimension) {
                    throw Error(ErrorCode::DimensionMismatch, fmt::format("index embeddings have dimension {}, "
                                                                          "configured {}", dim, expected_dimension));
                }
                expected = rec.at("count").get<std::size_t>();
                store.emplace(dim);
            } else {
                store->add(rec.at("ref").get<std::string>(), rec.at("vector").get<Vector>());
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptedRecord, "embeddings line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!store || store->size() != expected) throw Error(ErrorCode::CorruptedRecord, "embeddings file is truncated");
    store->freeze();
    return std::move(*store);
}

retrieval::IndexBundle load_index(const fs::path& dir, std::size_t embedding_dimension) {
    read_manifest(dir);
    auto graph = graph::KnowledgeGraph::deserialize(read_file(dir / kGraphFile));
    auto vectors = deserialize_embeddings(read_file(dir / kEmbeddingsFile), embedding_dimension);
    if (!fs::exists(dir / kCommunitiesFile)) {
        throw Error(ErrorCode::Io, "no communities in " + dir.string() + "; run 'cluster' first");
    }
    auto loaded = community::deserialize_communities(read_file(dir / kCommunitiesFile), graph);
    if (loaded.embedding_dimension != embedding_dimension) {
        throw Error(ErrorCode::DimensionMismatch, "community report embeddings differ from the configured dimension");
    }
    return retrieval::IndexBundle::assemble(std::move(graph), std::move(loaded.set.communities),
                                            std::move(loaded.reports), std::move(vectors));
}

json response_to_json(const retrieval::RetrievalResponse& resp, const retrieval::IndexBundle& index) {
    const auto& g = index.graph;
    json links = json::array();
    for (const auto& l : resp.analysis.links) {
        const auto& n = g.node(l.id);
        links.push_back({{"id", graph::index_of(l.id)},
                         {"name", n.name},
                         {"type", n.entity_type},
                         {"span", {l.begin, l.end}},
                         {"confidence", l.confidence}});
    }
    std::map<std::size_t, const community::CommunityReport*> reports;
    for (const auto& r : index.reports) reports[r.community_id] = &r;
    json results = json::array();
    for (std::size_t i = 0; i < resp.results.size(); ++i) {
        const auto& r = resp.results[i];
        const auto* chunk = g.find_chunk(r.chunk);
        json entities = json::array();
        for (auto e : r.entities) entities.push_back(g.node(e).name);
        json comms = json::array();
        for (auto c : r.communities) {
            comms.push_back({{"id", c}, {"title", reports.count(c) ? reports[c]->title : std::string{}}});
        }
        results.push_back({{"rank", i + 1},
                           {"chunk", r.chunk},
                           {"document", chunk ? chunk->document_id : std::string{}},
                           {"s_graph", r.s_graph},
                           {"s_comm", r.s_comm},
                           {"s_vector", r.s_vector},
                           {"fused", r.fused},
                           {"rerank_score", r.rerank_score},
                           {"entities", entities},
                           {"communities", comms},
                           {"text", chunk ? chunk->text : std::string{}}});
    }
    return json{{"query", resp.analysis.query},
                {"beta", resp.analysis.beta},
                {"entity_density", resp.analysis.entity_density},
                {"abstraction_score", resp.analysis.abstraction_score},
                {"linked_entities", links},
                {"candidate_count", resp.candidate_count},
                {"results", results},
                {"diagnostics", resp.diagnostics}};
}

int cmd_schema_check(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& out) {
    auto schema = load_schema_file(cfg.schema);
    if (opts.json) {
        out << json{{"valid", true},
                    {"version", schema.version()},
                    {"entity_types", schema.entity_types().size()},
                    {"relations", schema.relations().size()},
                    {"prompt", ontology::schema_to_prompt(schema)}}
                   .dump(2)
            << '\n';
    } else {
        out << ontology::schema_to_prompt(schema);
    }
    return 0;
}

int cmd_index(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& out) {
    auto dir = index_dir_of(cfg, opts);
    auto schema = load_schema_file(cfg.schema);
    if (cfg.corpus.empty() || !fs::exists(cfg.corpus)) {
        throw Error(ErrorCode::Io, "corpus not found: " + cfg.corpus.string());
    }
    if (fs::exists(dir / kManifestFile) && !opts.force) {
        throw Error(ErrorCode::Io, "index already exists at " + dir.string() + "; pass --force to overwrite");
    }
    auto docs = extraction::load_corpus(cfg.corpus);
    if (docs.empty()) throw Error(ErrorCode::EmptyInput, "corpus has no documents: " + cfg.corpus.string());
    auto clients = make_clients(cfg, true);

    extraction::IndexOptions io;
    io.workers = cfg.workers;
    io.failure_threshold = cfg.failure_threshold;
    io.extract.enforce_schema = cfg.ablation.schema;
    auto built = extraction::index_corpus(docs, schema, *clients.chat, cfg.chunking, io);

    std::vector<std::string> ids, texts;
    for (const auto& [id, chunk] : built.graph.chunks()) {
        ids.push_back(id);
        texts.push_back(chunk.text);
    }
    auto vectors = clients.embedder->embed(texts);
    if (vectors.size() != texts.size()) throw Error(ErrorCode::DimensionMismatch, "embedder returned wrong count");
    embedding::VectorStore store(clients.embedder->dimension());
    for (std::size_t i = 0; i < ids.size(); ++i) store.add(ids[i], std::move(vectors[i]));
    store.freeze();

    std::ostringstream raw;
    for (const auto& r : built.raw_outputs) {
        raw << json{{"chunk", r.chunk_id}, {"output", r.output}, {"diagnostics", r.diagnostics}}.dump() << '\n';
    }

    fs::create_directories(dir);
    fs::remove(dir / kCommunitiesFile);
    write_file(dir / kGraphFile, built.graph.serialize());
    write_file(dir / kEmbeddingsFile, serialize_embeddings(store, clients.embedder->identity()));
    write_file(dir / kExtractionFile, raw.str());
    json manifest{{"format", "graphrag-index"},
                  {"version", 1},
                  {"config_hash", cfg.hash()},
                  {"created_at", now_utc()},
                  {"schema_version", schema.version()},
                  {"stopwords", std::string(retrieval::stopwords_version())},
                  {"clients",
                   {{"mode", cfg.clients.mode},
                    {"chat", clients.chat->identity()},
                    {"embedding", clients.embedder->identity()},
                    {"rerank", clients.reranker ? clients.reranker->identity() : std::string("none")}}},
                  {"ablation",
                   {{"schema", cfg.ablation.schema}}},
                  {"index",
                   {{"documents", docs.size()},
                    {"chunks", built.chunk_count},
                    {"nodes", built.graph.node_count()},
                    {"edges", built.graph.edge_count()},
                    {"failures", built.failures}}}};
    write_manifest(dir, manifest);
    if (opts.json) {
        out << manifest["index"].dump(2) << '\n';
    } else {
        out << fmt::format("indexed {} documents into {} chunks: {} nodes, {} edges, {} failed chunks -> {}\n",
                           docs.size(), built.chunk_count, built.graph.node_count(), built.graph.edge_count(),
                           built.failures.size(), dir.string());
    }
    return 0;
}

int cmd_cluster(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& out) {
    auto dir = index_dir_of(cfg, opts);
    auto manifest = read_manifest(dir);
    auto g = graph::KnowledgeGraph::deserialize(read_file(dir / kGraphFile));
    auto clients = make_clients(cfg, false);

    community::LouvainStats stats;
    auto set = community::build_communities(g, cfg.cluster, &stats);
    ChatClient* summarizer = cfg.clients.llm_reports ? clients.chat.get() : nullptr;
    std::vector<std::string> diagnostics;
    auto reports = community::generate_reports(set.communities, g, summarizer, *clients.embedder, cfg.workers,
                                               &diagnostics);
    write_file(dir / kCommunitiesFile,
               community::serialize_communities(set, reports, clients.embedder->dimension()));

    std::size_t topology = 0, attribute = 0, multihop = 0;
    for (const auto& c : set.communities) {
        switch (c.dimension.kind) {
        case community::Dimension::Kind::Topology: ++topology; break;
        case community::Dimension::Kind::Attribute: ++attribute; break;
        case community::Dimension::Kind::Multihop: ++multihop; break;
        }
    }
    manifest["cluster"] = {{"config_hash", cfg.hash()},
                           {"modularity", stats.modularity},
                           {"passes", stats.passes},
                           {"moves", stats.moves},
                           {"topology_groups", set.topology.community_count},
                           {"communities",
                            {{"topology", topology}, {"attribute", attribute}, {"multihop", multihop}}},
                           {"report_embedder", clients.embedder->identity()},
                           {"warnings", set.warnings},
                           {"diagnostics", diagnostics}};
    write_manifest(dir, manifest);
    if (opts.json) {
        out << manifest["cluster"].dump(2) << '\n';
    } else {
        out << fmt::format("Q_multi = {:.6f} after {} passes; {} topology, {} attribute, {} multihop communities\n",
                           stats.modularity, stats.passes, topology, attribute, multihop);
        for (const auto& w : set.warnings) out << "warning: " << w << '\n';
    }
    return 0;
}

int cmd_retrieve(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& out) {
    if (!opts.query || text::trim(*opts.query).empty()) throw Error(ErrorCode::Config, "retrieve needs --query");
    auto fusion = fusion_of(cfg, opts);
    auto dir = index_dir_of(cfg, opts);
    auto clients = make_clients(cfg, false);
    auto index = load_index(dir, clients.embedder->dimension());
    auto resp = retrieval::retrieve(*opts.query, index, {clients.embedder.get(), clients.reranker.get()}, fusion);
    if (opts.json) {
        out << response_to_json(resp, index).dump(2) << '\n';
        return 0;
    }
    out << fmt::format("beta = {:.4f} (entity density {:.4f}, abstraction {:.4f}); {} candidates\n",
                       resp.analysis.beta, resp.analysis.entity_density, resp.analysis.abstraction_score,
                       resp.candidate_count);
    for (std::size_t i = 0; i < resp.results.size(); ++i) {
        const auto& r = resp.results[i];
        const auto* chunk = index.graph.find_chunk(r.chunk);
        out << fmt::format("{:>2}. {}  rerank={:.4f} fused={:.4f} graph={:.4f} comm={:.4f} vector={:.4f}\n", i + 1,
                           r.chunk, r.rerank_score, r.fused, r.s_graph, r.s_comm, r.s_vector);
        if (chunk) out << "    " << text::collapse_whitespace(chunk->text.substr(0, 160)) << '\n';
    }
    for (const auto& d : resp.diagnostics) out << "note: " << d << '\n';
    return 0;
}

int cmd_eval(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& out) {
    auto fusion = fusion_of(cfg, opts);
    auto bench_path = opts.benchmark ? *opts.benchmark : cfg.benchmark;
    if (bench_path.empty()) throw Error(ErrorCode::Config, "eval needs a benchmark path");
    std::vector<std::string> diagnostics;
    auto queries = eval::parse_queries(read_file(bench_path), &diagnostics);
    auto dir = index_dir_of(cfg, opts);
    auto out_dir = opts.out_dir ? *opts.out_dir : dir;
    auto manifest = read_manifest(dir);
    auto clients = make_clients(cfg, false);
    auto index = load_index(dir, clients.embedder->dimension());

    struct Row {
        eval::QueryScore score;
        std::vector<std::string> chunks;
    };
    std::vector<Row> rows(queries.size());
    std::vector<std::exception_ptr> errors(queries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < queries.size(); i = next++) {
            try {
                const auto& q = queries[i];
                auto resp = retrieval::retrieve(q.question, index, {clients.embedder.get(), clients.reranker.get()},
                                                fusion);
                std::vector<std::string> texts;
                for (const auto& r : resp.results) {
                    rows[i].chunks.push_back(r.chunk);
                    texts.push_back(index.graph.find_chunk(r.chunk)->text);
                }
                auto s = cfg.judge ? eval::score_retrieval_judged(texts, q, *clients.chat)
                                   : eval::score_retrieval(texts, q);
                rows[i].score = {q.id, q.type, s};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < std::min(cfg.workers, queries.size()); ++w) pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<eval::QueryScore> scores;
    json per_query = json::array();
    for (const auto& r : rows) {
        scores.push_back(r.score);
        per_query.push_back({{"id", r.score.id},
                             {"type", eval::to_string(r.score.type)},
                             {"relevancy", r.score.score.relevancy},
                             {"recall", r.score.score.recall},
                             {"chunks", r.chunks}});
    }
    auto report = eval::aggregate(scores);
    report.diagnostics.insert(report.diagnostics.begin(), diagnostics.begin(), diagnostics.end());
    report.metadata = {{"config_hash", cfg.hash()},
                       {"index_config_hash", manifest.value("config_hash", std::string{})},
                       {"scorer", cfg.judge ? "llm-judge-v1" : "containment-v1"},
                       {"embedding", clients.embedder->identity()},
                       {"rerank", clients.reranker ? clients.reranker->identity() : std::string("none")},
                       {"judge", cfg.judge && clients.chat ? clients.chat->identity() : std::string("none")},
                       {"final_k", std::to_string(fusion.final_k)},
                       {"ablation", fmt::format("schema={} graph={} community={}", cfg.ablation.schema,
                                                fusion.graph_channel, fusion.community_channel)}};
    auto doc = eval::report_to_json(report);
    doc["queries"] = per_query;
    auto table = eval::render_table(report);
    fs::create_directories(out_dir);
    write_file(out_dir / kEvalReportFile, doc.dump(2) + "\n");
    write_file(out_dir / kEvalTableFile, table);
    out << (opts.json ? doc.dump(2) + "\n" : table);

    auto problems = eval::check_report(report);
    for (const auto& p : problems) spdlog::error("report invariant violated: {}", p);
    return problems.empty() ? 0 : 1;
}

}  // namespace graphrag::pipeline
