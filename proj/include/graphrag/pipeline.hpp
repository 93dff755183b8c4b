#pragma once

#include "graphrag/clients.hpp"
#include "graphrag/community.hpp"
#include "graphrag/extraction.hpp"
#include "graphrag/retrieval.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace graphrag::pipeline {

namespace fs = std::filesystem;

struct ClientConfig {
    std::string mode = "stub";  // stub | http
    fs::path stub_rules;
    std::size_t embedding_dimension = 256;
    std::string chat_endpoint, chat_model;
    std::string embed_endpoint, embed_model;
    std::string rerank_endpoint, rerank_model;
    bool llm_reports = false;  // summarize communities with the chat client
};

struct Ablation {
    bool schema = true;
    bool graph_channel = true;
    bool community_channel = true;
};

struct PipelineConfig {
    fs::path schema;
    fs::path corpus;
    fs::path index_dir;
    fs::path benchmark;
    extraction::ChunkingConfig chunking;
    std::size_t workers = 4;
    double failure_threshold = 0.2;
    community::CommunityConfig cluster;
    retrieval::FusionConfig fusion;
    ClientConfig clients;
    Ablation ablation;
    bool judge = false;  // LLM-judged relevancy/recall instead of containment
    nlohmann::json raw;  // effective configuration document, hashed into the manifest

    void validate() const;
    std::string hash() const;
};

// Relative paths resolve against the configuration file's directory.
PipelineConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir);
PipelineConfig load_config(const fs::path& path);

// "schema", "community" or "graph".
void apply_ablation(PipelineConfig& cfg, const std::string& name);

struct Clients {
    std::unique_ptr<ChatClient> chat;
    std::unique_ptr<EmbeddingClient> embedder;
    std::unique_ptr<RerankClient> reranker;
};

Clients make_clients(const PipelineConfig& cfg, bool need_chat);

// Fixed file names inside an index directory.
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kGraphFile = "graph.jsonl";
inline constexpr const char* kEmbeddingsFile = "embeddings.jsonl";
inline constexpr const char* kExtractionFile = "extraction.jsonl";
inline constexpr const char* kCommunitiesFile = "communities.jsonl";
inline constexpr const char* kEvalReportFile = "eval_report.json";
inline constexpr const char* kEvalTableFile = "eval_table.txt";

std::string serialize_embeddings(const embedding::VectorStore& store, const std::string& identity);
embedding::VectorStore deserialize_embeddings(std::string_view data, std::size_t expected_dimension);

retrieval::IndexBundle load_index(const fs::path& dir, std::size_t embedding_dimension);

nlohmann::json response_to_json(const retrieval::RetrievalResponse& resp, const retrieval::IndexBundle& index);

struct CommandOptions {
    bool json = false;
    bool force = false;
    std::optional<std::size_t> k;
    std::optional<std::string> query;
    std::optional<fs::path> index_dir;
    std::optional<fs::path> benchmark;
    std::optional<fs::path> out_dir;
};

// Each command validates its inputs before writing anything and throws
// graphrag::Error on failure. The return value is the process exit status.
int cmd_schema_check(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_index(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_cluster(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_retrieve(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_eval(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& out);

std::string read_file(const fs::path& p);
void write_file(const fs::path& p, std::string_view content);

}  // namespace graphrag::pipeline
