#pragma once

#include "graphrag/clients.hpp"
#include "graphrag/graph_store.hpp"
#include "graphrag/ontology.hpp"
#include "graphrag/retry.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace graphrag::extraction {

enum class Boundary { Paragraph, Sentence, Hard };

struct ChunkingConfig {
    std::size_t max_chars = 1200;
    std::size_t overlap_chars = 200;
    std::vector<Boundary> split_preference{Boundary::Paragraph, Boundary::Sentence, Boundary::Hard};

    void validate() const;
};

// Splits `body` into overlapping chunks of at most max_chars bytes. Cuts
// prefer the last boundary of the first preferred kind inside the window;
// the next chunk starts overlap_chars before the cut, snapped forward to a
// word start. Chunk ids are "<doc_id>#<4-digit index>".
std::vector<graph::Chunk> chunk_document(std::string_view doc_id, std::string_view body,
                                         const ChunkingConfig& cfg);

// `{entity | entity_type | key | value}` lines of the extraction protocol.
struct AttributeAssertion {
    std::string entity_name;
    std::string entity_type;
    std::string key;
    std::string value;
    std::string source_chunk;

    bool operator==(const AttributeAssertion&) const = default;
};

struct ParseResult {
    std::vector<ontology::CandidateTriple> triples;
    std::vector<AttributeAssertion> attributes;
    std::vector<std::string> diagnostics;
};

// Line protocol:
//   (head | head_type | relation | tail | tail_type | score?)
//   {entity | entity_type | key | value}
// Malformed lines are skipped with a diagnostic. A missing score is 0.0.
ParseResult parse_triples(std::string_view output, std::string_view chunk_id = {});

struct RawExtractionOutput {
    graph::ChunkId chunk_id;
    std::string output;
    std::vector<std::string> diagnostics;
};

struct ExtractOptions {
    bool enforce_schema = true;
    RetryPolicy retry;
};

struct ChunkExtraction {
    std::vector<ontology::ValidatedTriple> triples;
    std::vector<AttributeAssertion> attributes;
    RawExtractionOutput raw;
    bool unparseable = false;  // the model produced lines, none of which parsed
};

inline constexpr std::string_view kChunkTextMarker = "Text:\n";

std::string extraction_system_prompt(const ontology::OntologySchema& schema);
std::string extraction_user_prompt(const graph::Chunk& chunk);

// Prompts the client (temperature 0), parses the reply, filters it through
// the schema and renormalizes the survivors. Transport errors are retried per
// options.retry and then rethrown.
ChunkExtraction extract_chunk(const graph::Chunk& chunk, const ontology::OntologySchema& schema,
                              ChatClient& client, const ExtractOptions& options = {});

struct Document {
    std::string id;
    std::string text;
};

struct IndexOptions {
    ExtractOptions extract;
    std::size_t workers = 4;
    double failure_threshold = 0.2;
};

struct CorpusIndex {
    graph::KnowledgeGraph graph;
    std::vector<RawExtractionOutput> raw_outputs;  // by chunk id
    std::vector<std::string> failures;
    std::size_t chunk_count = 0;
};

// Chunks and extracts every document (chunks run on a bounded worker pool),
// then commits results in chunk-id order through a single writer. Throws
// FailureThreshold when more than options.failure_threshold of the chunks fail.
CorpusIndex index_corpus(const std::vector<Document>& documents, const ontology::OntologySchema& schema,
                         ChatClient& client, const ChunkingConfig& cfg, const IndexOptions& options = {});

// Every edge and node checked against the schema. Empty result = valid.
std::vector<std::string> validate_graph(const graph::KnowledgeGraph& g, const ontology::OntologySchema& schema);

// A directory of .txt/.md files (document id = file name) or a JSONL file of
// {"doc_id": ..., "text": ...} records. Documents are returned sorted by id.
std::vector<Document> load_corpus(const std::filesystem::path& path);

}  // namespace graphrag::extraction
