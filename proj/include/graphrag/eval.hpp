#pragma once

#include "graphrag/clients.hpp"
#include "graphrag/extraction.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace graphrag::eval {

enum class QueryType { Inference, Comparison, Temporal };

std::string_view to_string(QueryType t);

// Accepts "inference", "inference_query", "Inference Query" and the like.
std::optional<QueryType> parse_query_type(std::string_view s);

struct BenchmarkQuery {
    std::string id;
    std::string question;
    QueryType type = QueryType::Inference;
    std::vector<std::string> gold_evidence;
    std::string gold_answer;
};

// Harmonic mean of two percentages. Both zero gives 0 and a diagnostic.
double f1(double relevancy, double recall, std::vector<std::string>* diagnostics = nullptr);

// Case-folded, whitespace-collapsed containment of `evidence` in `chunk_text`.
bool evidence_matches(std::string_view evidence, std::string_view chunk_text);

struct RetrievalScore {
    double relevancy = 0.0;  // percent of returned chunks matching some gold item
    double recall = 0.0;     // percent of gold items matched by some returned chunk
};

RetrievalScore score_retrieval(const std::vector<std::string>& chunk_texts, const BenchmarkQuery& query);

// Same counting with containment replaced by a yes/no judgement per
// (chunk, evidence) pair from `judge`.
RetrievalScore score_retrieval_judged(const std::vector<std::string>& chunk_texts, const BenchmarkQuery& query,
                                      ChatClient& judge);

struct QueryScore {
    std::string id;
    QueryType type = QueryType::Inference;
    RetrievalScore score;
};

struct MetricsRow {
    std::string label;  // query type name or "Average"
    std::size_t queries = 0;
    double relevancy = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::vector<MetricsRow> rows;  // present types in Inference, Comparison, Temporal order, then Average
    std::map<std::string, std::string> metadata;
    std::vector<std::string> diagnostics;
};

// Per-type means, then the Average row as the mean of the per-type means.
// Every F1 cell is the harmonic mean of its own row.
MetricsReport aggregate(const std::vector<QueryScore>& scores);

// Rows whose F1 deviates from the harmonic mean of their inputs by more than
// `tolerance`. Empty = consistent.
std::vector<std::string> check_report(const MetricsReport& report, double tolerance = 0.01);

std::string render_table(const MetricsReport& report, const std::string& method = "GraphRAG");

nlohmann::json report_to_json(const MetricsReport& report);

struct Benchmark {
    std::vector<extraction::Document> corpus;
    std::vector<BenchmarkQuery> queries;
    std::vector<std::string> diagnostics;
};

// Query file: a JSON array (or JSONL) of {query, question_type, evidence_list,
// answer} records; evidence items are strings or objects with a "fact" field.
// Corpus: a JSON array of {title, body, ...} articles, or anything
// extraction::load_corpus accepts. Unknown query types are skipped.
std::vector<BenchmarkQuery> parse_queries(std::string_view data, std::vector<std::string>* diagnostics = nullptr);
Benchmark load_benchmark(const std::filesystem::path& queries, const std::filesystem::path& corpus);

}  // namespace graphrag::eval
