#include "graphrag/eval.hpp"

#include "graphrag/error.hpp"
#include "graphrag/text.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace graphrag::eval {

using nlohmann::json;

namespace {
constexpr std::array<QueryType, 3> kTypes{QueryType::Inference, QueryType::Comparison, QueryType::Temporal};
}

std::string_view to_string(QueryType t) {
    switch (t) {
    case QueryType::Inference: return "Inference";
    case QueryType::Comparison: return "Comparison";
    case QueryType::Temporal: return "Temporal";
    }
    return "?";
}

std::optional<QueryType> parse_query_type(std::string_view s) {
    auto folded = text::case_fold(text::trim(s));
    for (char& c : folded) {
        if (c == ' ' || c == '-') c = '_';
    }
    if (folded.ends_with("_query")) folded.resize(folded.size() - 6);
    if (folded == "inference") return QueryType::Inference;
    if (folded == "comparison") return QueryType::Comparison;
    if (folded == "temporal") return QueryType::Temporal;
    return std::nullopt;
}

double f1(double relevancy, double recall, std::vector<std::string>* diagnostics) {
    if (relevancy + recall <= 0.0) {
        if (diagnostics) diagnostics->push_back("f1 undefined for (0, 0); reported as 0");
        return 0.0;
    }
    return 2.0 * relevancy * recall / (relevancy + recall);
}

bool evidence_matches(std::string_view evidence, std::string_view chunk_text) {
    auto e = text::canonical_name(evidence);
    if (e.empty()) return false;
    return text::canonical_name(chunk_text).find(e) != std::string::npos;
}

namespace {

template <typename Match>
RetrievalScore count_matches(std::size_t chunks, std::size_t gold, Match&& match) {
    RetrievalScore s;
    if (chunks == 0 || gold == 0) return s;
    std::vector<bool> covered(gold, false);
    std::size_t relevant = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        bool any = false;
        for (std::size_t g = 0; g < gold; ++g) {
            if (match(c, g)) {
                any = true;
                covered[g] = true;
            }
        }
        relevant += any ? 1 : 0;
    }
    auto hit = static_cast<double>(std::count(covered.begin(), covered.end(), true));
    s.relevancy = 100.0 * static_cast<double>(relevant) / static_cast<double>(chunks);
    s.recall = 100.0 * hit / static_cast<double>(gold);
    return s;
}

constexpr std::string_view kJudgeSystemPrompt =
    "You judge retrieval evidence. Answer with the single word yes if the passage states the fact, otherwise no.";

}  // namespace

RetrievalScore score_retrieval(const std::vector<std::string>& chunk_texts, const BenchmarkQuery& query) {
    return count_matches(chunk_texts.size(), query.gold_evidence.size(), [&](std::size_t c, std::size_t g) {
        return evidence_matches(query.gold_evidence[g], chunk_texts[c]);
    });
}

RetrievalScore score_retrieval_judged(const std::vector<std::string>& chunk_texts, const BenchmarkQuery& query,
                                      ChatClient& judge) {
    return count_matches(chunk_texts.size(), query.gold_evidence.size(), [&](std::size_t c, std::size_t g) {
        auto prompt = "Question: " + query.question + "\nFact: " + query.gold_evidence[g] + "\nPassage:\n" +
                      chunk_texts[c] + "\nDoes the passage state the fact?";
        auto reply = text::case_fold(text::trim(judge.complete(kJudgeSystemPrompt, prompt, 0.0)));
        return reply.starts_with("yes");
    });
}

MetricsReport aggregate(const std::vector<QueryScore>& scores) {
    MetricsReport report;
    std::vector<MetricsRow> type_rows;
    for (auto t : kTypes) {
        MetricsRow row{std::string(to_string(t)), 0, 0.0, 0.0, 0.0};
        for (const auto& s : scores) {
            if (s.type != t) continue;
            ++row.queries;
            row.relevancy += s.score.relevancy;
            row.recall += s.score.recall;
        }
        if (row.queries == 0) {
            report.diagnostics.push_back("no " + row.label + " queries; row omitted");
            continue;
        }
        row.relevancy /= static_cast<double>(row.queries);
        row.recall /= static_cast<double>(row.queries);
        row.f1 = f1(row.relevancy, row.recall, &report.diagnostics);
        type_rows.push_back(row);
    }
    report.rows = type_rows;
    if (!type_rows.empty()) {
        MetricsRow avg{"Average", 0, 0.0, 0.0, 0.0};
        for (const auto& r : type_rows) {
            avg.queries += r.queries;
            avg.relevancy += r.relevancy;
            avg.recall += r.recall;
        }
        avg.relevancy /= static_cast<double>(type_rows.size());
        avg.recall /= static_cast<double>(type_rows.size());
        avg.f1 = f1(avg.relevancy, avg.recall, &report.diagnostics);
        report.rows.push_back(avg);
    }
    return report;
}

std::vector<std::string> check_report(const MetricsReport& report, double tolerance) {
    std::vector<std::string> problems;
    for (const auto& r : report.rows) {
        auto expected = f1(r.relevancy, r.recall);
        if (!(std::abs(r.f1 - expected) <= tolerance)) {
            problems.push_back(fmt::format("{}: f1 {:.4f} differs from harmonic mean {:.4f}", r.label, r.f1, expected));
        }
        for (double v : {r.relevancy, r.recall}) {
            if (!(v >= 0.0 && v <= 100.0)) problems.push_back(r.label + ": percentage out of [0, 100]");
        }
    }
    return problems;
}

std::string render_table(const MetricsReport& report, const std::string& method) {
    std::ostringstream os;
    os << fmt::format("{:<12} {:<20} {:>9} {:>9} {:>7}\n", "Query Type", "Method", "Rel. (%)", "Rec. (%)", "F1");
    for (const auto& r : report.rows) {
        os << fmt::format("{:<12} {:<20} {:>9.2f} {:>9.2f} {:>7.2f}\n", r.label, method, r.relevancy, r.recall, r.f1);
    }
    return os.str();
}

json report_to_json(const MetricsReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"type", r.label},
                        {"queries", r.queries},
                        {"relevancy", r.relevancy},
                        {"recall", r.recall},
                        {"f1", r.f1}});
    }
    return json{{"rows", rows}, {"metadata", report.metadata}, {"diagnostics", report.diagnostics}};
}

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<json> records_of(std::string_view data, const std::string& what) {
    std::vector<json> out;
    auto trimmed = text::trim(data);
    try {
        if (!trimmed.empty() && trimmed.front() == '[') {
            for (auto& r : json::parse(trimmed)) out.push_back(std::move(r));
        } else {
            for (auto line : text::split(data, '\n')) {
                if (!text::trim(line).empty()) out.push_back(json::parse(line));
            }
        }
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, what + ": " + e.what());
    }
    return out;
}

}  // namespace

std::vector<BenchmarkQuery> parse_queries(std::string_view data, std::vector<std::string>* diagnostics) {
    std::vector<BenchmarkQuery> out;
    std::map<std::string, std::size_t> skipped;
    auto records = records_of(data, "benchmark queries");
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        auto where = "benchmark record " + std::to_string(i);
        try {
            auto type_name = r.at("question_type").get<std::string>();
            if (!r.contains("evidence_list")) throw Error(ErrorCode::Parse, where + ": missing evidence_list");
            auto type = parse_query_type(type_name);
            if (!type) {
                ++skipped[type_name];
                continue;
            }
            BenchmarkQuery q;
            q.id = r.contains("id") ? r.at("id").get<std::string>() : fmt::format("q{:04}", i);
            q.question = r.at("query").get<std::string>();
            q.type = *type;
            q.gold_answer = r.contains("answer") ? r.at("answer").get<std::string>() : std::string{};
            for (const auto& e : r.at("evidence_list")) {
                q.gold_evidence.push_back(e.is_string() ? e.get<std::string>() : e.at("fact").get<std::string>());
            }
            if (q.gold_evidence.empty()) throw Error(ErrorCode::Parse, where + ": empty evidence_list");
            out.push_back(std::move(q));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, where + ": " + e.what());
        }
    }
    for (const auto& [type, n] : skipped) {
        auto msg = fmt::format("skipped {} queries of unknown type '{}'", n, type);
        spdlog::info("{}", msg);
        if (diagnostics) diagnostics->push_back(msg);
    }
    if (out.empty()) throw Error(ErrorCode::EmptyInput, "benchmark has no usable queries");
    return out;
}

Benchmark load_benchmark(const std::filesystem::path& queries, const std::filesystem::path& corpus) {
    Benchmark b;
    b.queries = parse_queries(read_file(queries), &b.diagnostics);
    if (std::filesystem::is_regular_file(corpus) && corpus.extension() == ".json") {
        auto records = records_of(read_file(corpus), "benchmark corpus");
        for (std::size_t i = 0; i < records.size(); ++i) {
            try {
                const auto& r = records[i];
                auto body = r.at("body").get<std::string>();
                if (r.contains("title")) body = r.at("title").get<std::string>() + "\n\n" + body;
                b.corpus.push_back({fmt::format("article-{:05}", i), std::move(body)});
            } catch (const json::exception& e) {
                throw Error(ErrorCode::Parse, "corpus record " + std::to_string(i) + ": " + e.what());
            }
        }
    } else {
        b.corpus = extraction::load_corpus(corpus);
    }
    if (b.corpus.empty()) throw Error(ErrorCode::EmptyInput, "benchmark corpus is empty");
    return b;
}

}  // namespace graphrag::eval
