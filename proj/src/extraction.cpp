#include "graphrag/extraction.hpp"

#include "graphrag/error.hpp"
#include "graphrag/text.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace graphrag::extraction {

using ontology::CandidateTriple;
using ontology::OntologySchema;

void ChunkingConfig::validate() const {
    if (max_chars == 0) throw Error(ErrorCode::Config, "chunking.max_chars must be positive");
    if (overlap_chars >= max_chars) throw Error(ErrorCode::Config, "chunking.overlap_chars must be < max_chars");
    if (split_preference.empty()) throw Error(ErrorCode::Config, "chunking.split_preference is empty");
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_paragraph_boundary(std::string_view s, std::size_t b) {
    return b >= 2 && b < s.size() && s[b - 1] == '\n' && s[b - 2] == '\n' && s[b] != '\n';
}

bool is_sentence_boundary(std::string_view s, std::size_t b) {
    if (b < 2 || b >= s.size() || is_space(s[b])) return false;
    if (s[b - 1] == '\n') return true;
    return is_space(s[b - 1]) && (s[b - 2] == '.' || s[b - 2] == '!' || s[b - 2] == '?');
}

std::string chunk_id(std::string_view doc_id, std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%04zu", index);
    return std::string(doc_id) + buf;
}

}  // namespace

std::vector<graph::Chunk> chunk_document(std::string_view doc_id, std::string_view body, const ChunkingConfig& cfg) {
    cfg.validate();
    if (body.empty()) throw Error(ErrorCode::EmptyInput, "document '" + std::string(doc_id) + "' is empty");

    std::vector<graph::Chunk> chunks;
    const std::size_t n = body.size();
    std::size_t pos = 0;
    while (true) {
        std::size_t end = n;
        if (n - pos > cfg.max_chars) {
            const std::size_t lo = pos + cfg.overlap_chars + 1;
            const std::size_t hi = pos + cfg.max_chars;
            end = 0;
            for (auto kind : cfg.split_preference) {
                if (kind == Boundary::Hard) {
                    end = hi;
                    break;
                }
                for (std::size_t b = hi; b >= lo; --b) {
                    bool hit = kind == Boundary::Paragraph ? is_paragraph_boundary(body, b)
                                                           : is_sentence_boundary(body, b);
                    if (hit) {
                        end = b;
                        break;
                    }
                }
                if (end) break;
            }
            if (!end) end = hi;
            // Never split a UTF-8 sequence.
            while (end > lo && (static_cast<unsigned char>(body[end]) & 0xC0) == 0x80) --end;
        }
        chunks.push_back({chunk_id(doc_id, chunks.size()), std::string(doc_id),
                          std::string(body.substr(pos, end - pos)), pos});
        if (end == n) break;

        std::size_t next = end - cfg.overlap_chars;
        std::size_t snapped = next;
        while (snapped < end && !is_space(body[snapped - 1])) ++snapped;
        pos = snapped < end ? snapped : next;
    }
    return chunks;
}

ParseResult parse_triples(std::string_view output, std::string_view chunk_id) {
    ParseResult result;
    std::size_t line_no = 0;
    for (auto raw : text::split(output, '\n')) {
        ++line_no;
        auto line = text::trim(raw);
        if (line.empty()) continue;
        auto diag = [&](const std::string& why) {
            result.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why + ": " + std::string(line));
        };
        const bool triple = line.front() == '(' && line.back() == ')';
        const bool attribute = line.front() == '{' && line.back() == '}';
        if (!triple && !attribute) {
            diag("not a protocol line");
            continue;
        }
        std::vector<std::string> fields;
        for (auto f : text::split(line.substr(1, line.size() - 2), '|')) {
            fields.push_back(text::collapse_whitespace(f));
        }
        if (attribute) {
            if (fields.size() != 4) {
                diag("attribute line needs 4 fields");
                continue;
            }
            if (std::any_of(fields.begin(), fields.end(), [](const auto& f) { return f.empty(); })) {
                diag("empty attribute field");
                continue;
            }
            result.attributes.push_back({fields[0], fields[1], fields[2], fields[3], std::string(chunk_id)});
            continue;
        }
        if (fields.size() != 5 && fields.size() != 6) {
            diag("triple line needs 5 or 6 fields");
            continue;
        }
        if (std::any_of(fields.begin(), fields.begin() + 5, [](const auto& f) { return f.empty(); })) {
            diag("empty triple field");
            continue;
        }
        double score = 0.0;
        if (fields.size() == 6 && !fields[5].empty()) {
            char* endp = nullptr;
            score = std::strtod(fields[5].c_str(), &endp);
            if (endp == fields[5].c_str() || *endp != '\0' || !std::isfinite(score)) {
                diag("score is not a finite number");
                continue;
            }
        }
        result.triples.push_back(
            CandidateTriple{fields[0], fields[1], fields[2], fields[3], fields[4], score, std::string(chunk_id)});
    }
    return result;
}

std::string extraction_system_prompt(const OntologySchema& schema) {
    return "You are a knowledge graph extraction engine.\n\n" + ontology::schema_to_prompt(schema);
}

std::string extraction_user_prompt(const graph::Chunk& chunk) { return std::string(kChunkTextMarker) + chunk.text; }

ChunkExtraction extract_chunk(const graph::Chunk& chunk, const OntologySchema& schema, ChatClient& client,
                              const ExtractOptions& options) {
    const auto system = extraction_system_prompt(schema);
    const auto user = extraction_user_prompt(chunk);
    std::string output = call_with_retry(options.retry, [&] { return client.complete(system, user, 0.0); });

    auto parsed = parse_triples(output, chunk.id);
    ChunkExtraction out;
    out.raw = {chunk.id, output, parsed.diagnostics};
    out.unparseable = parsed.triples.empty() && parsed.attributes.empty() && !parsed.diagnostics.empty();

    if (options.enforce_schema) {
        if (auto valid = ontology::renormalize_candidates(parsed.triples, schema)) {
            out.triples = std::move(*valid);
        } else if (!parsed.triples.empty()) {
            out.raw.diagnostics.push_back("no candidate triple satisfied the schema");
        }
        for (auto& a : parsed.attributes) {
            const auto* type = schema.find_entity_type(a.entity_type);
            if (!type) {
                out.raw.diagnostics.push_back("attribute for undeclared entity type '" + a.entity_type + "'");
                continue;
            }
            a.entity_type = type->name;
            out.attributes.push_back(std::move(a));
        }
    } else {
        out.triples = ontology::normalize_unconstrained(parsed.triples);
        out.attributes = std::move(parsed.attributes);
    }
    if (out.triples.empty() && out.attributes.empty()) {
        spdlog::info("chunk {}: no valid triples ({} diagnostics)", chunk.id, out.raw.diagnostics.size());
    }
    return out;
}

CorpusIndex index_corpus(const std::vector<Document>& documents, const OntologySchema& schema, ChatClient& client,
                         const ChunkingConfig& cfg, const IndexOptions& options) {
    if (documents.empty()) throw Error(ErrorCode::EmptyInput, "corpus has no documents");

    std::vector<graph::Chunk> chunks;
    for (const auto& doc : documents) {
        auto doc_chunks = chunk_document(doc.id, doc.text, cfg);
        std::move(doc_chunks.begin(), doc_chunks.end(), std::back_inserter(chunks));
    }
    std::sort(chunks.begin(), chunks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    struct Slot {
        std::optional<ChunkExtraction> extraction;
        std::string error;
    };
    std::vector<Slot> slots(chunks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < chunks.size(); i = next++) {
            try {
                slots[i].extraction = extract_chunk(chunks[i], schema, client, options.extract);
            } catch (const std::exception& e) {
                slots[i].error = e.what();
            }
        }
    };
    {
        const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(chunks.size(), 1));
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }

    std::vector<std::string> entity_types;
    if (options.extract.enforce_schema) {
        for (const auto& e : schema.entity_types()) entity_types.push_back(e.name);
    }
    CorpusIndex index{graph::KnowledgeGraph(std::move(entity_types), schema.version()), {}, {}, chunks.size()};
    auto& g = index.graph;

    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const auto& chunk = chunks[i];
        auto& slot = slots[i];
        g.add_chunk(chunk);
        if (!slot.extraction) {
            index.failures.push_back(chunk.id + ": " + slot.error);
            index.raw_outputs.push_back({chunk.id, {}, {slot.error}});
            continue;
        }
        auto& ex = *slot.extraction;
        if (ex.unparseable) index.failures.push_back(chunk.id + ": no parseable output");
        for (const auto& a : ex.attributes) {
            g.upsert_node(a.entity_name, a.entity_type, {{a.key, {a.value}}}, chunk.id);
        }
        for (const auto& v : ex.triples) {
            const auto& t = v.triple;
            auto head = g.upsert_node(t.head_name, t.head_type, {}, chunk.id);
            auto tail = g.upsert_node(t.tail_name, t.tail_type, {}, chunk.id);
            g.add_edge(head, t.relation, tail, chunk.id);
        }
        index.raw_outputs.push_back(std::move(ex.raw));
    }

    const double failed = static_cast<double>(index.failures.size()) / static_cast<double>(chunks.size());
    if (failed > options.failure_threshold) {
        throw Error(ErrorCode::FailureThreshold, std::to_string(index.failures.size()) + " of " +
                                                     std::to_string(chunks.size()) + " chunks failed; first: " +
                                                     index.failures.front());
    }
    for (const auto& f : index.failures) spdlog::warn("extraction failure: {}", f);
    return index;
}

std::vector<std::string> validate_graph(const graph::KnowledgeGraph& g, const OntologySchema& schema) {
    std::vector<std::string> problems;
    for (const auto& n : g.nodes()) {
        if (!schema.find_entity_type(n.entity_type)) {
            problems.push_back("node '" + n.name + "' has undeclared type '" + n.entity_type + "'");
        }
    }
    for (const auto& e : g.edges()) {
        const auto& h = g.node(e.head);
        const auto& t = g.node(e.tail);
        CandidateTriple probe{h.name, h.entity_type, e.relation, t.name, t.entity_type, 0.0, {}};
        if (!ontology::validate_triple(probe, schema)) {
            problems.push_back("edge (" + h.name + ", " + e.relation + ", " + t.name + ") violates the schema");
        }
    }
    return problems;
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    std::vector<Document> docs;
    auto read_file = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (!entry.is_regular_file()) continue;
            auto ext = entry.path().extension().string();
            if (ext != ".txt" && ext != ".md") continue;
            auto body = read_file(entry.path());
            if (text::trim(body).empty()) continue;
            docs.push_back({entry.path().filename().string(), std::move(body)});
        }
    } else if (fs::is_regular_file(path)) {
        auto data = read_file(path);
        std::size_t line_no = 0;
        for (auto line : text::split(data, '\n')) {
            ++line_no;
            if (text::trim(line).empty()) continue;
            try {
                auto rec = nlohmann::json::parse(line);
                docs.push_back({rec.at("doc_id").get<std::string>(), rec.at("text").get<std::string>()});
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    } else {
        throw Error(ErrorCode::Io, "corpus path does not exist: " + path.string());
    }
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return docs;
}

}  // namespace graphrag::extraction
