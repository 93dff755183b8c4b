#pragma once

#include "graphrag/clients.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace graphrag::embedding {

inline constexpr std::size_t kDefaultDimension = 256;

// u.v / (|u||v|). Throws DimensionMismatch on unequal sizes. A zero-norm
// input yields 0 and sets *degenerate when provided.
double cosine(std::span<const double> u, std::span<const double> v, bool* degenerate = nullptr);

// Feature-hashed bag of tokens, L2 normalized. Pure.
Vector stub_embed(std::string_view text, std::size_t dimension = kDefaultDimension);

// Token-overlap F1 between query and passage (multiset overlap). Pure.
double stub_rerank_score(std::string_view query, std::string_view passage);
std::vector<double> stub_rerank(std::string_view query, const std::vector<std::string>& passages);

class HashingEmbedder final : public EmbeddingClient {
public:
    explicit HashingEmbedder(std::size_t dimension = kDefaultDimension);
    std::vector<Vector> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dimension_; }
    std::string identity() const override;

private:
    std::size_t dimension_;
};

class OverlapReranker final : public RerankClient {
public:
    std::vector<double> score(std::string_view query, const std::vector<std::string>& passages) override {
        return stub_rerank(query, passages);
    }
    std::string identity() const override { return "stub-rerank:token-f1"; }
};

struct ScoredRef {
    std::string ref;
    double score = 0.0;
};

// Exact brute-force cosine search. Built by one writer, then frozen; a
// frozen store is safe to query concurrently.
class VectorStore {
public:
    explicit VectorStore(std::size_t dimension = kDefaultDimension) : dimension_(dimension) {}

    void add(std::string ref, Vector vector);
    void freeze() noexcept { frozen_ = true; }
    bool frozen() const noexcept { return frozen_; }

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return refs_.size(); }
    const std::vector<std::string>& refs() const noexcept { return refs_; }
    const Vector& vector_at(std::size_t i) const { return vectors_.at(i); }
    const Vector* find(std::string_view ref) const;

    // Descending cosine, ties by ref ascending. Empty store -> empty result.
    std::vector<ScoredRef> top_k(std::span<const double> query, std::size_t k) const;

private:
    std::size_t dimension_;
    bool frozen_ = false;
    std::vector<std::string> refs_;
    std::vector<Vector> vectors_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace graphrag::embedding
