#include "graphrag/embedding.hpp"

#include "graphrag/error.hpp"
#include "graphrag/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace graphrag::embedding {

double cosine(std::span<const double> u, std::span<const double> v, bool* degenerate) {
    if (u.size() != v.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "cosine of " + std::to_string(u.size()) + "-d and " + std::to_string(v.size()) + "-d vectors");
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        if (degenerate) *degenerate = true;
        spdlog::debug("cosine: zero-norm vector, defined as 0");
        return 0.0;
    }
    if (degenerate) *degenerate = false;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

Vector stub_embed(std::string_view text, std::size_t dimension) {
    Vector v(dimension, 0.0);
    if (dimension == 0) return v;
    for (const auto& token : text::tokenize(text)) v[text::fnv1a64(token) % dimension] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

double stub_rerank_score(std::string_view query, std::string_view passage) {
    auto q = text::tokenize(query);
    auto p = text::tokenize(passage);
    if (q.empty() || p.empty()) return 0.0;
    std::map<std::string, int> counts;
    for (const auto& t : q) ++counts[t];
    int overlap = 0;
    for (const auto& t : p) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(q.size());
    return 2.0 * precision * recall / (precision + recall);
}

std::vector<double> stub_rerank(std::string_view query, const std::vector<std::string>& passages) {
    std::vector<double> out;
    out.reserve(passages.size());
    for (const auto& p : passages) out.push_back(stub_rerank_score(query, p));
    return out;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw Error(ErrorCode::Config, "embedding dimension must be positive");
}

std::vector<Vector> HashingEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(stub_embed(t, dimension_));
    return out;
}

std::string HashingEmbedder::identity() const { return "stub-embed:fnv1a-bow:" + std::to_string(dimension_); }

void VectorStore::add(std::string ref, Vector vector) {
    if (frozen_) throw Error(ErrorCode::Config, "vector store is frozen");
    if (vector.size() != dimension_) {
        throw Error(ErrorCode::DimensionMismatch, "vector for '" + ref + "' has dimension " +
                                                      std::to_string(vector.size()) + ", store expects " +
                                                      std::to_string(dimension_));
    }
    if (!index_.emplace(ref, refs_.size()).second) {
        throw Error(ErrorCode::Config, "duplicate vector ref '" + ref + "'");
    }
    refs_.push_back(std::move(ref));
    vectors_.push_back(std::move(vector));
}

const Vector* VectorStore::find(std::string_view ref) const {
    auto it = index_.find(ref);
    return it == index_.end() ? nullptr : &vectors_[it->second];
}

std::vector<ScoredRef> VectorStore::top_k(std::span<const double> query, std::size_t k) const {
    if (k == 0) throw Error(ErrorCode::Config, "top_k requires k >= 1");
    std::vector<ScoredRef> scored;
    scored.reserve(refs_.size());
    for (std::size_t i = 0; i < refs_.size(); ++i) scored.push_back({refs_[i], cosine(query, vectors_[i])});
    auto by_score = [](const ScoredRef& a, const ScoredRef& b) {
        return a.score != b.score ? a.score > b.score : a.ref < b.ref;
    };
    if (k < scored.size()) {
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), by_score);
        scored.resize(k);
    } else {
        std::sort(scored.begin(), scored.end(), by_score);
    }
    return scored;
}

}  // namespace graphrag::embedding
