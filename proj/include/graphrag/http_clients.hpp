#pragma once

#include "graphrag/clients.hpp"
#include "graphrag/retry.hpp"

#include <chrono>
#include <optional>
#include <string>

namespace graphrag::http {

struct Endpoint {
    std::string url;  // chat/embeddings: API base (e.g. https://host/v1); rerank: full URL
    std::string api_key;
    std::string model;
    std::chrono::seconds timeout{60};
};

// Reads <PREFIX>_ENDPOINT and <PREFIX>_KEY, e.g. GRAPHRAG_LLM_ENDPOINT.
// Returns nullopt when the endpoint variable is unset or empty.
std::optional<Endpoint> endpoint_from_env(const std::string& prefix, const std::string& model = {});

// POST <url>/chat/completions in the OpenAI wire format. One attempt per
// call; retries belong to the caller.
class OpenAIChatClient final : public ChatClient {
public:
    explicit OpenAIChatClient(Endpoint endpoint);
    std::string complete(std::string_view system_prompt, std::string_view user_prompt, double temperature) override;
    std::string identity() const override;

private:
    Endpoint endpoint_;
};

// POST <url>/embeddings in the OpenAI wire format, batched, with retry.
class OpenAIEmbeddingClient final : public EmbeddingClient {
public:
    OpenAIEmbeddingClient(Endpoint endpoint, std::size_t dimension, RetryPolicy retry = {}, std::size_t batch = 64);
    std::vector<Vector> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dimension_; }
    std::string identity() const override;

private:
    Endpoint endpoint_;
    std::size_t dimension_;
    RetryPolicy retry_;
    std::size_t batch_;
};

// POST <url> with {"query", "passages"[, "model"]}, expecting {"scores": [...]}.
class HttpRerankClient final : public RerankClient {
public:
    explicit HttpRerankClient(Endpoint endpoint, RetryPolicy retry = {});
    std::vector<double> score(std::string_view query, const std::vector<std::string>& passages) override;
    std::string identity() const override;

private:
    Endpoint endpoint_;
    RetryPolicy retry_;
};

}  // namespace graphrag::http
