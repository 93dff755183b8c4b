#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace graphrag {

using Vector = std::vector<double>;

// Implementations must be safe to call from several worker threads at once.
// Retryable failures are reported as TransportError.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(std::string_view system_prompt, std::string_view user_prompt,
                                 double temperature) = 0;
    virtual std::string identity() const = 0;
};

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    // One vector of dimension() per input text, in input order.
    virtual std::vector<Vector> embed(const std::vector<std::string>& texts) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string identity() const = 0;
};

class RerankClient {
public:
    virtual ~RerankClient() = default;
    // One relevance score per passage, in input order.
    virtual std::vector<double> score(std::string_view query, const std::vector<std::string>& passages) = 0;
    virtual std::string identity() const = 0;
};

}  // namespace graphrag
