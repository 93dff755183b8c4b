#include "graphrag/http_clients.hpp"

#include "graphrag/error.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include <cstdlib>

namespace graphrag::http {

using nlohmann::json;

namespace {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw Error(ErrorCode::Config, "endpoint URL lacks a scheme: " + url);
    auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, ""};
    std::string path = url.substr(slash);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {url.substr(0, slash), path};
}

json post_json(const Endpoint& ep, const std::string& suffix, const json& body) {
    auto url = split_url(ep.url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(ep.timeout);
    client.set_read_timeout(ep.timeout);
    client.set_write_timeout(ep.timeout);
    if (!ep.api_key.empty()) client.set_bearer_token_auth(ep.api_key);
    auto res = client.Post(url.path + suffix, body.dump(), "application/json");
    if (!res) {
        throw TransportError("POST " + ep.url + suffix + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransportError("POST " + ep.url + suffix + ": HTTP " + std::to_string(res->status));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::Transport, "POST " + ep.url + suffix + ": HTTP " + std::to_string(res->status) + ": " +
                                              res->body.substr(0, 200));
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, "POST " + ep.url + suffix + ": malformed JSON response: " + e.what());
    }
}

}  // namespace

std::optional<Endpoint> endpoint_from_env(const std::string& prefix, const std::string& model) {
    const char* url = std::getenv((prefix + "_ENDPOINT").c_str());
    if (!url || !*url) return std::nullopt;
    const char* key = std::getenv((prefix + "_KEY").c_str());
    return Endpoint{url, key ? key : "", model};
}

OpenAIChatClient::OpenAIChatClient(Endpoint endpoint) : endpoint_(std::move(endpoint)) { split_url(endpoint_.url); }

std::string OpenAIChatClient::complete(std::string_view system_prompt, std::string_view user_prompt,
                                       double temperature) {
    json body{{"model", endpoint_.model},
              {"temperature", temperature},
              {"messages",
               json::array({json{{"role", "system"}, {"content", system_prompt}},
                            json{{"role", "user"}, {"content", user_prompt}}})}};
    auto reply = post_json(endpoint_, "/chat/completions", body);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("chat response lacks choices[0].message.content: ") + e.what());
    }
}

std::string OpenAIChatClient::identity() const { return "openai-chat:" + endpoint_.model + "@" + endpoint_.url; }

OpenAIEmbeddingClient::OpenAIEmbeddingClient(Endpoint endpoint, std::size_t dimension, RetryPolicy retry,
                                             std::size_t batch)
    : endpoint_(std::move(endpoint)), dimension_(dimension), retry_(retry), batch_(std::max<std::size_t>(batch, 1)) {
    split_url(endpoint_.url);
    if (dimension_ == 0) throw Error(ErrorCode::Config, "embedding dimension must be positive");
}

std::vector<Vector> OpenAIEmbeddingClient::embed(const std::vector<std::string>& texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_) {
        std::vector<std::string> slice(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                       texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), start + batch_)));
        json body{{"model", endpoint_.model}, {"input", slice}};
        auto reply = call_with_retry(retry_, [&] { return post_json(endpoint_, "/embeddings", body); });
        std::vector<Vector> vectors(slice.size());
        try {
            const auto& data = reply.at("data");
            if (data.size() != slice.size()) {
                throw Error(ErrorCode::Parse, "embedding response has " + std::to_string(data.size()) + " items for " +
                                                  std::to_string(slice.size()) + " inputs");
            }
            for (std::size_t i = 0; i < data.size(); ++i) {
                auto idx = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
                if (idx >= vectors.size()) throw Error(ErrorCode::Parse, "embedding index out of range");
                vectors[idx] = data[i].at("embedding").get<Vector>();
            }
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, std::string("malformed embedding response: ") + e.what());
        }
        for (auto& v : vectors) {
            if (v.size() != dimension_) {
                throw Error(ErrorCode::DimensionMismatch, "embedding dimension " + std::to_string(v.size()) +
                                                              ", configured " + std::to_string(dimension_));
            }
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::string OpenAIEmbeddingClient::identity() const {
    return "openai-embeddings:" + endpoint_.model + ":" + std::to_string(dimension_) + "@" + endpoint_.url;
}

HttpRerankClient::HttpRerankClient(Endpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {
    split_url(endpoint_.url);
}

std::vector<double> HttpRerankClient::score(std::string_view query, const std::vector<std::string>& passages) {
    json body{{"query", query}, {"passages", passages}};
    if (!endpoint_.model.empty()) body["model"] = endpoint_.model;
    auto reply = call_with_retry(retry_, [&] { return post_json(endpoint_, "", body); });
    std::vector<double> scores;
    try {
        scores = reply.at("scores").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("malformed rerank response: ") + e.what());
    }
    if (scores.size() != passages.size()) {
        throw Error(ErrorCode::Parse, "rerank response has " + std::to_string(scores.size()) + " scores for " +
                                          std::to_string(passages.size()) + " passages");
    }
    return scores;
}

std::string HttpRerankClient::identity() const { return "http-rerank:" + endpoint_.model + "@" + endpoint_.url; }

}  // namespace graphrag::http
