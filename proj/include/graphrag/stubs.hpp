#pragma once

#include "graphrag/clients.hpp"

#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace graphrag::stubs {

// One extraction rule of the offline stub. A relation rule emits
//   (group1 | head_type | relation | group2 | tail_type [| score])
// and an attribute rule emits
//   {group1 | entity_type | attribute | group2}
// for every regex match in the chunk text.
struct PatternRule {
    std::string pattern;
    std::regex regex;
    std::string relation;
    std::string head_type;
    std::string tail_type;
    std::string attribute;
    std::string entity_type;
    std::optional<double> score;
};

// Rule-based, deterministic stand-in for the extraction LLM. Reads the chunk
// text after the "Text:" marker of the user prompt. Pure in its inputs.
class PatternStubChatClient final : public ChatClient {
public:
    explicit PatternStubChatClient(std::vector<PatternRule> rules) : rules_(std::move(rules)) {}

    // {"rules": [{"pattern": "...", "relation": "...", "head_type": "...", "tail_type": "...", "score": 0.5},
    //            {"pattern": "...", "attribute": "...", "entity_type": "..."}]}
    static PatternStubChatClient from_json(std::string_view rules_json);

    std::string complete(std::string_view system_prompt, std::string_view user_prompt, double temperature) override;
    std::string identity() const override { return "stub-chat:pattern-rules:" + std::to_string(rules_.size()); }

private:
    std::vector<PatternRule> rules_;
};

// Test helper: returns fn(system, user). Thread safety is the caller's concern.
class FunctionChatClient final : public ChatClient {
public:
    using Fn = std::function<std::string(std::string_view, std::string_view)>;
    explicit FunctionChatClient(Fn fn, std::string name = "stub-chat:function")
        : fn_(std::move(fn)), name_(std::move(name)) {}

    std::string complete(std::string_view system_prompt, std::string_view user_prompt, double) override {
        return fn_(system_prompt, user_prompt);
    }
    std::string identity() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

}  // namespace graphrag::stubs
