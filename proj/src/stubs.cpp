#include "graphrag/stubs.hpp"

#include "graphrag/error.hpp"
#include "graphrag/extraction.hpp"

#include <json.hpp>

#include <sstream>

namespace graphrag::stubs {

using nlohmann::json;

PatternStubChatClient PatternStubChatClient::from_json(std::string_view rules_json) {
    json doc;
    try {
        doc = json::parse(rules_json.begin(), rules_json.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("stub rules: ") + e.what());
    }
    std::vector<PatternRule> rules;
    try {
        for (const auto& r : doc.at("rules")) {
            PatternRule rule;
            rule.pattern = r.at("pattern").get<std::string>();
            rule.regex = std::regex(rule.pattern, std::regex::ECMAScript);
            if (r.contains("attribute")) {
                rule.attribute = r.at("attribute").get<std::string>();
                rule.entity_type = r.at("entity_type").get<std::string>();
            } else {
                rule.relation = r.at("relation").get<std::string>();
                rule.head_type = r.at("head_type").get<std::string>();
                rule.tail_type = r.at("tail_type").get<std::string>();
                if (r.contains("score")) rule.score = r.at("score").get<double>();
            }
            if (rule.regex.mark_count() < 2) {
                throw Error(ErrorCode::Parse, "stub rule '" + rule.pattern + "' needs two capture groups");
            }
            rules.push_back(std::move(rule));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("stub rules: ") + e.what());
    } catch (const std::regex_error& e) {
        throw Error(ErrorCode::Parse, std::string("stub rules: bad pattern: ") + e.what());
    }
    return PatternStubChatClient(std::move(rules));
}

std::string PatternStubChatClient::complete(std::string_view, std::string_view user_prompt, double) {
    auto marker = user_prompt.find(extraction::kChunkTextMarker);
    std::string body(marker == std::string_view::npos ? user_prompt
                                                      : user_prompt.substr(marker + extraction::kChunkTextMarker.size()));
    std::ostringstream os;
    for (const auto& rule : rules_) {
        for (auto it = std::sregex_iterator(body.begin(), body.end(), rule.regex); it != std::sregex_iterator(); ++it) {
            const auto& m = *it;
            if (!rule.attribute.empty()) {
                os << '{' << m[1].str() << " | " << rule.entity_type << " | " << rule.attribute << " | " << m[2].str()
                   << "}\n";
            } else {
                os << '(' << m[1].str() << " | " << rule.head_type << " | " << rule.relation << " | " << m[2].str()
                   << " | " << rule.tail_type;
                if (rule.score) os << " | " << *rule.score;
                os << ")\n";
            }
        }
    }
    return os.str();
}

}  // namespace graphrag::stubs
