#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace graphrag::text {

// Simple (1:1) Unicode case folding for Latin, Greek and Cyrillic scripts.
// Other code points pass through unchanged; invalid UTF-8 bytes are copied.
std::string case_fold(std::string_view s);

std::string_view trim(std::string_view s) noexcept;

// Collapses every run of whitespace to one ASCII space and trims the ends.
std::string collapse_whitespace(std::string_view s);

// Canonical entity key: case fold + whitespace collapse + trim.
std::string canonical_name(std::string_view s);

// Word tokenizer shared by entity linking, the query entropy score and the
// offline model stubs. Splits on whitespace and ASCII punctuation and case
// folds each token. Non-ASCII bytes are treated as word characters.
std::vector<std::string> tokenize(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

std::uint64_t fnv1a64(std::string_view s) noexcept;

std::string hex64(std::uint64_t v);

}  // namespace graphrag::text
