#pragma once

#include <string>
#include <string_view>
#include <vector>

// Unicode helpers shared by the rule parser and the runtime tokenizer.
namespace lite::text {

std::string nfc(std::string_view s);
std::string lowercase(std::string_view s);  // root-locale full case mapping, then NFC

// Splits on Unicode whitespace (White_Space property); empty pieces dropped.
std::vector<std::string> split_whitespace(std::string_view s);

// Removes `? ! . ,` from both ends.
std::string strip_edge_punctuation(std::string_view s);

// Matching form of a token: NFC, lowercased, edge punctuation removed.
// Returns an empty string for punctuation-only input.
std::string match_form(std::string_view display);

std::string trim(std::string_view s);
bool is_blank(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace lite::text
