#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace esgmix::text {

/// Lowercases ASCII and the UTF-8 encoded Latin-1 capitals (É, À, Ç, ...).
std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

/// Lowercase, trim, and collapse every whitespace run to a single space.
std::string normalize_for_dedup(std::string_view s);

/// Lowercased word tokens. Bytes >= 0x80 count as word characters so UTF-8
/// accented letters stay inside their word.
std::vector<std::string> tokenize(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

} // namespace esgmix::text
