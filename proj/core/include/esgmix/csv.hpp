#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace esgmix::csv {

struct Row {
    std::size_t line = 0;  // 1-based line on which the record starts
    std::vector<std::string> fields;
};

/// RFC 4180 reader: comma separated, double-quote quoting, "" escapes, quoted
/// fields may span lines. Throws DataError on an unterminated quote.
std::vector<Row> parse(std::string_view content);

/// Quotes a field only when it contains a comma, quote, or line break.
std::string escape(std::string_view field);
std::string format_row(const std::vector<std::string>& fields);

} // namespace esgmix::csv
