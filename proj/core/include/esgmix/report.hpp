#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "esgmix/corpus.hpp"

namespace esgmix {

struct ResultRow {
    std::string experiment;
    Language subtask = Language::en;
    double valid_f1 = 0.0;
    std::optional<double> test_f1;

    bool operator==(const ResultRow&) const = default;
};

/// (experiment x subtask) validation/test weighted F1.
struct ResultTable {
    std::vector<ResultRow> rows;

    /// F1 values in [0, 1] and unique experiment names; throws DataError.
    void validate() const;
    /// English before French, then valid F1 descending, then name.
    void sort();
    bool operator==(const ResultTable&) const = default;
};

/// "English" / "French".
std::string_view subtask_name(Language lang) noexcept;
Language parse_subtask_name(std::string_view s);

enum class ReportFormat { csv, markdown };
ReportFormat parse_report_format(std::string_view s);

/// Columns: Experiment Name, Subtask, Valid F1, Test F1. Markdown prints F1
/// to 3 decimals; CSV uses the shortest exact decimal so it parses back to
/// the same table. A missing test F1 renders as "-". Empty tables throw.
std::string render_report(const ResultTable& table, ReportFormat format);
ResultTable parse_report_csv(std::string_view csv_text);

} // namespace esgmix
