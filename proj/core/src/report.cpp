#include "esgmix/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>

#include "esgmix/csv.hpp"
#include "esgmix/error.hpp"

namespace esgmix {

std::string_view subtask_name(Language lang) noexcept { return lang == Language::en ? "English" : "French"; }

Language parse_subtask_name(std::string_view s) {
    if (s == "English" || s == "en") return Language::en;
    if (s == "French" || s == "fr") return Language::fr;
    throw DataError("unknown subtask '" + std::string(s) + "'");
}

ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    throw ConfigError("unknown report format '" + std::string(s) + "'");
}

void ResultTable::validate() const {
    std::set<std::string> names;
    for (const auto& r : rows) {
        if (!names.insert(r.experiment).second) throw DataError("result table: duplicate experiment '" + r.experiment + "'");
        auto in_range = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in_range(r.valid_f1) || (r.test_f1 && !in_range(*r.test_f1))) {
            throw DataError("result table: F1 outside [0, 1] for '" + r.experiment + "'");
        }
    }
}

void ResultTable::sort() {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.subtask != b.subtask) return a.subtask < b.subtask;
        if (a.valid_f1 != b.valid_f1) return a.valid_f1 > b.valid_f1;
        return a.experiment < b.experiment;
    });
}

namespace {

std::string exact(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

double parse_f1(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError("bad F1 value '" + s + "'", line);
    return v;
}

} // namespace

std::string render_report(const ResultTable& table, ReportFormat format) {
    if (table.rows.empty()) throw DataError("render_report: empty result table");
    std::string out;
    if (format == ReportFormat::csv) {
        out = csv::format_row({"Experiment Name", "Subtask", "Valid F1", "Test F1"}) + "\n";
        for (const auto& r : table.rows) {
            out += csv::format_row({r.experiment, std::string(subtask_name(r.subtask)), exact(r.valid_f1),
                                    r.test_f1 ? exact(*r.test_f1) : "-"});
            out += "\n";
        }
        return out;
    }
    out = "| Experiment Name | Subtask | Valid F1 | Test F1 |\n";
    out += "|---|---|---|---|\n";
    for (const auto& r : table.rows) {
        out += "| " + r.experiment + " | " + std::string(subtask_name(r.subtask)) + " | " + fixed3(r.valid_f1) + " | " +
               (r.test_f1 ? fixed3(*r.test_f1) : "-") + " |\n";
    }
    return out;
}

ResultTable parse_report_csv(std::string_view csv_text) {
    const auto rows = csv::parse(csv_text);
    if (rows.empty()) throw DataError("report csv: empty");
    ResultTable table;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        if (f.size() != 4) throw DataError("report csv: expected 4 columns", rows[i].line);
        ResultRow row;
        row.experiment = f[0];
        row.subtask = parse_subtask_name(f[1]);
        row.valid_f1 = parse_f1(f[2], rows[i].line);
        if (f[3] != "-") row.test_f1 = parse_f1(f[3], rows[i].line);
        table.rows.push_back(std::move(row));
    }
    table.validate();
    return table;
}

} // namespace esgmix
