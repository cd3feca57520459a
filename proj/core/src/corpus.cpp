#include "esgmix/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "esgmix/csv.hpp"
#include "esgmix/error.hpp"
#include "esgmix/hash.hpp"
#include "esgmix/random.hpp"
#include "esgmix/text.hpp"

namespace esgmix {

using nlohmann::json;

std::string_view to_string(Language lang) noexcept {
    return lang == Language::en ? "en" : "fr";
}

std::string_view to_string(Provenance p) noexcept {
    switch (p) {
    case Provenance::original: return "original";
    case Provenance::gpt3mix: return "gpt3mix";
    case Provenance::crawled: return "crawled";
    case Provenance::translated: return "translated";
    }
    return "original";
}

Language parse_language(std::string_view s) {
    if (s == "en") return Language::en;
    if (s == "fr") return Language::fr;
    throw DataError("unknown language '" + std::string(s) + "'");
}

Provenance parse_provenance(std::string_view s) {
    if (s == "original") return Provenance::original;
    if (s == "gpt3mix") return Provenance::gpt3mix;
    if (s == "crawled") return Provenance::crawled;
    if (s == "translated") return Provenance::translated;
    throw DataError("unknown provenance '" + std::string(s) + "'");
}

std::string_view to_string(Format f) noexcept { return f == Format::csv ? "csv" : "jsonl"; }

Format parse_format(std::string_view s) {
    if (s == "jsonl") return Format::jsonl;
    if (s == "csv") return Format::csv;
    throw ConfigError("unknown dataset format '" + std::string(s) + "'");
}

Format format_from_extension(const std::filesystem::path& path) {
    return text::to_lower(path.extension().string()) == ".csv" ? Format::csv : Format::jsonl;
}

json to_json(const Document& doc) {
    json j;
    j["id"] = doc.id;
    j["headline"] = doc.headline ? json(*doc.headline) : json(nullptr);
    j["body"] = doc.body;
    j["language"] = to_string(doc.language);
    j["label"] = doc.label ? json(*doc.label) : json(nullptr);
    j["source"] = doc.source ? json(*doc.source) : json(nullptr);
    j["provenance"] = to_string(doc.provenance);
    return j;
}

namespace {

std::optional<std::string> optional_string(const json& j, const char* field, std::size_t line) {
    if (!j.contains(field) || j[field].is_null()) return std::nullopt;
    if (!j[field].is_string()) throw DataError(std::string("malformed record: field '") + field + "' must be a string", line);
    return j[field].get<std::string>();
}

std::string required_string(const json& j, const char* field, std::size_t line) {
    auto v = optional_string(j, field, line);
    if (!v) throw DataError(std::string("malformed record: missing field '") + field + "'", line);
    return *v;
}

void check_document(const Document& doc, const LabelRegistry& registry, std::size_t line) {
    if (doc.id.empty()) throw DataError("malformed record: field 'id' is empty", line);
    if (text::trim(doc.body).empty()) {
        throw DataError("malformed record: field 'body' is blank (document '" + doc.id + "')", line);
    }
    if (doc.label && !registry.contains(*doc.label)) {
        throw DataError("unknown label '" + *doc.label + "' (document '" + doc.id + "')", line);
    }
}

} // namespace

Document document_from_json(const json& j, std::size_t line) {
    if (!j.is_object()) throw DataError("malformed record: expected a JSON object", line);
    Document doc;
    doc.id = required_string(j, "id", line);
    doc.headline = optional_string(j, "headline", line);
    doc.body = required_string(j, "body", line);
    try {
        doc.language = parse_language(required_string(j, "language", line));
        if (auto p = optional_string(j, "provenance", line)) doc.provenance = parse_provenance(*p);
    } catch (const DataError& e) {
        if (e.line()) throw;
        throw DataError(std::string("malformed record: ") + e.what(), line);
    }
    doc.label = optional_string(j, "label", line);
    doc.source = optional_string(j, "source", line);
    return doc;
}

Dataset::Dataset(std::string name, std::vector<Document> documents, RegistryPtr registry)
    : name_(std::move(name)), documents_(std::move(documents)), registry_(std::move(registry)) {
    if (!registry_) throw ConfigError("dataset '" + name_ + "' has no label registry");
    std::unordered_set<std::string> ids;
    ids.reserve(documents_.size());
    for (const auto& doc : documents_) {
        check_document(doc, *registry_, 0);
        if (!ids.insert(doc.id).second) throw DataError("duplicate document id '" + doc.id + "' in dataset '" + name_ + "'");
    }
}

bool Dataset::fully_labeled() const noexcept {
    return std::all_of(documents_.begin(), documents_.end(), [](const Document& d) { return d.label.has_value(); });
}

std::map<std::string, std::size_t> Dataset::label_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& doc : documents_) {
        if (doc.label) ++counts[*doc.label];
    }
    return counts;
}

bool Dataset::operator==(const Dataset& other) const {
    return name_ == other.name_ && documents_ == other.documents_ && *registry_ == *other.registry_;
}

namespace {

Dataset parse_jsonl(std::string_view content, RegistryPtr registry, std::string name) {
    std::vector<Document> docs;
    std::unordered_set<std::string> ids;
    const auto lines = text::split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line = i + 1;
        if (text::trim(lines[i]).empty()) continue;
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::parse_error& e) {
            throw DataError(std::string("malformed record: ") + e.what(), line);
        }
        auto doc = document_from_json(j, line);
        check_document(doc, *registry, line);
        if (!ids.insert(doc.id).second) throw DataError("duplicate document id '" + doc.id + "'", line);
        docs.push_back(std::move(doc));
    }
    if (docs.empty()) throw DataError("empty dataset");
    return Dataset(std::move(name), std::move(docs), std::move(registry));
}

constexpr const char* kColumns[] = {"id", "headline", "body", "language", "label", "source", "provenance"};

Dataset parse_csv(std::string_view content, RegistryPtr registry, std::string name) {
    const auto rows = csv::parse(content);
    if (rows.empty()) throw DataError("empty dataset");
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < rows[0].fields.size(); ++i) column[text::to_lower(text::trim(rows[0].fields[i]))] = i;
    for (const char* required : {"id", "body", "language"}) {
        if (!column.count(required)) throw DataError(std::string("malformed header: missing column '") + required + "'", rows[0].line);
    }

    std::vector<Document> docs;
    std::unordered_set<std::string> ids;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        json j = json::object();
        for (const char* col : kColumns) {
            auto it = column.find(col);
            if (it == column.end() || it->second >= row.fields.size()) continue;
            const auto& value = row.fields[it->second];
            // Empty optional cells mean "absent".
            if (!value.empty()) j[col] = value;
        }
        auto doc = document_from_json(j, row.line);
        check_document(doc, *registry, row.line);
        if (!ids.insert(doc.id).second) throw DataError("duplicate document id '" + doc.id + "'", row.line);
        docs.push_back(std::move(doc));
    }
    if (docs.empty()) throw DataError("empty dataset");
    return Dataset(std::move(name), std::move(docs), std::move(registry));
}

} // namespace

Dataset parse_dataset(std::string_view content, Format format, RegistryPtr registry, std::string name) {
    if (!registry) throw ConfigError("no label registry supplied");
    return format == Format::csv ? parse_csv(content, std::move(registry), std::move(name))
                                 : parse_jsonl(content, std::move(registry), std::move(name));
}

Dataset load_dataset(const std::filesystem::path& path, Format format, RegistryPtr registry, std::string name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("file not found: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (name.empty()) name = path.stem().string();
    try {
        return parse_dataset(buf.str(), format, std::move(registry), std::move(name));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string serialize_dataset(const Dataset& d, Format format) {
    std::string out;
    if (format == Format::jsonl) {
        for (const auto& doc : d) {
            out += to_json(doc).dump();
            out.push_back('\n');
        }
        return out;
    }
    out = csv::format_row({std::begin(kColumns), std::end(kColumns)}) + "\n";
    for (const auto& doc : d) {
        out += csv::format_row({doc.id, doc.headline.value_or(""), doc.body, std::string(to_string(doc.language)),
                                doc.label.value_or(""), doc.source.value_or(""),
                                std::string(to_string(doc.provenance))});
        out.push_back('\n');
    }
    return out;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path, Format format) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset " + path.string());
    out << serialize_dataset(d, format);
}

Dataset dedup(const Dataset& d) {
    std::unordered_set<std::string> seen;
    std::vector<Document> kept;
    kept.reserve(d.size());
    for (const auto& doc : d) {
        if (seen.insert(text::normalize_for_dedup(doc.body)).second) kept.push_back(doc);
    }
    return Dataset(d.name(), std::move(kept), d.registry_ptr());
}

std::map<std::string, std::size_t> stratified_quotas(const std::map<std::string, std::size_t>& counts,
                                                     double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw PreconditionError("split fraction must lie in (0, 1)");
    std::size_t total = 0;
    for (const auto& [_, c] : counts) total += c;
    const double exact_target = fraction * static_cast<double>(total);
    if (exact_target < 1.0) {
        throw PreconditionError("split fraction " + std::to_string(fraction) + " of " + std::to_string(total) +
                                " documents selects no validation documents");
    }
    const auto target = static_cast<std::size_t>(std::llround(exact_target));

    struct Share {
        std::string label;
        long long remainder;  // quantized to 1e-9 so float noise cannot split ties
    };
    std::map<std::string, std::size_t> quotas;
    std::vector<Share> shares;
    std::size_t assigned = 0;
    for (const auto& [label, c] : counts) {
        const double exact = fraction * static_cast<double>(c);
        const auto base = static_cast<std::size_t>(std::floor(exact));
        quotas[label] = base;
        assigned += base;
        shares.push_back({label, std::llround((exact - static_cast<double>(base)) * 1e9)});
    }
    // Ties keep label order.
    std::stable_sort(shares.begin(), shares.end(),
                     [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
    for (std::size_t i = 0; assigned < target && i < shares.size(); ++i) {
        if (quotas[shares[i].label] < counts.at(shares[i].label)) {
            ++quotas[shares[i].label];
            ++assigned;
        }
    }
    return quotas;
}

SplitResult stratified_split(const Dataset& d, double fraction, std::uint64_t seed) {
    if (!d.fully_labeled()) throw PreconditionError("stratified_split: dataset '" + d.name() + "' has unlabeled documents");
    const auto quotas = stratified_quotas(d.label_counts(), fraction);

    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < d.size(); ++i) by_label[*d[i].label].push_back(i);

    std::vector<bool> in_valid(d.size(), false);
    for (auto& [label, indices] : by_label) {
        Rng rng(hash_combine(seed, hash_bytes(label)));
        rng.shuffle(std::span<std::size_t>(indices));
        for (std::size_t k = 0; k < quotas.at(label); ++k) in_valid[indices[k]] = true;
    }

    std::vector<Document> train, valid;
    for (std::size_t i = 0; i < d.size(); ++i) (in_valid[i] ? valid : train).push_back(d[i]);
    return {Dataset(d.name() + "-train", std::move(train), d.registry_ptr()),
            Dataset(d.name() + "-valid", std::move(valid), d.registry_ptr())};
}

std::map<std::string, double> label_distribution(const Dataset& d) {
    const auto counts = d.label_counts();
    std::size_t total = 0;
    for (const auto& [_, c] : counts) total += c;
    if (total == 0) throw PreconditionError("label_distribution: dataset '" + d.name() + "' has no labeled documents");
    std::map<std::string, double> dist;
    for (const auto& [label, c] : counts) dist[label] = static_cast<double>(c) / static_cast<double>(total);
    return dist;
}

Dataset merge(std::span<const Dataset> datasets, bool dedup_after, std::string name) {
    if (datasets.empty()) throw PreconditionError("merge: no datasets given");
    const auto& registry = datasets.front().registry_ptr();
    std::map<std::string, int> seen_names;
    std::vector<Document> docs;
    std::string joined;
    for (const auto& d : datasets) {
        if (!(d.registry() == *registry)) {
            throw PreconditionError("merge: dataset '" + d.name() + "' uses a different label registry");
        }
        std::string ns = d.name();
        if (const int n = ++seen_names[d.name()]; n > 1) ns += "#" + std::to_string(n);
        for (const auto& doc : d) {
            Document copy = doc;
            copy.id = ns + ":" + doc.id;
            docs.push_back(std::move(copy));
        }
        if (!joined.empty()) joined += "+";
        joined += d.name();
    }
    Dataset merged(name.empty() ? joined : std::move(name), std::move(docs), registry);
    return dedup_after ? dedup(merged) : merged;
}

Dataset filter_by_source(const Dataset& d, const std::set<std::string>& excluded_sources) {
    std::vector<Document> kept;
    for (const auto& doc : d) {
        const bool excluded = doc.source && std::any_of(excluded_sources.begin(), excluded_sources.end(),
                                                        [&](const std::string& s) { return text::iequals(s, *doc.source); });
        if (!excluded) kept.push_back(doc);
    }
    return Dataset(d.name(), std::move(kept), d.registry_ptr());
}

} // namespace esgmix
