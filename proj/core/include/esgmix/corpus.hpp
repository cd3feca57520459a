#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "esgmix/labels.hpp"

namespace esgmix {

enum class Language { en, fr };
enum class Provenance { original, gpt3mix, crawled, translated };

std::string_view to_string(Language lang) noexcept;
std::string_view to_string(Provenance p) noexcept;
/// Throw DataError on an unknown spelling.
Language parse_language(std::string_view s);
Provenance parse_provenance(std::string_view s);

/// One news item.
struct Document {
    std::string id;
    std::optional<std::string> headline;
    std::string body;
    Language language = Language::en;
    std::optional<std::string> label;
    std::optional<std::string> source;
    Provenance provenance = Provenance::original;

    bool operator==(const Document&) const = default;
};

nlohmann::json to_json(const Document& doc);
/// `line` only decorates error messages.
Document document_from_json(const nlohmann::json& j, std::size_t line = 0);

using RegistryPtr = std::shared_ptr<const LabelRegistry>;

/// An ordered, validated, immutable collection of documents.
///
/// Construction enforces: non-blank bodies, unique ids, and labels drawn from
/// the registry. Every operation below returns a new Dataset.
class Dataset {
public:
    Dataset(std::string name, std::vector<Document> documents, RegistryPtr registry);

    const std::string& name() const noexcept { return name_; }
    const std::vector<Document>& documents() const noexcept { return documents_; }
    const LabelRegistry& registry() const noexcept { return *registry_; }
    const RegistryPtr& registry_ptr() const noexcept { return registry_; }

    std::size_t size() const noexcept { return documents_.size(); }
    bool empty() const noexcept { return documents_.empty(); }
    const Document& operator[](std::size_t i) const { return documents_[i]; }
    auto begin() const noexcept { return documents_.begin(); }
    auto end() const noexcept { return documents_.end(); }

    bool fully_labeled() const noexcept;
    /// Label -> document count over labeled documents, in label order.
    std::map<std::string, std::size_t> label_counts() const;

    Dataset renamed(std::string name) const { return Dataset(std::move(name), documents_, registry_); }

    /// Equal names, documents, and registries.
    bool operator==(const Dataset& other) const;

private:
    std::string name_;
    std::vector<Document> documents_;
    RegistryPtr registry_;
};

enum class Format { jsonl, csv };

std::string_view to_string(Format f) noexcept;
Format parse_format(std::string_view s);
/// ".csv" -> csv, anything else -> jsonl.
Format format_from_extension(const std::filesystem::path& path);

/// Reads and validates a dataset. Stops at the first invalid record and
/// reports its line. An empty file is an error ("empty dataset").
Dataset load_dataset(const std::filesystem::path& path, Format format, RegistryPtr registry,
                     std::string name = {});
Dataset parse_dataset(std::string_view content, Format format, RegistryPtr registry, std::string name);

void save_dataset(const Dataset& d, const std::filesystem::path& path, Format format);
std::string serialize_dataset(const Dataset& d, Format format);

/// At most one document per normalized body; first occurrence wins.
Dataset dedup(const Dataset& d);

struct SplitResult {
    Dataset train;
    Dataset valid;
};

/// Per-label validation quotas: floor(fraction * count) topped up by largest
/// remainder (ties by label order) until round(fraction * total) is reached.
std::map<std::string, std::size_t> stratified_quotas(const std::map<std::string, std::size_t>& counts,
                                                     double fraction);

/// Partitions a fully labeled dataset. Membership within each label is drawn
/// from `seed`; both halves keep the input order.
SplitResult stratified_split(const Dataset& d, double fraction, std::uint64_t seed);

/// Fraction of labeled documents carrying each label.
std::map<std::string, double> label_distribution(const Dataset& d);

/// Concatenates in argument order. Ids become "<dataset name>:<id>"; a name
/// that repeats gets a "#<n>" suffix so ids stay unique.
Dataset merge(std::span<const Dataset> datasets, bool dedup_after, std::string name = {});

/// Drops documents whose source equals (case-insensitively) any excluded
/// source. Documents without a source are kept.
Dataset filter_by_source(const Dataset& d, const std::set<std::string>& excluded_sources);

} // namespace esgmix
