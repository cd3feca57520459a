#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace esgmix {

struct LabelEntry {
    std::string name;
    std::string description;

    bool operator==(const LabelEntry&) const = default;
};

/// The set of ESG key issues a task classifies into.
///
/// Entries are kept sorted by name (byte order). A label's position in that
/// order is its class index everywhere in the library, which is what makes
/// "lexicographic tie-break" and "lowest class index" the same rule.
class LabelRegistry {
public:
    LabelRegistry() = default;

    /// Throws ConfigError on duplicate names, empty names, or empty descriptions.
    explicit LabelRegistry(std::vector<LabelEntry> entries);

    /// The 33 key issues named in the published crawled-data distribution,
    /// with MSCI-style descriptions. The canonical 35-label task adds two more
    /// from configuration (see data/registry_35.json).
    static LabelRegistry builtin();

    static LabelRegistry from_json(const nlohmann::json& j);
    static LabelRegistry load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<LabelEntry>& entries() const noexcept { return entries_; }
    std::vector<std::string> names() const;

    bool contains(std::string_view name) const { return index_of(name).has_value(); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    /// Case-insensitive lookup; returns the canonical spelling.
    std::optional<std::string> match(std::string_view name) const;
    const std::string& name_at(std::size_t index) const { return entries_.at(index).name; }
    const std::string& description(std::string_view name) const;

    /// Stable identifier derived from the label names.
    const std::string& id() const noexcept { return id_; }

    bool operator==(const LabelRegistry& other) const { return entries_ == other.entries_; }

private:
    std::vector<LabelEntry> entries_;
    std::string id_;
};

} // namespace esgmix
