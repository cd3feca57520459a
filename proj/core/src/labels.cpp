#include "esgmix/labels.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "esgmix/error.hpp"
#include "esgmix/hash.hpp"
#include "esgmix/text.hpp"

namespace esgmix {

LabelRegistry::LabelRegistry(std::vector<LabelEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const LabelEntry& a, const LabelEntry& b) { return a.name < b.name; });
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (text::trim(e.name).empty()) throw ConfigError("label registry: empty label name");
        if (text::trim(e.description).empty()) throw ConfigError("label registry: empty description for '" + e.name + "'");
        if (i > 0 && entries_[i - 1].name == e.name) throw ConfigError("label registry: duplicate label '" + e.name + "'");
        h = hash_combine(h, hash_bytes(e.name));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    id_ = buf;
}

std::vector<std::string> LabelRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

std::optional<std::size_t> LabelRegistry::index_of(std::string_view name) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                               [](const LabelEntry& e, std::string_view n) { return e.name < n; });
    if (it == entries_.end() || it->name != name) return std::nullopt;
    return static_cast<std::size_t>(it - entries_.begin());
}

std::optional<std::string> LabelRegistry::match(std::string_view name) const {
    const auto trimmed = text::trim(name);
    for (const auto& e : entries_) {
        if (text::iequals(e.name, trimmed)) return e.name;
    }
    return std::nullopt;
}

const std::string& LabelRegistry::description(std::string_view name) const {
    auto idx = index_of(name);
    if (!idx) throw DataError("unknown label '" + std::string(name) + "'");
    return entries_[*idx].description;
}

LabelRegistry LabelRegistry::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("labels") || !j["labels"].is_array()) {
        throw ConfigError("label registry: expected an object with a \"labels\" array");
    }
    std::vector<LabelEntry> entries;
    for (const auto& item : j["labels"]) {
        if (!item.is_object() || !item.contains("name") || !item.contains("description")) {
            throw ConfigError("label registry: each label needs \"name\" and \"description\"");
        }
        entries.push_back({item["name"].get<std::string>(), item["description"].get<std::string>()});
    }
    return LabelRegistry(std::move(entries));
}

LabelRegistry LabelRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open label registry " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("label registry " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json LabelRegistry::to_json() const {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& e : entries_) labels.push_back({{"name", e.name}, {"description", e.description}});
    return {{"labels", labels}};
}

void LabelRegistry::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write label registry " + path.string());
    out << to_json().dump(2) << '\n';
}

LabelRegistry LabelRegistry::builtin() {
    return LabelRegistry({
        {"Access to Communications",
         "This label is about their efforts to expand access to communication services and the internet in "
         "underserved and rural regions, including affordable plans and infrastructure build-out."},
        {"Access to Finance",
         "This label is about their efforts to expand financial services to historically underserved markets, "
         "including small-business lending and the development of innovative distribution channels."},
        {"Access to Health Care",
         "This label is about their efforts to widen access to medicines, treatment, and health services for "
         "low-income and underserved populations, including pricing and donation programs."},
        {"Accounting",
         "This label is about their accounting and audit practices, including restatements, auditor "
         "independence, and the reliability of financial reporting."},
        {"Biodiversity & Land Use",
         "This label is about their impact on ecosystems and land, including deforestation, habitat "
         "protection, and land rehabilitation around their operations."},
        {"Board",
         "This label is about the composition and effectiveness of their board of directors, including "
         "independence, diversity, and oversight of management."},
        {"Business Ethics",
         "This label is about their conduct with respect to fraud, bribery, corruption, anti-competitive "
         "practices, and the strength of their ethics and compliance programs."},
        {"Carbon Emissions",
         "This label is about their efforts to measure, manage, and reduce the greenhouse gas emissions of "
         "their own operations, including net-zero targets and energy efficiency."},
        {"Chemical Safety",
         "This label is about the safety of chemicals in their products and processes, including phasing out "
         "hazardous substances and regulatory compliance."},
        {"Climate Change Vulnerability",
         "This label is about their exposure to physical climate risks such as floods, storms, and heat, and "
         "their efforts to adapt assets and insurance portfolios."},
        {"Community Relations",
         "This label is about their relationships with local communities, including consultation, "
         "indigenous rights, and disputes over the social impact of projects."},
        {"Consumer Financial Protection",
         "This label is about their treatment of retail financial customers, including fair lending, "
         "transparent fees, and mis-selling of financial products."},
        {"Controversial Sourcing",
         "This label is about their use of raw materials linked to conflict, human rights abuses, or "
         "environmental damage, such as conflict minerals and illegal timber."},
        {"Electronic Waste",
         "This label is about their efforts to collect, recycle, and safely dispose of discarded electronic "
         "products and components."},
        {"Financing Environmental Impact",
         "This label is about the environmental impact of the projects and companies they finance or insure, "
         "including lending to carbon-intensive sectors."},
        {"Human Capital Development",
         "This label is about their efforts to attract, train, and retain skilled employees, including "
         "workforce development and talent programs."},
        {"Labor Management",
         "This label is about their relationships with employees, including working conditions, labor "
         "relations, strikes, and restructuring."},
        {"Opportunities in Clean Tech",
         "This label is about their efforts to develop and commercialize clean technologies such as "
         "electric vehicles, batteries, and efficiency solutions."},
        {"Opportunities in Green Building",
         "This label is about their efforts to design, build, and certify energy-efficient and sustainable "
         "buildings and real estate."},
        {"Opportunities in Nutrition & Health",
         "This label is about their efforts to develop healthier food products and address nutrition-related "
         "public health trends."},
        {"Opportunities in Renewable Energy",
         "This label is about their efforts to develop, generate, or invest in renewable power such as solar, "
         "wind, and hydro."},
        {"Ownership & Control",
         "This label is about their ownership structure and shareholder rights, including controlling "
         "shareholders, dual-class shares, and takeover defenses."},
        {"Packaging Material & Waste",
         "This label is about their efforts to reduce packaging, use recycled or recyclable materials, and "
         "limit plastic waste."},
        {"Pay",
         "This label is about executive compensation, including the alignment of pay with performance and "
         "shareholder votes on remuneration."},
        {"Privacy & Data Security",
         "This label is about how they protect personal data, including data breaches, cybersecurity "
         "practices, and privacy regulation."},
        {"Product Carbon Footprint",
         "This label is about the greenhouse gas emissions of their products over the life cycle, including "
         "efforts to lower the footprint of goods sold."},
        {"Product Safety & Quality",
         "This label is about the safety and quality of their products, including recalls, defects, and "
         "quality control failures."},
        {"Raw Material Sourcing",
         "This label is about the environmental impact of the raw materials they source, including certified "
         "and traceable supply of agricultural and mineral inputs."},
        {"Responsible Investment",
         "This label is about how they integrate environmental, social, and governance factors into "
         "investment decisions and asset management."},
        {"Supply Chain Labor Standards",
         "This label is about labor conditions in their supply chain, including forced labor, child labor, "
         "and supplier audits."},
        {"Toxic Emissions & Waste",
         "This label is about their releases of toxic pollutants and hazardous waste, including spills, "
         "contamination, and remediation."},
        {"Water Stress",
         "This label is about their water use and its management in water-scarce regions, including "
         "withdrawal, recycling, and watershed protection."},
        {"Health & Demographic Risk",
         "This label is about their exposure to workforce and community health risks, including pandemics, "
         "aging populations, and employee health programs."},
    });
}

} // namespace esgmix
