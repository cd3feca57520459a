#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

// Published figures the pipeline is configured from or checked against.
namespace esgmix::reference {

inline constexpr std::size_t kLabelCount = 35;
inline constexpr double kLearningRate = 3e-4;
inline constexpr std::size_t kEpochs = 20;
inline constexpr double kValidationFraction = 0.05;
inline constexpr double kGateThreshold = 0.45;

/// Share of each label in a GPT3Mix-augmented set: 2.85% +/- 0.7%.
inline constexpr double kSyntheticLabelShare = 0.0285;
inline constexpr double kSyntheticLabelShareTolerance = 0.007;

/// Training-set article counts as stated in the task description prose.
/// The size table gives 1199 for English; both are kept.
inline constexpr std::size_t kEnglishTrainArticlesProse = 1119;
inline constexpr std::size_t kFrenchTrainArticlesProse = 1200;
inline constexpr std::size_t kTestArticlesPerLanguage = 300;

struct DatasetSize {
    std::string_view method;
    std::string_view abbreviation;
    std::size_t en;
    std::optional<std::size_t> fr;
};

/// Training-set size per augmentation method.
inline constexpr std::array<DatasetSize, 7> kDatasetSizes{{
    {"Original", "original", 1199, 1200},
    {"GPTMix-OPT", "opt", 2866, 2867},
    {"GPTMix-Pythia", "pyt", 2900, 2901},
    {"GPTMix-CerebrasGPT", "cpt", 2906, 2907},
    {"GPTMix-Mixed Models", "mix", 7473, 7474},
    {"Crawled", "da", 4816, std::nullopt},
    {"Translation", "ts", 2279, 2279},
}};

constexpr const DatasetSize* find_dataset_size(std::string_view abbreviation) {
    for (const auto& s : kDatasetSizes) {
        if (s.abbreviation == abbreviation) return &s;
    }
    return nullptr;
}

struct ResultRow {
    std::string_view experiment;
    std::string_view subtask;
    double valid_f1;
    double test_f1;
};

/// Best model per method, ordered by validation F1 within each subtask.
inline constexpr std::array<ResultRow, 11> kBestPerforming{{
    {"RoBERTa-base-mix", "English", 0.749, 0.597},
    {"DeBERTa-large-ts", "English", 0.737, 0.705},
    {"RoBERTa-base-pyt", "English", 0.735, 0.629},
    {"RoBERTa-base-opt", "English", 0.730, 0.603},
    {"RoBERTa-base-cpt", "English", 0.709, 0.628},
    {"DeBERTa-base-da", "English", 0.694, 0.615},
    {"mDeBERTa-mix", "French", 0.760, 0.731},
    {"mRoBERTa-xl-cpt", "French", 0.702, 0.714},
    {"mDeBERTa-pyt", "French", 0.671, 0.663},
    {"mDeBERTa-opt", "French", 0.657, 0.656},
    {"mRoBERTa-xl-ts", "French", 0.625, 0.695},
}};

struct BaselineRow {
    std::string_view model;
    std::string_view subtask;
    double valid_f1;
    double test_f1;
};

inline constexpr std::array<BaselineRow, 8> kBaselines{{
    {"RoBERTa-base", "English", 0.66, 0.67},
    {"DeBERTa-large", "English", 0.65, 0.69},
    {"FinBERT", "English", 0.53, 0.56},
    {"mRoBERTa-xl", "English", 0.61, 0.69},
    {"DeBERTa-base", "English", 0.51, 0.58},
    {"mDeBERTa", "English", 0.44, 0.52},
    {"mRoBERTa-xl", "French", 0.76, 0.75},
    {"mDeBERTa", "French", 0.49, 0.47},
}};

struct LabelShare {
    std::string_view label;
    double percent;
};

/// Label distribution of the zero-shot labeled crawl (percent, sums to 100).
inline constexpr std::array<LabelShare, 33> kCrawledDistribution{{
    {"Board", 8.80},
    {"Carbon Emissions", 6.94},
    {"Responsible Investment", 5.64},
    {"Accounting", 5.53},
    {"Pay", 5.36},
    {"Packaging Material & Waste", 4.57},
    {"Business Ethics", 4.35},
    {"Water Stress", 4.23},
    {"Financing Environmental Impact", 4.01},
    {"Opportunities in Renewable Energy", 3.89},
    {"Human Capital Development", 3.84},
    {"Community Relations", 3.78},
    {"Consumer Financial Protection", 3.78},
    {"Product Carbon Footprint", 3.67},
    {"Opportunities in Clean Tech", 3.50},
    {"Biodiversity & Land Use", 2.99},
    {"Electronic Waste", 2.82},
    {"Chemical Safety", 2.60},
    {"Raw Material Sourcing", 2.54},
    {"Opportunities in Green Building", 2.48},
    {"Ownership & Control", 2.37},
    {"Climate Change Vulnerability", 1.81},
    {"Toxic Emissions & Waste", 1.58},
    {"Health & Demographic Risk", 1.24},
    {"Access to Finance", 1.24},
    {"Opportunities in Nutrition & Health", 1.24},
    {"Access to Health Care", 1.19},
    {"Privacy & Data Security", 0.96},
    {"Access to Communications", 0.73},
    {"Product Safety & Quality", 0.68},
    {"Supply Chain Labor Standards", 0.62},
    {"Labor Management", 0.51},
    {"Controversial Sourcing", 0.51},
}};

} // namespace esgmix::reference
