#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "esgmix/corpus.hpp"

namespace esgmix {

struct GoldLabel {
    std::string doc_id;
    std::string label;
};

/// Gold pairs of a fully labeled dataset, in document order.
std::vector<GoldLabel> gold_labels(const Dataset& d);

struct PredictedLabel {
    std::string doc_id;
    std::string label;
    std::optional<double> score;

    bool operator==(const PredictedLabel&) const = default;
};

struct PredictionRecord {
    std::string model_name;
    std::vector<PredictedLabel> pairs;

    /// Unique doc ids; labels in `registry` when given. Throws DataError.
    void validate(const LabelRegistry* registry = nullptr) const;
    bool operator==(const PredictionRecord&) const = default;
};

/// JSON Lines, one {doc_id, label, score?} per line.
void save_predictions(const PredictionRecord& record, const std::filesystem::path& path);
PredictionRecord load_predictions(const std::filesystem::path& path, std::string model_name = {});

struct LabelMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct MetricsReport {
    double weighted_f1 = 0.0;
    std::vector<std::string> labels;  // sorted union of gold and predicted labels
    std::map<std::string, LabelMetrics> per_label;
    std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted], indexed like `labels`
    std::string gold_fingerprint;                     // identifies the gold set
};

nlohmann::json to_json(const MetricsReport& report);

/// Support-weighted mean of per-label F1. A zero denominator gives 0 for
/// that precision/recall/F1. Predictions must cover exactly the gold ids.
MetricsReport weighted_f1(std::span<const GoldLabel> golds, const PredictionRecord& preds);

struct GateCandidate {
    std::string model_name;
    double valid_f1 = 0.0;

    bool operator==(const GateCandidate&) const = default;
};

inline constexpr double kBaselineGate = 0.45;

/// Keeps candidates with valid_f1 >= threshold, in order.
std::vector<GateCandidate> baseline_gate(std::span<const GateCandidate> candidates, double threshold = kBaselineGate);

enum class TieBreak {
    /// Highest summed score among tied labels when every voter gave scores,
    /// otherwise byte-order label.
    score_then_label,
    label,
};

/// Per document, the label with most votes. Output keeps the first record's
/// document order; each pair's score is the winning vote share. Needs >= 2
/// records over identical doc id sets.
PredictionRecord hard_vote(std::span<const PredictionRecord> records, TieBreak tie_break = TieBreak::score_then_label);

struct MemberScore {
    std::string name;
    double weighted_f1 = 0.0;
};

struct EnsembleComparison {
    double ensemble_f1 = 0.0;
    std::vector<MemberScore> members;
    double best_member_f1 = 0.0;
    bool ensemble_at_least_best = false;
};

/// Throws DataError when a member was scored on a different gold set.
EnsembleComparison compare_to_members(const MetricsReport& ensemble,
                                      std::span<const std::pair<std::string, MetricsReport>> members);

nlohmann::json to_json(const EnsembleComparison& c);

} // namespace esgmix
