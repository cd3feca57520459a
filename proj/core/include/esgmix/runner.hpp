#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "esgmix/augmentation.hpp"
#include "esgmix/backends.hpp"
#include "esgmix/classifier.hpp"
#include "esgmix/corpus.hpp"
#include "esgmix/evaluation.hpp"
#include "esgmix/report.hpp"

namespace esgmix {

struct InputSpec {
    std::filesystem::path path;  // relative paths resolve against the config file
    Format format = Format::jsonl;
};

enum class RecipeKind { original, gpt3mix, crawled, translation, mix };

std::string_view to_string(RecipeKind k) noexcept;
RecipeKind parse_recipe_kind(std::string_view s);

/// How to materialize one named training set.
///
///   original     input
///   gpt3mix      source (preset), backend (generator), target
///   crawled      input (unlabeled), backends (classifiers), source (preset
///                whose publishers are excluded), exclude_sources
///   translation  members (presets), translator; every member document not
///                already in `language` is translated, then merged
///   mix          members (presets), merged and deduplicated
struct PresetRecipe {
    std::string name;
    RecipeKind kind = RecipeKind::original;
    Language language = Language::en;
    std::string input;
    std::string source;
    std::string backend;
    std::size_t target = 0;
    std::vector<std::string> backends;
    std::vector<std::string> members;
    std::string translator;
    std::vector<std::string> exclude_sources;
    /// The published size of this set, for reference only.
    std::optional<std::size_t> declared_size;
};

struct ModelSpec {
    std::string name;
    TrainConfig train;
};

struct SubtaskSpec {
    Language language = Language::en;
    std::string base_input;                 // split into train/valid once
    std::optional<std::string> test_input;  // held-out, optional
};

struct EnsembleMember {
    std::string model;
    std::string preset;
};

struct EnsembleSpec {
    std::string name;
    Language subtask = Language::en;
    std::vector<EnsembleMember> members;
    TieBreak tie_break = TieBreak::score_then_label;
};

/// Extra crawled documents for labels the models find hard.
struct RebalanceSpec {
    std::string pool;  // preset
    std::map<std::string, std::size_t> quotas;
    std::vector<std::string> presets;  // training sets to top up; empty = all
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::filesystem::path base_dir;  // where relative paths resolve
    std::filesystem::path registry;  // empty = built-in registry
    std::uint64_t seed = 0;
    std::map<std::string, InputSpec> inputs;
    std::vector<BackendSpec> backends;
    std::vector<PresetRecipe> presets;
    std::vector<SubtaskSpec> subtasks;
    double split_fraction = 0.05;
    std::uint64_t split_seed = 0;
    std::vector<ModelSpec> models;
    std::vector<std::string> grid_presets;
    std::vector<std::string> grid_models;
    double gate_threshold = kBaselineGate;
    std::vector<EnsembleSpec> ensembles;
    std::optional<RebalanceSpec> rebalance;
    AugmentOptions augment;
    ConsensusOptions consensus;
    /// Disagreement rate of the built-in mock classifiers.
    double mock_classify_noise = 0.1;

    const PresetRecipe& preset(const std::string& name) const;
    const ModelSpec& model(const std::string& name) const;
    std::filesystem::path resolve(const std::filesystem::path& p) const;

    /// Cross-reference and range checks. Throws ConfigError.
    void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j, std::filesystem::path base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Backends by name, resolved for one run.
struct BackendSet {
    std::map<std::string, GeneratorPtr> generators;
    std::map<std::string, ClassifierPtr> classifiers;
    std::map<std::string, TranslatorPtr> translators;

    const Generator& generator(const std::string& name) const;
    std::vector<ClassifierPtr> classifier_list(const std::vector<std::string>& names) const;
    const Translator& translator(const std::string& name) const;
};

struct BackendOptions {
    bool mock = false;
    std::map<std::string, std::string> endpoint_overrides;  // --backend-url NAME=URL
};

/// HTTP clients for configured endpoints; deterministic mocks with `mock`.
/// An endpoint of the form file://PATH on a translate backend is a
/// FileTranslator.
BackendSet make_backends(const ExperimentConfig& cfg, const BackendOptions& options);

struct BuiltPreset {
    Dataset dataset;
    nlohmann::json manifest;
};

/// Materializes presets on demand, memoized, resolving dependencies.
class PresetBuilder {
public:
    PresetBuilder(const ExperimentConfig& cfg, const BackendSet& backends, RegistryPtr registry,
                  std::optional<std::filesystem::path> workspace = std::nullopt);

    /// Replace an input with an in-memory dataset (the run uses this to
    /// hand presets the training side of the split).
    void override_input(const std::string& name, Dataset d);
    const Dataset& input(const std::string& name);
    const BuiltPreset& build(const std::string& preset);

private:
    const ExperimentConfig& cfg_;
    const BackendSet& backends_;
    RegistryPtr registry_;
    std::optional<std::filesystem::path> workspace_;
    std::map<std::string, Dataset> inputs_;
    std::map<std::string, BuiltPreset> built_;
    std::set<std::string> in_progress_;
};

BuiltPreset build_preset(const std::string& name, const ExperimentConfig& cfg, const BackendSet& backends,
                         std::optional<std::filesystem::path> workspace = std::nullopt);

RegistryPtr load_registry(const ExperimentConfig& cfg);

struct RebalanceResult {
    Dataset dataset;
    std::size_t appended = 0;
    std::map<std::string, std::size_t> shortfall;  // labels the pool could not fill
};

/// Appends up to quotas[label] pool documents per label, drawn without
/// replacement. Pool ids are prefixed with the pool name; a pool document
/// whose body already appears in `train` is skipped.
RebalanceResult rebalance(const Dataset& train, const Dataset& pool, const std::map<std::string, std::size_t>& quotas,
                          Rng& rng);

struct RunResult {
    ResultTable table;
    std::vector<nlohmann::json> log;  // ordered stage events
    std::vector<std::pair<std::string, EnsembleComparison>> ensembles;
};

/// Split each subtask's base input, then train and score every grid cell,
/// gate on validation F1, and vote the configured ensembles from gated
/// members. With a workspace, datasets, manifests, models, predictions, the
/// run log, and results.{csv,md} are written under it.
RunResult run_experiment(const ExperimentConfig& cfg, const BackendSet& backends,
                         std::optional<std::filesystem::path> workspace = std::nullopt);

} // namespace esgmix
