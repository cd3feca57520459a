#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "esgmix/adamw.hpp"
#include "esgmix/corpus.hpp"

namespace esgmix {

struct FeaturizerConfig {
    std::size_t dimension = std::size_t{1} << 18;  // power of two, >= 2^10
    std::size_t ngram_order = 2;
    std::uint64_t hash_seed = 0;

    void validate() const;
    bool operator==(const FeaturizerConfig&) const = default;
};

/// Sparse vector; indices strictly increasing.
struct FeatureVector {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    std::size_t dimension = 0;

    double norm() const;
    bool operator==(const FeatureVector&) const = default;
};

/// Raw hashed counts of lowercase word 1..n-grams.
FeatureVector hashed_counts(std::string_view text, const FeaturizerConfig& cfg);
/// hashed_counts scaled to unit L2 norm; empty text gives the zero vector.
FeatureVector featurize(std::string_view text, const FeaturizerConfig& cfg);
/// Headline and body, as the model sees a document.
std::string document_text(const Document& doc);

struct TrainConfig {
    double learning_rate = 3e-4;
    std::size_t epochs = 20;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    FeaturizerConfig features;

    void validate() const;
    AdamWConfig optimizer() const { return {learning_rate, beta1, beta2, epsilon, weight_decay}; }
};

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults = {});
nlohmann::json to_json(const TrainConfig& cfg);

/// Softmax regression over hashed features. Class i is the registry's i-th
/// label in byte order.
class LinearModel {
public:
    LinearModel(FeaturizerConfig features, std::vector<std::string> labels, std::string registry_id);

    const FeaturizerConfig& features() const noexcept { return features_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& registry_id() const noexcept { return registry_id_; }
    std::size_t num_labels() const noexcept { return labels_.size(); }
    std::size_t dimension() const noexcept { return features_.dimension; }

    /// All parameters: the L x D weight matrix row-major, then L biases.
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }
    double& weight(std::size_t label, std::size_t feature) { return params_[label * dimension() + feature]; }
    double weight(std::size_t label, std::size_t feature) const { return params_[label * dimension() + feature]; }
    double& bias(std::size_t label) { return params_[num_labels() * dimension() + label]; }
    double bias(std::size_t label) const { return params_[num_labels() * dimension() + label]; }

    std::vector<double> logits(const FeatureVector& x) const;
    bool finite() const;

    /// Versioned little-endian binary container.
    std::string serialize() const;
    static LinearModel deserialize(std::string_view bytes);
    void save(const std::filesystem::path& path) const;
    static LinearModel load(const std::filesystem::path& path);

    bool operator==(const LinearModel&) const = default;

private:
    FeaturizerConfig features_;
    std::vector<std::string> labels_;
    std::string registry_id_;
    std::vector<double> params_;
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

struct Prediction {
    std::string label;
    std::vector<double> scores;  // one per model label, sums to 1
};

/// Argmax of softmax(Wx + b); ties go to the lower class index.
Prediction predict(const LinearModel& model, const FeatureVector& x);
Prediction predict(const LinearModel& model, const Document& doc);

/// Mean softmax cross-entropy over a batch and its gradient with respect to
/// model.parameters(). `grad` is resized and overwritten.
double loss_and_gradient(const LinearModel& model, std::span<const FeatureVector> xs,
                         std::span<const std::size_t> ys, std::vector<double>& grad);

struct TrainResult {
    LinearModel model;          // snapshot from the best validation epoch
    std::vector<double> trace;  // validation weighted F1 after each epoch
    std::size_t best_epoch = 0; // 1-based
};

/// Mini-batch AdamW on mean cross-entropy, reshuffling each epoch from
/// cfg.seed. Keeps the epoch with the highest validation weighted F1
/// (earliest on ties).
TrainResult train(const Dataset& train_set, const Dataset& valid_set, const TrainConfig& cfg);

} // namespace esgmix
