#include "esgmix/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "esgmix/error.hpp"
#include "esgmix/evaluation.hpp"
#include "esgmix/hash.hpp"
#include "esgmix/random.hpp"
#include "esgmix/text.hpp"

namespace esgmix {

using nlohmann::json;

void FeaturizerConfig::validate() const {
    if (dimension < 1024 || !std::has_single_bit(dimension)) {
        throw ConfigError("featurizer dimension must be a power of two >= 1024, got " + std::to_string(dimension));
    }
    if (dimension > (std::size_t{1} << 31)) throw ConfigError("featurizer dimension too large");
    if (ngram_order < 1) throw ConfigError("featurizer ngram_order must be >= 1");
}

double FeatureVector::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

FeatureVector hashed_counts(std::string_view input, const FeaturizerConfig& cfg) {
    cfg.validate();
    const auto tokens = text::tokenize(input);
    const std::uint64_t mask = cfg.dimension - 1;
    std::map<std::uint32_t, double> counts;
    std::string gram;
    for (std::size_t n = 1; n <= cfg.ngram_order; ++n) {
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            gram = tokens[i];
            for (std::size_t k = 1; k < n; ++k) {
                gram.push_back(' ');
                gram += tokens[i + k];
            }
            counts[static_cast<std::uint32_t>(hash_bytes(gram, cfg.hash_seed) & mask)] += 1.0;
        }
    }
    FeatureVector fv;
    fv.dimension = cfg.dimension;
    fv.indices.reserve(counts.size());
    fv.values.reserve(counts.size());
    for (const auto& [idx, c] : counts) {
        fv.indices.push_back(idx);
        fv.values.push_back(c);
    }
    return fv;
}

FeatureVector featurize(std::string_view input, const FeaturizerConfig& cfg) {
    auto fv = hashed_counts(input, cfg);
    const double n = fv.norm();
    if (n > 0.0) {
        for (auto& v : fv.values) v /= n;
    }
    return fv;
}

std::string document_text(const Document& doc) {
    return doc.headline ? *doc.headline + "\n" + doc.body : doc.body;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    features.validate();
}

TrainConfig train_config_from_json(const json& j, TrainConfig cfg) {
    try {
        cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
        cfg.epochs = j.value("epochs", cfg.epochs);
        cfg.beta1 = j.value("beta1", cfg.beta1);
        cfg.beta2 = j.value("beta2", cfg.beta2);
        cfg.epsilon = j.value("epsilon", cfg.epsilon);
        cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("features")) {
            const auto& f = j["features"];
            cfg.features.dimension = f.value("dimension", cfg.features.dimension);
            cfg.features.ngram_order = f.value("ngram_order", cfg.features.ngram_order);
            cfg.features.hash_seed = f.value("hash_seed", cfg.features.hash_seed);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json to_json(const TrainConfig& cfg) {
    return {{"learning_rate", cfg.learning_rate},
            {"epochs", cfg.epochs},
            {"beta1", cfg.beta1},
            {"beta2", cfg.beta2},
            {"epsilon", cfg.epsilon},
            {"weight_decay", cfg.weight_decay},
            {"batch_size", cfg.batch_size},
            {"seed", cfg.seed},
            {"features",
             {{"dimension", cfg.features.dimension},
              {"ngram_order", cfg.features.ngram_order},
              {"hash_seed", cfg.features.hash_seed}}}};
}

LinearModel::LinearModel(FeaturizerConfig features, std::vector<std::string> labels, std::string registry_id)
    : features_(features), labels_(std::move(labels)), registry_id_(std::move(registry_id)) {
    if (labels_.empty()) throw ConfigError("LinearModel needs at least one label");
    if (features_.dimension == 0) throw ConfigError("LinearModel needs a positive feature dimension");
    params_.assign(labels_.size() * features_.dimension + labels_.size(), 0.0);
}

std::vector<double> LinearModel::logits(const FeatureVector& x) const {
    if (x.dimension != dimension()) throw PreconditionError("feature dimension does not match the model");
    std::vector<double> z(num_labels());
    for (std::size_t l = 0; l < num_labels(); ++l) {
        const double* row = params_.data() + l * dimension();
        double s = bias(l);
        for (std::size_t k = 0; k < x.indices.size(); ++k) s += row[x.indices[k]] * x.values[k];
        z[l] = s;
    }
    return z;
}

bool LinearModel::finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

constexpr char kMagic[8] = {'E', 'S', 'G', 'M', 'I', 'X', 'L', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "model files are written in host (little-endian) order");

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
    put<std::uint64_t>(out, s.size());
    out += s;
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    std::string get_string() {
        const auto n = get<std::uint64_t>();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    void get_doubles(std::span<double> out) {
        need(out.size() * sizeof(double));
        std::memcpy(out.data(), bytes_.data() + pos_, out.size() * sizeof(double));
        pos_ += out.size() * sizeof(double);
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw DataError("model file is truncated");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string LinearModel::serialize() const {
    std::string out(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kFormatVersion);
    put<std::uint64_t>(out, features_.dimension);
    put<std::uint64_t>(out, features_.ngram_order);
    put<std::uint64_t>(out, features_.hash_seed);
    put_string(out, registry_id_);
    put<std::uint64_t>(out, labels_.size());
    for (const auto& l : labels_) put_string(out, l);
    out.append(reinterpret_cast<const char*>(params_.data()), params_.size() * sizeof(double));
    return out;
}

LinearModel LinearModel::deserialize(std::string_view bytes) {
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw DataError("not an esgmix model file");
    }
    Reader in(bytes.substr(sizeof kMagic));
    if (const auto version = in.get<std::uint32_t>(); version != kFormatVersion) {
        throw DataError("unsupported model format version " + std::to_string(version));
    }
    FeaturizerConfig features;
    features.dimension = in.get<std::uint64_t>();
    features.ngram_order = in.get<std::uint64_t>();
    features.hash_seed = in.get<std::uint64_t>();
    auto registry_id = in.get_string();
    const auto count = in.get<std::uint64_t>();
    if (count == 0 || count > 100000) throw DataError("model file has an implausible label count");
    std::vector<std::string> labels;
    for (std::uint64_t i = 0; i < count; ++i) labels.push_back(in.get_string());
    LinearModel model(features, std::move(labels), std::move(registry_id));
    in.get_doubles(model.params_);
    if (!in.done()) throw DataError("model file has trailing bytes");
    return model;
}

void LinearModel::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model " + path.string());
    const auto bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

LinearModel LinearModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("file not found: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.begin(), logits.end());
    if (p.empty()) return p;
    const double mx = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (auto& v : p) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : p) v /= sum;
    return p;
}

Prediction predict(const LinearModel& model, const FeatureVector& x) {
    Prediction out;
    out.scores = softmax(model.logits(x));
    const auto best = static_cast<std::size_t>(std::max_element(out.scores.begin(), out.scores.end()) - out.scores.begin());
    out.label = model.labels()[best];
    return out;
}

Prediction predict(const LinearModel& model, const Document& doc) {
    return predict(model, featurize(document_text(doc), model.features()));
}

double loss_and_gradient(const LinearModel& model, std::span<const FeatureVector> xs, std::span<const std::size_t> ys,
                         std::vector<double>& grad) {
    if (xs.size() != ys.size() || xs.empty()) throw PreconditionError("loss_and_gradient: bad batch");
    const std::size_t L = model.num_labels();
    const std::size_t D = model.dimension();
    grad.assign(model.parameters().size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(xs.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto& x = xs[i];
        auto p = softmax(model.logits(x));
        loss -= std::log(std::max(p[ys[i]], 1e-300)) * inv_n;
        p[ys[i]] -= 1.0;
        for (std::size_t l = 0; l < L; ++l) {
            const double delta = p[l] * inv_n;
            double* row = grad.data() + l * D;
            for (std::size_t k = 0; k < x.indices.size(); ++k) row[x.indices[k]] += delta * x.values[k];
            grad[L * D + l] += delta;
        }
    }
    return loss;
}

TrainResult train(const Dataset& train_set, const Dataset& valid_set, const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.empty()) throw PreconditionError("train: empty training set");
    if (valid_set.empty()) throw PreconditionError("train: empty validation set");
    if (!(train_set.registry() == valid_set.registry())) throw PreconditionError("train: datasets use different registries");
    const auto& registry = train_set.registry();

    auto encode = [&](const Dataset& d, std::vector<FeatureVector>& xs, std::vector<std::size_t>& ys) {
        for (const auto& doc : d) {
            if (!doc.label) throw PreconditionError("train: document '" + doc.id + "' is unlabeled");
            auto idx = registry.index_of(*doc.label);
            if (!idx) throw DataError("train: label '" + *doc.label + "' is not in the registry");
            xs.push_back(featurize(document_text(doc), cfg.features));
            ys.push_back(*idx);
        }
    };
    std::vector<FeatureVector> train_x, valid_x;
    std::vector<std::size_t> train_y, valid_y;
    encode(train_set, train_x, train_y);
    encode(valid_set, valid_x, valid_y);
    const auto golds = gold_labels(valid_set);

    LinearModel model(cfg.features, registry.names(), registry.id());
    TrainResult result{model, {}, 0};
    double best_f1 = -1.0;

    AdamWState state(model.parameters().size());
    const auto opt = cfg.optimizer();
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(train_x.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad;
    std::vector<FeatureVector> batch_x;
    std::vector<std::size_t> batch_y;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch_x.clear();
            batch_y.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch_x.push_back(train_x[order[i]]);
                batch_y.push_back(train_y[order[i]]);
            }
            loss_and_gradient(model, batch_x, batch_y, grad);
            adamw_update(model.parameters(), grad, state, opt);
        }

        PredictionRecord preds{"epoch-" + std::to_string(epoch), {}};
        for (std::size_t i = 0; i < valid_x.size(); ++i) {
            auto p = predict(model, valid_x[i]);
            preds.pairs.push_back({valid_set[i].id, std::move(p.label), std::nullopt});
        }
        const double f1 = weighted_f1(golds, preds).weighted_f1;
        result.trace.push_back(f1);
        if (f1 > best_f1) {
            best_f1 = f1;
            result.best_epoch = epoch;
            result.model = model;
        }
    }
    if (!result.model.finite()) throw DataError("train: parameters became non-finite");
    return result;
}

} // namespace esgmix
