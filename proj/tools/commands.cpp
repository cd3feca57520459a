#include "commands.hpp"

#include <csignal>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "esgmix/augmentation.hpp"
#include "esgmix/backends.hpp"
#include "esgmix/classifier.hpp"
#include "esgmix/corpus.hpp"
#include "esgmix/error.hpp"
#include "esgmix/evaluation.hpp"
#include "esgmix/fixtures.hpp"
#include "esgmix/hash.hpp"
#include "esgmix/mock_server.hpp"
#include "esgmix/random.hpp"
#include "esgmix/report.hpp"
#include "esgmix/runner.hpp"

namespace esgmix::cli {

namespace {

using nlohmann::json;

ExperimentConfig base_config(const Globals& g) {
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
    if (!g.registry.empty()) cfg.registry = std::filesystem::absolute(g.registry);
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

std::map<std::string, std::string> endpoint_overrides(const Globals& g) {
    std::map<std::string, std::string> out;
    for (const auto& item : g.backend_urls) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
            throw ConfigError("--backend-url expects NAME=URL, got '" + item + "'");
        }
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

/// Backends named on the command line that the config does not define are
/// added with the given capability; they need --mock or --backend-url.
BackendSet backends_for(const Globals& g, ExperimentConfig& cfg, const std::vector<std::string>& names, Capability cap) {
    const auto overrides = endpoint_overrides(g);
    for (const auto& name : names) {
        auto it = std::find_if(cfg.backends.begin(), cfg.backends.end(), [&](const BackendSpec& b) { return b.name == name; });
        if (it == cfg.backends.end()) {
            BackendSpec spec;
            spec.name = name;
            spec.capability = cap;
            cfg.backends.push_back(spec);
            it = std::prev(cfg.backends.end());
        }
        if (it->capability != cap) {
            throw ConfigError("backend '" + name + "' is not a " + std::string(to_string(cap)) + " backend");
        }
        const bool has_endpoint = !it->endpoint.empty() || overrides.count(name);
        if (!g.mock && !has_endpoint) {
            throw ConfigError("backend '" + name + "' has no endpoint; pass --backend-url " + name + "=URL or --mock");
        }
    }
    return make_backends(cfg, {g.mock, overrides});
}

Dataset read(const std::string& path, const RegistryPtr& registry, const std::string& format = {}) {
    const Format f = format.empty() ? format_from_extension(path) : parse_format(format);
    return load_dataset(path, f, registry);
}

void write(const Dataset& d, const std::string& path, const std::string& format = {}) {
    const Format f = format.empty() ? format_from_extension(path) : parse_format(format);
    save_dataset(d, path, f);
}

void write_json(const std::string& path, const json& j) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::string stem_name(const std::string& path) { return std::filesystem::path(path).stem().string(); }

} // namespace

void ingest(const Globals& g, const IngestArgs& a) {
    const auto registry = load_registry(base_config(g));
    Dataset d = read(a.input, registry, a.format);
    const std::size_t before = d.size();
    if (a.dedup) d = dedup(d);
    if (!a.name.empty()) d = d.renamed(a.name);
    if (!a.output.empty()) write(d, a.output, a.output_format);
    json summary = {{"dataset", d.name()}, {"documents", d.size()}, {"duplicates_removed", before - d.size()},
                    {"label_counts", d.label_counts()}};
    std::cout << summary.dump(2) << '\n';
}

void augment(const Globals& g, const AugmentArgs& a) {
    auto cfg = base_config(g);
    const auto registry = load_registry(cfg);
    const auto backends = backends_for(g, cfg, {a.backend}, Capability::generate);
    const Dataset d = read(a.input, registry);
    Rng rng(hash_combine(cfg.seed, hash_bytes("augment:" + a.backend)));
    auto result = augment_gpt3mix(d, backends.generator(a.backend), a.target, rng, cfg.augment);
    write(result.dataset, a.output);
    std::cout << to_json(result.report).dump(2) << '\n';
    if (!result.report.complete) std::cerr << "warning: attempt budget spent before reaching the target\n";
}

void label_crawled(const Globals& g, const LabelCrawledArgs& a) {
    auto cfg = base_config(g);
    const auto registry = load_registry(cfg);
    const auto backends = backends_for(g, cfg, a.backends, Capability::classify);
    std::set<std::string> excluded(a.exclude_sources.begin(), a.exclude_sources.end());
    if (!a.source_dataset.empty()) {
        for (const auto& doc : read(a.source_dataset, registry)) {
            if (doc.source) excluded.insert(*doc.source);
        }
    }
    const auto classifiers = backends.classifier_list(a.backends);
    auto result = esgmix::label_crawled(read(a.input, registry), classifiers, excluded, cfg.consensus);
    write(result.dataset, a.output);
    std::cout << to_json(result.report).dump(2) << '\n';
}

void translate(const Globals& g, const TranslateArgs& a) {
    auto cfg = base_config(g);
    const auto registry = load_registry(cfg);
    const auto backends = backends_for(g, cfg, {a.backend}, Capability::translate);
    Language target;
    try {
        target = parse_language(a.target_language);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    auto result = translation_augment(read(a.input, registry), backends.translator(a.backend), target);
    write(result.dataset, a.output);
    json summary = {{"documents", result.dataset.size()},
                    {"passed_through", result.passed_through.size()},
                    {"failures", result.failures.size()}};
    std::cout << summary.dump(2) << '\n';
}

void split(const Globals& g, const SplitArgs& a) {
    const auto cfg = base_config(g);
    const Dataset d = read(a.input, load_registry(cfg));
    auto result = stratified_split(d, a.fraction, cfg.seed);
    write(result.train, a.train_output);
    write(result.valid, a.valid_output);
    std::cout << json{{"train", result.train.size()}, {"valid", result.valid.size()}}.dump(2) << '\n';
}

void train(const Globals& g, const TrainArgs& a) {
    const auto cfg = base_config(g);
    const auto registry = load_registry(cfg);
    TrainConfig tc;
    if (!a.train_config.empty()) {
        std::ifstream in(a.train_config);
        if (!in) throw ConfigError("cannot open " + a.train_config);
        try {
            tc = train_config_from_json(json::parse(in));
        } catch (const json::exception& e) {
            throw ConfigError(a.train_config + ": " + e.what());
        }
    }
    if (g.seed) tc.seed = *g.seed;
    if (a.epochs) tc.epochs = *a.epochs;
    if (a.learning_rate) tc.learning_rate = *a.learning_rate;
    if (a.dimension) tc.features.dimension = *a.dimension;
    tc.validate();
    auto result = esgmix::train(read(a.train, registry), read(a.valid, registry), tc);
    result.model.save(a.model_output);
    std::cout << json{{"best_epoch", result.best_epoch}, {"trace", result.trace}}.dump(2) << '\n';
}

void eval(const Globals& g, const EvalArgs& a) {
    const auto registry = load_registry(base_config(g));
    const Dataset gold = read(a.input, registry);
    PredictionRecord preds;
    if (!a.predictions.empty()) {
        preds = load_predictions(a.predictions);
    } else {
        const auto model = LinearModel::load(a.model);
        if (model.registry_id() != registry->id()) {
            throw DataError("model " + a.model + " was trained on a different label registry");
        }
        preds.model_name = stem_name(a.model);
        for (const auto& doc : gold) {
            auto p = predict(model, doc);
            const auto idx = static_cast<std::size_t>(
                std::find(model.labels().begin(), model.labels().end(), p.label) - model.labels().begin());
            preds.pairs.push_back({doc.id, p.label, p.scores[idx]});
        }
        if (!a.predictions_output.empty()) save_predictions(preds, a.predictions_output);
    }
    write_json(a.metrics_output, to_json(weighted_f1(gold_labels(gold), preds)));
}

void ensemble(const Globals& g, const EnsembleArgs& a) {
    const auto registry = load_registry(base_config(g));
    const auto golds = gold_labels(read(a.gold, registry));
    std::vector<PredictionRecord> records;
    std::vector<std::pair<std::string, MetricsReport>> members;
    for (const auto& path : a.predictions) {
        records.push_back(load_predictions(path, stem_name(path)));
        members.emplace_back(records.back().model_name, weighted_f1(golds, records.back()));
    }
    TieBreak tie = TieBreak::score_then_label;
    if (a.tie_break == "label") {
        tie = TieBreak::label;
    } else if (a.tie_break != "score_then_label") {
        throw ConfigError("unknown tie break '" + a.tie_break + "'");
    }
    auto voted = hard_vote(records, tie);
    if (!a.name.empty()) voted.model_name = a.name;
    if (!a.output.empty()) save_predictions(voted, a.output);
    std::cout << to_json(compare_to_members(weighted_f1(golds, voted), members)).dump(2) << '\n';
}

void run(const Globals& g) {
    if (g.config.empty()) throw ConfigError("run needs --config");
    const auto cfg = base_config(g);
    const auto backends = make_backends(cfg, {g.mock, endpoint_overrides(g)});
    std::filesystem::create_directories(g.workspace);
    auto result = run_experiment(cfg, backends, std::filesystem::path(g.workspace));
    std::cout << render_report(result.table, ReportFormat::markdown);
}

void report(const Globals& g, const ReportArgs& a) {
    std::string path = a.input.empty() ? (std::filesystem::path(g.workspace) / "results.csv").string() : a.input;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto text = render_report(parse_report_csv(content), parse_report_format(a.format));
    if (a.output.empty()) {
        std::cout << text;
    } else {
        std::ofstream(a.output, std::ios::binary) << text;
    }
}

namespace {
MockServer* active_server = nullptr;
extern "C" void stop_active_server(int) {
    if (active_server) active_server->stop();
}
} // namespace

void serve_mock(const Globals& g, const ServeMockArgs& a) {
    MockServer server({g.seed.value_or(0), a.classify_noise, a.host, a.port});
    active_server = &server;
    std::signal(SIGINT, stop_active_server);
    std::signal(SIGTERM, stop_active_server);
    std::cerr << "serving mock backends on " << a.host << ":" << a.port << '\n';
    server.run();
    active_server = nullptr;
}

void make_fixture(const Globals& g, const FixtureArgs& a) {
    const auto registry = load_registry(base_config(g));
    fixtures::CorpusOptions opts;
    opts.name = a.name;
    opts.seed = g.seed.value_or(0);
    opts.confusion = a.confusion;
    opts.labeled = !a.unlabeled;
    opts.id_prefix = a.id_prefix;
    opts.sources = a.sources;
    try {
        opts.language = parse_language(a.language);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    if (a.random_labels < 0.0 || a.random_labels > 1.0) throw ConfigError("--random-labels must lie in [0, 1]");
    Dataset d = fixtures::balanced_corpus(registry, a.per_label, opts);
    if (a.random_labels > 0.0 && !a.unlabeled) {
        Rng rng(hash_combine(opts.seed, hash_bytes("random-labels")));
        const auto names = registry->names();
        std::vector<Document> docs = d.documents();
        for (auto& doc : docs) {
            if (rng.uniform() < a.random_labels) doc.label = names[rng.index(names.size())];
        }
        d = Dataset(d.name(), std::move(docs), registry);
    }
    write(d, a.output);
    std::cout << json{{"dataset", d.name()}, {"documents", d.size()}}.dump(2) << '\n';
}

} // namespace esgmix::cli
