#include "esgmix/runner.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "esgmix/error.hpp"
#include "esgmix/hash.hpp"
#include "esgmix/mock_backend.hpp"
#include "esgmix/text.hpp"

namespace esgmix {

using nlohmann::json;

std::string_view to_string(RecipeKind k) noexcept {
    switch (k) {
    case RecipeKind::original: return "original";
    case RecipeKind::gpt3mix: return "gpt3mix";
    case RecipeKind::crawled: return "crawled";
    case RecipeKind::translation: return "translation";
    case RecipeKind::mix: return "mix";
    }
    return "original";
}

RecipeKind parse_recipe_kind(std::string_view s) {
    for (auto k : {RecipeKind::original, RecipeKind::gpt3mix, RecipeKind::crawled, RecipeKind::translation, RecipeKind::mix}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown preset recipe '" + std::string(s) + "'");
}

namespace {

std::string_view to_string(TieBreak t) { return t == TieBreak::label ? "label" : "score_then_label"; }

TieBreak parse_tie_break(std::string_view s) {
    if (s == "label") return TieBreak::label;
    if (s == "score_then_label") return TieBreak::score_then_label;
    throw ConfigError("unknown tie_break '" + std::string(s) + "'");
}

Language config_language(const json& j, const char* field) {
    try {
        return parse_language(j.at(field).get<std::string>());
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

std::string cell_name(const std::string& model, const std::string& preset) { return model + "-" + preset; }

} // namespace

const PresetRecipe& ExperimentConfig::preset(const std::string& n) const {
    for (const auto& p : presets) {
        if (p.name == n) return p;
    }
    throw ConfigError("unknown preset '" + n + "'");
}

const ModelSpec& ExperimentConfig::model(const std::string& n) const {
    for (const auto& m : models) {
        if (m.name == n) return m;
    }
    throw ConfigError("unknown model '" + n + "'");
}

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

void ExperimentConfig::validate() const {
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
    std::set<std::string> names;
    for (const auto& b : backends) {
        b.validate();
        if (!names.insert(b.name).second) throw ConfigError("duplicate backend name '" + b.name + "'");
    }
    auto backend_with = [&](const std::string& n, Capability c) {
        for (const auto& b : backends) {
            if (b.name == n) {
                if (b.capability != c) {
                    throw ConfigError("backend '" + n + "' is not a " + std::string(esgmix::to_string(c)) + " backend");
                }
                return;
            }
        }
        throw ConfigError("unknown backend '" + n + "'");
    };
    auto need_input = [&](const std::string& n, const std::string& who) {
        if (!inputs.count(n)) throw ConfigError("preset '" + who + "' references unknown input '" + n + "'");
    };

    names.clear();
    for (const auto& p : presets) {
        if (!names.insert(p.name).second) throw ConfigError("duplicate preset name '" + p.name + "'");
    }
    for (const auto& p : presets) {
        auto need_preset = [&](const std::string& n) {
            if (!names.count(n)) throw ConfigError("preset '" + p.name + "' references unknown preset '" + n + "'");
        };
        switch (p.kind) {
        case RecipeKind::original: need_input(p.input, p.name); break;
        case RecipeKind::gpt3mix:
            need_preset(p.source);
            backend_with(p.backend, Capability::generate);
            if (p.target == 0) throw ConfigError("preset '" + p.name + "' needs a positive target");
            break;
        case RecipeKind::crawled:
            need_input(p.input, p.name);
            if (!p.source.empty()) need_preset(p.source);
            if (p.backends.size() < 2) throw ConfigError("preset '" + p.name + "' needs at least 2 classify backends");
            for (const auto& b : p.backends) backend_with(b, Capability::classify);
            break;
        case RecipeKind::translation:
            backend_with(p.translator, Capability::translate);
            [[fallthrough]];
        case RecipeKind::mix:
            if (p.members.empty()) throw ConfigError("preset '" + p.name + "' has no members");
            for (const auto& m : p.members) need_preset(m);
            break;
        }
    }

    std::set<std::string> model_names;
    for (const auto& m : models) {
        if (!model_names.insert(m.name).second) throw ConfigError("duplicate model name '" + m.name + "'");
        m.train.validate();
    }
    std::set<Language> langs;
    for (const auto& s : subtasks) {
        if (!langs.insert(s.language).second) throw ConfigError("duplicate subtask " + std::string(esgmix::to_string(s.language)));
        if (!inputs.count(s.base_input)) throw ConfigError("subtask references unknown input '" + s.base_input + "'");
        if (s.test_input && !inputs.count(*s.test_input)) throw ConfigError("subtask references unknown input '" + *s.test_input + "'");
    }
    std::set<std::string> cells;
    for (const auto& p : grid_presets) {
        if (!langs.count(preset(p).language)) {
            throw ConfigError("grid preset '" + p + "' has no subtask for language " + std::string(esgmix::to_string(preset(p).language)));
        }
        for (const auto& m : grid_models) {
            model(m);
            cells.insert(cell_name(m, p));
        }
    }
    for (const auto& e : ensembles) {
        if (cells.count(e.name) || !names.insert("ensemble:" + e.name).second) {
            throw ConfigError("ensemble name '" + e.name + "' collides with another experiment");
        }
        if (e.members.size() < 2) throw ConfigError("ensemble '" + e.name + "' needs at least 2 members");
        for (const auto& m : e.members) {
            if (!cells.count(cell_name(m.model, m.preset))) {
                throw ConfigError("ensemble '" + e.name + "' member (" + m.model + ", " + m.preset + ") is not in the grid");
            }
            if (preset(m.preset).language != e.subtask) {
                throw ConfigError("ensemble '" + e.name + "' mixes subtasks");
            }
        }
    }
    if (rebalance) {
        if (!names.count(rebalance->pool)) throw ConfigError("rebalance pool '" + rebalance->pool + "' is not a preset");
        for (const auto& p : rebalance->presets) preset(p);
    }
}

ExperimentConfig parse_config(const json& j, std::filesystem::path base_dir) {
    ExperimentConfig cfg;
    cfg.base_dir = std::move(base_dir);
    try {
        cfg.name = j.value("name", cfg.name);
        if (j.contains("registry")) cfg.registry = j["registry"].get<std::string>();
        cfg.seed = j.value("seed", cfg.seed);
        const json inputs = j.value("inputs", json::object());
        for (const auto& [name, spec] : inputs.items()) {
            InputSpec in;
            in.path = spec.at("path").get<std::string>();
            in.format = spec.contains("format") ? parse_format(spec["format"].get<std::string>()) : format_from_extension(in.path);
            cfg.inputs.emplace(name, std::move(in));
        }
        for (const auto& b : j.value("backends", json::array())) cfg.backends.push_back(backend_spec_from_json(b));
        for (const auto& p : j.value("presets", json::array())) {
            PresetRecipe r;
            r.name = p.at("name").get<std::string>();
            r.kind = parse_recipe_kind(p.at("recipe").get<std::string>());
            r.language = config_language(p, "language");
            r.input = p.value("input", std::string{});
            r.source = p.value("source", std::string{});
            r.backend = p.value("backend", std::string{});
            r.target = p.value("target", std::size_t{0});
            r.backends = p.value("backends", std::vector<std::string>{});
            r.members = p.value("members", std::vector<std::string>{});
            r.translator = p.value("translator", std::string{});
            r.exclude_sources = p.value("exclude_sources", std::vector<std::string>{});
            if (p.contains("declared_size") && !p["declared_size"].is_null()) r.declared_size = p["declared_size"].get<std::size_t>();
            cfg.presets.push_back(std::move(r));
        }
        for (const auto& s : j.value("subtasks", json::array())) {
            SubtaskSpec st;
            st.language = config_language(s, "language");
            st.base_input = s.at("base_input").get<std::string>();
            if (s.contains("test_input") && !s["test_input"].is_null()) st.test_input = s["test_input"].get<std::string>();
            cfg.subtasks.push_back(std::move(st));
        }
        if (j.contains("split")) {
            cfg.split_fraction = j["split"].value("fraction", cfg.split_fraction);
            cfg.split_seed = j["split"].value("seed", cfg.split_seed);
        }
        const TrainConfig train_defaults = j.contains("train") ? train_config_from_json(j["train"]) : TrainConfig{};
        for (const auto& m : j.value("models", json::array())) {
            cfg.models.push_back({m.at("name").get<std::string>(),
                                  m.contains("train") ? train_config_from_json(m["train"], train_defaults) : train_defaults});
        }
        if (j.contains("grid")) {
            cfg.grid_presets = j["grid"].value("presets", std::vector<std::string>{});
            cfg.grid_models = j["grid"].value("models", std::vector<std::string>{});
        }
        cfg.gate_threshold = j.value("gate_threshold", cfg.gate_threshold);
        for (const auto& e : j.value("ensembles", json::array())) {
            EnsembleSpec es;
            es.name = e.at("name").get<std::string>();
            es.subtask = config_language(e, "subtask");
            for (const auto& m : e.at("members")) es.members.push_back({m.at("model").get<std::string>(), m.at("preset").get<std::string>()});
            if (e.contains("tie_break")) es.tie_break = parse_tie_break(e["tie_break"].get<std::string>());
            cfg.ensembles.push_back(std::move(es));
        }
        if (j.contains("rebalance") && !j["rebalance"].is_null()) {
            const auto& r = j["rebalance"];
            RebalanceSpec rs;
            rs.pool = r.at("pool").get<std::string>();
            rs.quotas = r.value("quotas", std::map<std::string, std::size_t>{});
            rs.presets = r.value("presets", std::vector<std::string>{});
            cfg.rebalance = std::move(rs);
        }
        if (j.contains("augment")) {
            const auto& a = j["augment"];
            cfg.augment.filter = filter_config_from_json(a);
            cfg.augment.fanout = a.value("fanout", cfg.augment.fanout);
            cfg.augment.label_quota = a.value("label_quota", cfg.augment.label_quota);
        }
        if (j.contains("consensus")) cfg.consensus.max_concurrency = j["consensus"].value("max_concurrency", cfg.consensus.max_concurrency);
        if (j.contains("mock")) cfg.mock_classify_noise = j["mock"].value("classify_noise", cfg.mock_classify_noise);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    if (!cfg.registry.empty()) j["registry"] = cfg.registry.string();
    j["seed"] = cfg.seed;
    j["inputs"] = json::object();
    for (const auto& [name, in] : cfg.inputs) j["inputs"][name] = {{"path", in.path.string()}, {"format", to_string(in.format)}};
    j["backends"] = json::array();
    for (const auto& b : cfg.backends) j["backends"].push_back(to_json(b));
    j["presets"] = json::array();
    for (const auto& p : cfg.presets) {
        json pj = {{"name", p.name}, {"recipe", to_string(p.kind)}, {"language", to_string(p.language)}};
        if (!p.input.empty()) pj["input"] = p.input;
        if (!p.source.empty()) pj["source"] = p.source;
        if (!p.backend.empty()) pj["backend"] = p.backend;
        if (p.target) pj["target"] = p.target;
        if (!p.backends.empty()) pj["backends"] = p.backends;
        if (!p.members.empty()) pj["members"] = p.members;
        if (!p.translator.empty()) pj["translator"] = p.translator;
        if (!p.exclude_sources.empty()) pj["exclude_sources"] = p.exclude_sources;
        if (p.declared_size) pj["declared_size"] = *p.declared_size;
        j["presets"].push_back(std::move(pj));
    }
    j["subtasks"] = json::array();
    for (const auto& s : cfg.subtasks) {
        json sj = {{"language", to_string(s.language)}, {"base_input", s.base_input}};
        if (s.test_input) sj["test_input"] = *s.test_input;
        j["subtasks"].push_back(std::move(sj));
    }
    j["split"] = {{"fraction", cfg.split_fraction}, {"seed", cfg.split_seed}};
    j["models"] = json::array();
    for (const auto& m : cfg.models) j["models"].push_back({{"name", m.name}, {"train", to_json(m.train)}});
    j["grid"] = {{"presets", cfg.grid_presets}, {"models", cfg.grid_models}};
    j["gate_threshold"] = cfg.gate_threshold;
    j["ensembles"] = json::array();
    for (const auto& e : cfg.ensembles) {
        json members = json::array();
        for (const auto& m : e.members) members.push_back({{"model", m.model}, {"preset", m.preset}});
        j["ensembles"].push_back({{"name", e.name},
                                  {"subtask", to_string(e.subtask)},
                                  {"members", members},
                                  {"tie_break", to_string(e.tie_break)}});
    }
    if (cfg.rebalance) {
        j["rebalance"] = {{"pool", cfg.rebalance->pool}, {"quotas", cfg.rebalance->quotas}, {"presets", cfg.rebalance->presets}};
    }
    j["augment"] = to_json(cfg.augment.filter);
    j["augment"]["fanout"] = cfg.augment.fanout;
    j["augment"]["label_quota"] = cfg.augment.label_quota;
    j["consensus"] = {{"max_concurrency", cfg.consensus.max_concurrency}};
    j["mock"] = {{"classify_noise", cfg.mock_classify_noise}};
    return j;
}

const Generator& BackendSet::generator(const std::string& name) const {
    auto it = generators.find(name);
    if (it == generators.end()) throw ConfigError("no generate backend named '" + name + "'");
    return *it->second;
}

std::vector<ClassifierPtr> BackendSet::classifier_list(const std::vector<std::string>& names) const {
    std::vector<ClassifierPtr> out;
    for (const auto& n : names) {
        auto it = classifiers.find(n);
        if (it == classifiers.end()) throw ConfigError("no classify backend named '" + n + "'");
        out.push_back(it->second);
    }
    return out;
}

const Translator& BackendSet::translator(const std::string& name) const {
    auto it = translators.find(name);
    if (it == translators.end()) throw ConfigError("no translate backend named '" + name + "'");
    return *it->second;
}

BackendSet make_backends(const ExperimentConfig& cfg, const BackendOptions& options) {
    BackendSet set;
    for (auto spec : cfg.backends) {
        if (auto it = options.endpoint_overrides.find(spec.name); it != options.endpoint_overrides.end()) {
            spec.endpoint = it->second;
        }
        const std::uint64_t seed = hash_combine(cfg.seed, hash_bytes(spec.name));
        const bool file_table = text::istarts_with(spec.endpoint, "file://");
        switch (spec.capability) {
        case Capability::generate:
            if (options.mock) {
                set.generators[spec.name] = std::make_shared<MockGenerator>(spec.name, seed);
            } else {
                set.generators[spec.name] = std::make_shared<HttpBackend>(spec);
            }
            break;
        case Capability::classify:
            if (options.mock) {
                set.classifiers[spec.name] = std::make_shared<KeywordClassifier>(spec.name, seed, cfg.mock_classify_noise);
            } else {
                set.classifiers[spec.name] = std::make_shared<HttpBackend>(spec);
            }
            break;
        case Capability::translate:
            if (file_table) {
                set.translators[spec.name] = std::make_shared<FileTranslator>(
                    FileTranslator::load(spec.name, cfg.resolve(spec.endpoint.substr(7))));
            } else if (options.mock) {
                set.translators[spec.name] = std::make_shared<IdentityTranslator>(spec.name);
            } else {
                set.translators[spec.name] = std::make_shared<HttpBackend>(spec);
            }
            break;
        }
    }
    return set;
}

RegistryPtr load_registry(const ExperimentConfig& cfg) {
    if (cfg.registry.empty()) return std::make_shared<const LabelRegistry>(LabelRegistry::builtin());
    return std::make_shared<const LabelRegistry>(LabelRegistry::load(cfg.resolve(cfg.registry)));
}

PresetBuilder::PresetBuilder(const ExperimentConfig& cfg, const BackendSet& backends, RegistryPtr registry,
                             std::optional<std::filesystem::path> workspace)
    : cfg_(cfg), backends_(backends), registry_(std::move(registry)), workspace_(std::move(workspace)) {}

void PresetBuilder::override_input(const std::string& name, Dataset d) {
    inputs_.insert_or_assign(name, std::move(d));
}

const Dataset& PresetBuilder::input(const std::string& name) {
    if (auto it = inputs_.find(name); it != inputs_.end()) return it->second;
    auto spec = cfg_.inputs.find(name);
    if (spec == cfg_.inputs.end()) throw ConfigError("unknown input '" + name + "'");
    return inputs_.emplace(name, load_dataset(cfg_.resolve(spec->second.path), spec->second.format, registry_, name))
        .first->second;
}

namespace {

json dataset_profile(const Dataset& d) {
    std::map<std::string, std::size_t> provenance;
    for (const auto& doc : d) ++provenance[std::string(to_string(doc.provenance))];
    return {{"size", d.size()}, {"provenance_counts", provenance}, {"label_counts", d.label_counts()}};
}

json recipe_json(const PresetRecipe& p) {
    ExperimentConfig tmp;
    tmp.presets.push_back(p);
    return to_json(tmp)["presets"][0];
}

} // namespace

const BuiltPreset& PresetBuilder::build(const std::string& name) {
    if (auto it = built_.find(name); it != built_.end()) return it->second;
    if (!in_progress_.insert(name).second) throw ConfigError("preset '" + name + "' depends on itself");
    const auto& recipe = cfg_.preset(name);
    const std::uint64_t seed = hash_combine(cfg_.seed, hash_bytes(name));

    json report = json::object();
    std::optional<Dataset> result;
    switch (recipe.kind) {
    case RecipeKind::original:
        result = input(recipe.input).renamed(name);
        break;
    case RecipeKind::gpt3mix: {
        const Dataset source = build(recipe.source).dataset;
        Rng rng(seed);
        auto out = augment_gpt3mix(source, backends_.generator(recipe.backend), recipe.target, rng, cfg_.augment);
        report = to_json(out.report);
        result = out.dataset.renamed(name);
        break;
    }
    case RecipeKind::crawled: {
        std::set<std::string> excluded(recipe.exclude_sources.begin(), recipe.exclude_sources.end());
        if (!recipe.source.empty()) {
            for (const auto& doc : build(recipe.source).dataset) {
                if (doc.source) excluded.insert(*doc.source);
            }
        }
        auto out = label_crawled(input(recipe.input), backends_.classifier_list(recipe.backends), excluded, cfg_.consensus);
        report = to_json(out.report);
        report["excluded_sources"] = excluded;
        result = out.dataset.renamed(name);
        break;
    }
    case RecipeKind::translation: {
        std::vector<Dataset> parts;
        json per_member = json::object();
        for (const auto& member : recipe.members) {
            auto out = translation_augment(build(member).dataset, backends_.translator(recipe.translator), recipe.language);
            per_member[member] = {{"translated", out.dataset.size() - out.passed_through.size()},
                                  {"passed_through", out.passed_through.size()},
                                  {"failures", out.failures.size()}};
            parts.push_back(out.dataset.renamed(member));
        }
        report["members"] = per_member;
        result = merge(parts, true, name);
        break;
    }
    case RecipeKind::mix: {
        std::vector<Dataset> parts;
        for (const auto& member : recipe.members) parts.push_back(build(member).dataset);
        result = merge(parts, true, name);
        break;
    }
    }

    json manifest = {{"preset", name}, {"recipe", recipe_json(recipe)}, {"seed", seed}, {"report", report}};
    manifest.update(dataset_profile(*result));
    if (recipe.declared_size) manifest["declared_size"] = *recipe.declared_size;
    if (workspace_) {
        const auto dir = *workspace_ / "datasets";
        save_dataset(*result, dir / (name + ".jsonl"), Format::jsonl);
        std::ofstream(dir / (name + ".manifest.json")) << manifest.dump(2) << '\n';
    }
    in_progress_.erase(name);
    return built_.emplace(name, BuiltPreset{std::move(*result), std::move(manifest)}).first->second;
}

BuiltPreset build_preset(const std::string& name, const ExperimentConfig& cfg, const BackendSet& backends,
                         std::optional<std::filesystem::path> workspace) {
    PresetBuilder builder(cfg, backends, load_registry(cfg), std::move(workspace));
    return builder.build(name);
}

RebalanceResult rebalance(const Dataset& train, const Dataset& pool, const std::map<std::string, std::size_t>& quotas,
                          Rng& rng) {
    for (const auto& [label, _] : quotas) {
        if (!train.registry().contains(label)) throw ConfigError("rebalance quota for unknown label '" + label + "'");
    }
    if (!pool.fully_labeled()) throw PreconditionError("rebalance: pool '" + pool.name() + "' has unlabeled documents");

    std::set<std::string> bodies, ids;
    for (const auto& doc : train) {
        bodies.insert(text::normalize_for_dedup(doc.body));
        ids.insert(doc.id);
    }
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!bodies.count(text::normalize_for_dedup(pool[i].body))) by_label[*pool[i].label].push_back(i);
    }

    RebalanceResult result{train, 0, {}};
    std::vector<Document> docs = train.documents();
    for (const auto& [label, quota] : quotas) {
        auto& candidates = by_label[label];
        rng.shuffle(std::span<std::size_t>(candidates));
        std::size_t taken = 0;
        for (std::size_t i = 0; i < candidates.size() && taken < quota; ++i) {
            Document doc = pool[candidates[i]];
            doc.id = pool.name() + ":" + doc.id;
            if (!ids.insert(doc.id).second) continue;
            docs.push_back(std::move(doc));
            ++taken;
        }
        if (taken < quota) result.shortfall[label] = quota - taken;
        result.appended += taken;
    }
    result.dataset = Dataset(train.name(), std::move(docs), train.registry_ptr());
    return result;
}

namespace {

struct CellOutcome {
    std::string name;
    Language subtask;
    PredictionRecord valid;
    std::optional<PredictionRecord> test;
    double valid_f1 = 0.0;
    std::optional<double> test_f1;
};

PredictionRecord predict_all(const LinearModel& model, const Dataset& d, const std::string& name) {
    PredictionRecord rec{name, {}};
    rec.pairs.reserve(d.size());
    const auto& labels = model.labels();
    for (const auto& doc : d) {
        auto p = predict(model, doc);
        const auto idx = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), p.label) - labels.begin());
        rec.pairs.push_back({doc.id, p.label, p.scores[idx]});
    }
    return rec;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const BackendSet& backends,
                         std::optional<std::filesystem::path> workspace) {
    cfg.validate();
    const auto registry = load_registry(cfg);
    PresetBuilder builder(cfg, backends, registry, workspace);
    RunResult run;

    struct SubtaskData {
        Dataset valid;
        std::optional<Dataset> test;
    };
    std::map<Language, SubtaskData> subtask_data;
    for (const auto& st : cfg.subtasks) {
        const Dataset base = builder.input(st.base_input);
        auto split = stratified_split(base, cfg.split_fraction, cfg.split_seed);
        builder.override_input(st.base_input, split.train.renamed(base.name()));
        std::optional<Dataset> test;
        if (st.test_input) test = builder.input(*st.test_input);
        run.log.push_back({{"stage", "split"},
                           {"subtask", to_string(st.language)},
                           {"input", st.base_input},
                           {"train", split.train.size()},
                           {"valid", split.valid.size()},
                           {"test", test ? test->size() : 0}});
        if (workspace) save_dataset(split.valid, *workspace / "splits" / (st.base_input + ".valid.jsonl"), Format::jsonl);
        subtask_data.emplace(st.language, SubtaskData{std::move(split.valid), std::move(test)});
    }

    std::vector<CellOutcome> cells;
    for (const auto& preset_name : cfg.grid_presets) {
        for (const auto& model_name : cfg.grid_models) {
            const auto name = cell_name(model_name, preset_name);
            try {
                const auto& recipe = cfg.preset(preset_name);
                const auto& data = subtask_data.at(recipe.language);
                Dataset train_set = builder.build(preset_name).dataset;
                if (cfg.rebalance && (cfg.rebalance->presets.empty() ||
                                      std::count(cfg.rebalance->presets.begin(), cfg.rebalance->presets.end(), preset_name))) {
                    Rng rng(hash_combine(cfg.seed, hash_bytes("rebalance:" + preset_name)));
                    auto rb = rebalance(train_set, builder.build(cfg.rebalance->pool).dataset, cfg.rebalance->quotas, rng);
                    run.log.push_back({{"stage", "rebalance"},
                                       {"experiment", name},
                                       {"appended", rb.appended},
                                       {"shortfall", rb.shortfall}});
                    train_set = std::move(rb.dataset);
                }
                const auto& model = cfg.model(model_name);
                auto trained = train(train_set, data.valid, model.train);

                CellOutcome cell{name, recipe.language, predict_all(trained.model, data.valid, name), std::nullopt, 0.0, std::nullopt};
                cell.valid_f1 = weighted_f1(gold_labels(data.valid), cell.valid).weighted_f1;
                if (data.test) {
                    cell.test = predict_all(trained.model, *data.test, name);
                    cell.test_f1 = weighted_f1(gold_labels(*data.test), *cell.test).weighted_f1;
                }
                run.log.push_back({{"stage", "train"},
                                   {"experiment", name},
                                   {"train_size", train_set.size()},
                                   {"best_epoch", trained.best_epoch},
                                   {"trace", trained.trace},
                                   {"valid_f1", cell.valid_f1},
                                   {"test_f1", cell.test_f1 ? json(*cell.test_f1) : json(nullptr)}});
                if (workspace) {
                    trained.model.save(*workspace / "models" / (name + ".bin"));
                    save_predictions(cell.valid, *workspace / "predictions" / (name + ".valid.jsonl"));
                    if (cell.test) save_predictions(*cell.test, *workspace / "predictions" / (name + ".test.jsonl"));
                }
                run.table.rows.push_back({name, recipe.language, cell.valid_f1, cell.test_f1});
                cells.push_back(std::move(cell));
            } catch (const Error& e) {
                throw Error(e.kind(), "(preset " + preset_name + ", model " + model_name + "): " + e.what());
            }
        }
    }

    std::vector<GateCandidate> candidates;
    for (const auto& c : cells) candidates.push_back({c.name, c.valid_f1});
    const auto retained = baseline_gate(candidates, cfg.gate_threshold);
    std::set<std::string> retained_names;
    for (const auto& r : retained) retained_names.insert(r.model_name);
    std::vector<std::string> excluded;
    for (const auto& c : candidates) {
        if (!retained_names.count(c.model_name)) excluded.push_back(c.model_name);
    }
    run.log.push_back({{"stage", "gate"},
                       {"threshold", cfg.gate_threshold},
                       {"retained", std::vector<std::string>(retained_names.begin(), retained_names.end())},
                       {"excluded", excluded}});

    for (const auto& spec : cfg.ensembles) {
        std::vector<const CellOutcome*> members;
        std::vector<std::string> gated_out;
        for (const auto& m : spec.members) {
            const auto name = cell_name(m.model, m.preset);
            auto it = std::find_if(cells.begin(), cells.end(), [&](const CellOutcome& c) { return c.name == name; });
            if (retained_names.count(name)) {
                members.push_back(&*it);
            } else {
                gated_out.push_back(name);
            }
        }
        std::vector<std::string> member_names;
        for (const auto* m : members) member_names.push_back(m->name);
        if (members.size() < 2) {
            run.log.push_back({{"stage", "ensemble"},
                               {"ensemble", spec.name},
                               {"members", member_names},
                               {"gated_out", gated_out},
                               {"skipped", "fewer than 2 members passed the gate"}});
            continue;
        }
        const auto& data = subtask_data.at(spec.subtask);
        const auto golds = gold_labels(data.valid);

        std::vector<PredictionRecord> valid_records;
        std::vector<std::pair<std::string, MetricsReport>> member_reports;
        for (const auto* m : members) {
            valid_records.push_back(m->valid);
            member_reports.emplace_back(m->name, weighted_f1(golds, m->valid));
        }
        auto voted = hard_vote(valid_records, spec.tie_break);
        voted.model_name = spec.name;
        const auto ensemble_report = weighted_f1(golds, voted);
        auto comparison = compare_to_members(ensemble_report, member_reports);

        std::optional<double> test_f1;
        if (data.test) {
            std::vector<PredictionRecord> test_records;
            for (const auto* m : members) test_records.push_back(*m->test);
            auto voted_test = hard_vote(test_records, spec.tie_break);
            voted_test.model_name = spec.name;
            test_f1 = weighted_f1(gold_labels(*data.test), voted_test).weighted_f1;
            if (workspace) save_predictions(voted_test, *workspace / "predictions" / (spec.name + ".test.jsonl"));
        }
        if (workspace) save_predictions(voted, *workspace / "predictions" / (spec.name + ".valid.jsonl"));
        run.log.push_back({{"stage", "ensemble"},
                           {"ensemble", spec.name},
                           {"members", member_names},
                           {"gated_out", gated_out},
                           {"comparison", to_json(comparison)},
                           {"test_f1", test_f1 ? json(*test_f1) : json(nullptr)}});
        run.table.rows.push_back({spec.name, spec.subtask, ensemble_report.weighted_f1, test_f1});
        run.ensembles.emplace_back(spec.name, std::move(comparison));
    }

    run.table.sort();
    run.table.validate();

    if (workspace) {
        std::string log;
        for (const auto& event : run.log) log += event.dump() + "\n";
        write_text(*workspace / "run_log.jsonl", log);
        if (!run.table.rows.empty()) {
            write_text(*workspace / "results.csv", render_report(run.table, ReportFormat::csv));
            write_text(*workspace / "results.md", render_report(run.table, ReportFormat::markdown));
        }
    }
    return run;
}

} // namespace esgmix
