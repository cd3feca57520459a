#include "esgmix/augmentation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <set>

#include <nlohmann/json.hpp>

#include "esgmix/error.hpp"
#include "esgmix/text.hpp"

namespace esgmix {

using nlohmann::json;

namespace {

/// Prompt items are line-oriented; fold any line breaks inside a field.
std::string one_line(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool space = false;
    for (char c : text::trim(s)) {
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
        if (c == ' ') {
            space = true;
            continue;
        }
        if (space && !out.empty()) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

bool is_item_number(std::string_view line) {
    if (line.size() < 2 || line.back() != '.') return false;
    return std::all_of(line.begin(), line.end() - 1, [](unsigned char c) { return std::isdigit(c); });
}

} // namespace

PromptSpec make_prompt_spec(std::span<const Document> examples, const LabelRegistry& registry) {
    if (examples.empty()) throw PreconditionError("build_prompt: no examples");
    PromptSpec spec;
    spec.task_header = std::string(prompt_template::kTaskHeader);
    std::set<std::string> present;
    for (const auto& doc : examples) {
        if (!doc.label) throw PreconditionError("build_prompt: example '" + doc.id + "' is unlabeled");
        spec.examples.push_back({doc.headline.value_or(""), doc.body, *doc.label});
        present.insert(*doc.label);
    }
    for (const auto& label : present) spec.descriptions.push_back({label, registry.description(label)});
    return spec;
}

std::string render_candidate(std::string_view headline, std::string_view body, std::string_view label) {
    std::string out;
    out += prompt_template::kHeadlineMarker;
    out += ' ';
    out += one_line(headline);
    out += '\n';
    out += prompt_template::kBodyMarker;
    out += ' ';
    out += one_line(body);
    out += '\n';
    out += prompt_template::kLabelMarker;
    out += ' ';
    out += one_line(label);
    out += '\n';
    return out;
}

std::string render_prompt(const PromptSpec& spec) {
    std::string out = spec.task_header;
    out += "\n\n";
    for (const auto& d : spec.descriptions) out += d.name + ": " + one_line(d.description) + "\n";
    out += '\n';
    for (std::size_t i = 0; i < spec.examples.size(); ++i) {
        const auto& ex = spec.examples[i];
        out += std::to_string(i + 1) + ".\n";
        out += render_candidate(ex.headline, ex.body, ex.label);
        out += '\n';
    }
    out += std::to_string(spec.examples.size() + 1) + ".\n";
    out += prompt_template::kHeadlineMarker;
    return out;
}

std::string build_prompt(std::span<const Document> examples, const LabelRegistry& registry) {
    return render_prompt(make_prompt_spec(examples, registry));
}

std::vector<Document> balanced_sample(const Dataset& d, std::size_t k, Rng& rng) {
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i].label) by_label[*d[i].label].push_back(i);
    }
    if (by_label.empty()) throw PreconditionError("balanced_sample: dataset '" + d.name() + "' has no labeled documents");

    std::vector<const std::string*> labels;
    for (const auto& [label, _] : by_label) labels.push_back(&label);

    std::set<std::size_t> used;
    auto unused_in = [&](const std::string& label) {
        std::vector<std::size_t> free;
        for (auto i : by_label.at(label)) {
            if (!used.count(i)) free.push_back(i);
        }
        return free;
    };

    std::vector<Document> out;
    out.reserve(k);
    for (std::size_t draw = 0; draw < k; ++draw) {
        std::vector<const std::string*> open;
        for (const auto* label : labels) {
            if (!unused_in(*label).empty()) open.push_back(label);
        }
        const auto& pool = open.empty() ? labels : open;
        const std::string& label = *pool[rng.index(pool.size())];
        auto free = unused_in(label);
        const auto& candidates = free.empty() ? by_label.at(label) : free;
        const std::size_t pick = candidates[rng.index(candidates.size())];
        used.insert(pick);
        out.push_back(d[pick]);
    }
    return out;
}

CandidateSample parse_generation(std::string_view generated, const LabelRegistry& registry) {
    CandidateSample c;
    c.raw = std::string(generated);

    enum class Field { none, headline, body, label };
    Field field = Field::none;
    std::string leading;
    std::optional<std::string> headline, body, label;
    auto append = [](std::optional<std::string>& slot, std::string_view piece) {
        if (piece.empty()) return;
        if (!slot->empty()) slot->push_back(' ');
        *slot += piece;
    };

    for (const auto& raw_line : text::split_lines(generated)) {
        const auto line = text::trim(raw_line);
        const bool seen_marker = headline || body || label;
        if (is_item_number(line) && (seen_marker || !leading.empty())) break;
        if (text::istarts_with(line, prompt_template::kHeadlineMarker)) {
            if (seen_marker && (body || label)) break;  // next item began without a number
            headline = std::string(text::trim(line.substr(prompt_template::kHeadlineMarker.size())));
            field = Field::headline;
        } else if (text::istarts_with(line, prompt_template::kBodyMarker)) {
            if (body) break;
            body = std::string(text::trim(line.substr(prompt_template::kBodyMarker.size())));
            field = Field::body;
        } else if (text::istarts_with(line, prompt_template::kLabelMarker)) {
            label = std::string(text::trim(line.substr(prompt_template::kLabelMarker.size())));
            field = Field::label;
            break;
        } else {
            switch (field) {
            case Field::none:
                if (!line.empty()) leading += (leading.empty() ? "" : " ") + std::string(line);
                break;
            case Field::headline: append(headline, line); break;
            case Field::body: append(body, line); break;
            case Field::label: break;
            }
        }
    }
    // Continuation form: the prompt ends with the headline marker, so the
    // text before the first marker is the headline.
    if (!headline && !leading.empty()) headline = leading;

    if (!headline || headline->empty()) {
        c.rejection = "missing field: headline";
    } else if (!body || body->empty()) {
        c.rejection = "missing field: body";
    } else if (!label || label->empty()) {
        c.rejection = "missing field: label";
    }
    c.headline = headline.value_or("");
    c.body = body.value_or("");
    c.label = label.value_or("");
    if (c.accepted()) {
        if (auto canonical = registry.match(c.label)) {
            c.label = *canonical;
        } else {
            c.rejection = "unknown label";
        }
    }
    return c;
}

FilterConfig filter_config_from_json(const json& j) {
    FilterConfig cfg;
    cfg.min_chars = j.value("min_chars", cfg.min_chars);
    cfg.max_chars = j.value("max_chars", cfg.max_chars);
    cfg.attempt_multiplier = j.value("attempt_multiplier", cfg.attempt_multiplier);
    cfg.k_examples = j.value("k_examples", cfg.k_examples);
    if (cfg.min_chars > cfg.max_chars) throw ConfigError("filter config: min_chars exceeds max_chars");
    if (cfg.k_examples < 1) throw ConfigError("filter config: k_examples must be >= 1");
    if (cfg.attempt_multiplier < 1) throw ConfigError("filter config: attempt_multiplier must be >= 1");
    return cfg;
}

json to_json(const FilterConfig& cfg) {
    return {{"min_chars", cfg.min_chars},
            {"max_chars", cfg.max_chars},
            {"attempt_multiplier", cfg.attempt_multiplier},
            {"k_examples", cfg.k_examples}};
}

CandidateFilter::CandidateFilter(const Dataset& originals, FilterConfig config)
    : registry_(originals.registry_ptr()), config_(config) {
    for (const auto& doc : originals) original_bodies_.insert(text::normalize_for_dedup(doc.body));
}

std::string CandidateFilter::admit(const CandidateSample& c) {
    if (!c.accepted()) return c.rejection;
    if (!registry_->contains(c.label)) return "unknown label";
    const auto length = text::trim(c.body).size();
    if (length < config_.min_chars) return "too short";
    if (length > config_.max_chars) return "too long";
    auto key = text::normalize_for_dedup(c.body);
    if (original_bodies_.count(key)) return "duplicate of original";
    if (!accepted_bodies_.insert(std::move(key)).second) return "duplicate of accepted";
    return {};
}

FilterOutcome quality_filter(std::span<const CandidateSample> candidates, const Dataset& originals,
                             const FilterConfig& rules) {
    CandidateFilter filter(originals, rules);
    FilterOutcome out;
    for (const auto& c : candidates) {
        auto reason = filter.admit(c);
        if (reason.empty()) {
            out.accepted.push_back(c);
        } else {
            auto rejected = c;
            rejected.rejection = std::move(reason);
            out.rejected.push_back(std::move(rejected));
        }
    }
    return out;
}

json to_json(const AugmentReport& report) {
    return {{"requested", report.requested},
            {"generated", report.generated},
            {"accepted", report.accepted},
            {"rejected_by_reason", report.rejected_by_reason},
            {"per_label_counts", report.per_label_counts},
            {"status", report.complete ? "complete" : "budget_exhausted"}};
}

AugmentResult augment_gpt3mix(const Dataset& d, const Generator& backend, std::size_t target_total, Rng& rng,
                              const AugmentOptions& options) {
    if (target_total <= d.size()) {
        throw PreconditionError("augment_gpt3mix: target " + std::to_string(target_total) +
                                " must exceed the dataset size " + std::to_string(d.size()));
    }
    const auto counts = d.label_counts();
    if (counts.empty()) throw PreconditionError("augment_gpt3mix: dataset '" + d.name() + "' has no labeled documents");

    const std::size_t needed = target_total - d.size();
    const std::size_t budget = options.filter.attempt_multiplier * target_total;
    const std::size_t quota = (needed + counts.size() - 1) / counts.size();
    const std::size_t fanout = std::max<std::size_t>(1, options.fanout);

    AugmentReport report;
    report.requested = target_total;
    CandidateFilter filter(d, options.filter);
    std::vector<Document> docs = d.documents();
    std::size_t accepted = 0;
    std::size_t sequence = 0;

    while (accepted < needed && sequence < budget) {
        const std::size_t round = std::min(fanout, budget - sequence);
        std::vector<std::string> prompts;
        std::vector<Language> languages;
        for (std::size_t i = 0; i < round; ++i) {
            auto examples = balanced_sample(d, options.filter.k_examples, rng);
            languages.push_back(examples.front().language);
            prompts.push_back(build_prompt(examples, d.registry()));
        }

        std::vector<std::string> completions(round);
        if (round == 1) {
            completions[0] = backend.generate(prompts[0]);
        } else {
            std::vector<std::future<std::string>> pending;
            for (const auto& p : prompts) {
                pending.push_back(std::async(std::launch::async, [&backend, &p] { return backend.generate(p); }));
            }
            for (std::size_t i = 0; i < round; ++i) completions[i] = pending[i].get();
        }

        for (std::size_t i = 0; i < round; ++i) {
            const std::size_t seq = sequence + i;
            ++report.generated;
            if (accepted >= needed) continue;
            auto candidate = parse_generation(completions[i], d.registry());
            auto reason = filter.admit(candidate);
            if (reason.empty() && options.label_quota && report.per_label_counts[candidate.label] >= quota) {
                reason = "label quota reached";
            }
            if (!reason.empty()) {
                ++report.rejected_by_reason[reason];
                continue;
            }
            ++report.per_label_counts[candidate.label];
            ++accepted;
            Document doc;
            doc.id = "gpt3mix-" + backend.name() + "-" + std::to_string(seq);
            doc.headline = candidate.headline;
            doc.body = candidate.body;
            doc.language = languages[i];
            doc.label = candidate.label;
            doc.source = backend.name();
            doc.provenance = Provenance::gpt3mix;
            docs.push_back(std::move(doc));
        }
        sequence += round;
    }

    // Drop zero entries created by the quota lookup.
    std::erase_if(report.per_label_counts, [](const auto& kv) { return kv.second == 0; });
    report.accepted = accepted;
    report.complete = accepted >= needed;
    return {Dataset(d.name() + "-gpt3mix-" + backend.name(), std::move(docs), d.registry_ptr()), report};
}

TranslationResult translation_augment(const Dataset& d, const Translator& translator, Language target) {
    if (d.empty()) throw PreconditionError("translation_augment: empty dataset");
    TranslationResult result{Dataset(d.name(), {}, d.registry_ptr()), {}, {}};
    std::vector<Document> out;
    for (const auto& doc : d) {
        if (doc.language == target) {
            result.passed_through.push_back(doc.id);
            out.push_back(doc);
            continue;
        }
        Document translated = doc;
        translated.id = doc.id + "-tr-" + std::string(to_string(target));
        translated.language = target;
        translated.provenance = Provenance::translated;
        try {
            translated.body = translate(translator, {doc.id, doc.body, doc.language, target});
            if (text::trim(translated.body).empty()) throw DataError("empty translation");
        } catch (const Error& e) {
            result.failures.emplace_back(doc.id, e.what());
            continue;
        }
        if (doc.headline) {
            // Headlines are best effort: a missing headline translation drops the headline.
            try {
                translated.headline = translate(translator, {doc.id + "#headline", *doc.headline, doc.language, target});
            } catch (const Error&) {
                translated.headline.reset();
            }
        }
        out.push_back(std::move(translated));
    }
    if (result.failures.size() * 10 > d.size()) {
        throw BackendError(BackendError::Reason::retries_exhausted, translator.name(),
                           std::to_string(result.failures.size()) + " of " + std::to_string(d.size()) +
                               " documents failed to translate (first: " + result.failures.front().first + ": " +
                               result.failures.front().second + ")");
    }
    result.dataset = Dataset(d.name() + "-" + std::string(to_string(target)), std::move(out), d.registry_ptr());
    return result;
}

} // namespace esgmix
