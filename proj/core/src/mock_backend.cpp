#include "esgmix/mock_backend.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "esgmix/augmentation.hpp"
#include "esgmix/error.hpp"
#include "esgmix/hash.hpp"
#include "esgmix/random.hpp"
#include "esgmix/text.hpp"

namespace esgmix {
namespace {

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {
        "a", "about", "and", "any", "as", "at", "by", "for", "from", "in", "including", "into", "is", "its", "of",
        "on", "or", "such", "that", "the", "their", "this", "to", "with", "label", "efforts", "over", "own"};
    return words;
}

std::vector<std::string> content_words(std::string_view s) {
    std::vector<std::string> out;
    for (auto& w : text::tokenize(s)) {
        if (!stopwords().count(w)) out.push_back(std::move(w));
    }
    return out;
}

constexpr const char* kFiller[] = {
    "company", "announced", "report", "quarter", "investors", "group", "plan", "new", "analysts", "market",
    "said", "statement", "year", "shareholders", "regulators", "industry", "program", "officials", "review",
    "target", "global", "strategy", "sector", "week", "update", "region", "policy", "firm", "initiative"};

} // namespace

std::string MockGenerator::generate(std::string_view prompt) const {
    // Labels of the examples in the prompt, in order of appearance.
    std::vector<std::string> labels;
    std::map<std::string, std::string> descriptions;
    for (const auto& raw : text::split_lines(prompt)) {
        const auto line = text::trim(raw);
        if (text::istarts_with(line, prompt_template::kLabelMarker)) {
            std::string label(text::trim(line.substr(prompt_template::kLabelMarker.size())));
            if (!label.empty()) labels.push_back(std::move(label));
        } else if (auto colon = line.find(": This label is about"); colon != std::string_view::npos) {
            descriptions.emplace(std::string(line.substr(0, colon)), std::string(line.substr(colon + 2)));
        }
    }
    if (labels.empty()) return "I could not find any example in the prompt.";

    Rng rng(hash_bytes(prompt, seed_));
    const std::string& label = labels[rng.index(labels.size())];
    auto vocab = content_words(label);
    if (auto it = descriptions.find(label); it != descriptions.end()) {
        for (auto& w : content_words(it->second)) vocab.push_back(std::move(w));
    }
    const auto name_words = content_words(label);

    auto pick = [&](std::size_t n) {
        std::string out;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) out.push_back(' ');
            // Two topical words for every filler word.
            if (rng.index(3) < 2) {
                out += vocab[rng.index(vocab.size())];
            } else {
                out += kFiller[rng.index(std::size(kFiller))];
            }
        }
        return out;
    };

    std::string headline = name_words.empty() ? label : name_words[rng.index(name_words.size())];
    headline += " " + pick(5);
    std::string body;
    const std::size_t sentences = 2 + rng.index(3);
    for (std::size_t s = 0; s < sentences; ++s) {
        if (s) body.push_back(' ');
        auto sentence = pick(8 + rng.index(8));
        sentence.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence.front())));
        body += sentence + ".";
    }
    return " " + headline + "\n" + std::string(prompt_template::kBodyMarker) + " " + body + "\n" +
           std::string(prompt_template::kLabelMarker) + " " + label + "\n";
}

ClassifyResponse KeywordClassifier::classify(std::string_view text, std::span<const std::string> labels) const {
    if (labels.empty()) throw PreconditionError("classify: empty candidate label set");
    std::vector<std::string> sorted(labels.begin(), labels.end());
    std::sort(sorted.begin(), sorted.end());

    const auto tokens = text::tokenize(text);
    const std::set<std::string> present(tokens.begin(), tokens.end());

    Rng rng(hash_bytes(text, seed_));
    const std::string& fallback = sorted[rng.index(sorted.size())];
    if (noise_ > 0.0 && rng.uniform() < noise_) return {fallback, 0.0};

    const std::string* best = nullptr;
    double best_score = 0.0;
    for (const auto& label : sorted) {
        const auto words = content_words(label);
        if (words.empty()) continue;
        const auto hits = std::count_if(words.begin(), words.end(), [&](const auto& w) { return present.count(w) > 0; });
        const double score = static_cast<double>(hits) / static_cast<double>(words.size());
        if (score > best_score) {
            best_score = score;
            best = &label;
        }
    }
    if (!best) return {fallback, 0.0};
    return {*best, best_score};
}

FileTranslator FileTranslator::load(std::string name, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open translation table " + path.string());
    std::map<std::string, std::string> table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            table[j.at("id").get<std::string>()] = j.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ": malformed translation entry: " + e.what(), lineno);
        }
    }
    return FileTranslator(std::move(name), std::move(table));
}

std::string FileTranslator::translate(const TranslationRequest& request) const {
    auto it = table_.find(request.key);
    if (it == table_.end()) {
        throw BackendError(BackendError::Reason::missing_entry, name_, "no translation for id '" + request.key + "'");
    }
    return it->second;
}

} // namespace esgmix
