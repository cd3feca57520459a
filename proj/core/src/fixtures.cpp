#include "esgmix/fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <vector>

#include "esgmix/error.hpp"
#include "esgmix/hash.hpp"
#include "esgmix/random.hpp"
#include "esgmix/text.hpp"

namespace esgmix::fixtures {
namespace {

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {
        "a", "about", "and", "any", "as", "at", "by", "for", "from", "in", "including", "into", "is", "its", "of",
        "on", "or", "such", "that", "the", "their", "this", "to", "with", "label", "efforts", "over", "own"};
    return words;
}

std::vector<std::string> vocabulary(const LabelRegistry& registry, const std::string& label) {
    std::vector<std::string> out;
    for (auto& w : text::tokenize(label + " " + registry.description(label))) {
        if (!stopwords().count(w) && w.size() > 2) out.push_back(std::move(w));
    }
    return out;
}

constexpr const char* kFillerEn[] = {"company", "announced", "report", "quarter", "investors", "group", "plan",
                                     "analysts", "market", "said", "statement", "year", "shareholders", "industry",
                                     "officials", "review", "global", "strategy", "sector", "week", "update"};
constexpr const char* kFillerFr[] = {"entreprise", "annonce", "rapport", "trimestre", "investisseurs", "groupe",
                                     "plan", "analystes", "marché", "selon", "communiqué", "année", "actionnaires",
                                     "secteur", "responsables", "stratégie", "mondial", "semaine", "société"};
constexpr const char* kSources[] = {"Reuters", "Bloomberg", "Les Echos", "Le Monde", "Financial Times",
                                    "ESG Today", "Novethic", "GreenBiz"};

} // namespace

std::string synthetic_text(const LabelRegistry& registry, const std::string& label, Language language,
                           std::uint64_t seed, double confusion) {
    Rng rng(seed);
    const auto own = vocabulary(registry, label);
    const auto names = registry.names();
    std::string out;
    const std::size_t sentences = 2 + rng.index(3);
    for (std::size_t s = 0; s < sentences; ++s) {
        const std::size_t words = 7 + rng.index(7);
        std::string sentence;
        for (std::size_t w = 0; w < words; ++w) {
            if (w) sentence.push_back(' ');
            if (rng.index(2) == 0) {
                if (language == Language::fr) {
                    sentence += kFillerFr[rng.index(std::size(kFillerFr))];
                } else {
                    sentence += kFillerEn[rng.index(std::size(kFillerEn))];
                }
            } else if (rng.uniform() < confusion) {
                const auto other = vocabulary(registry, names[rng.index(names.size())]);
                sentence += other[rng.index(other.size())];
            } else {
                sentence += own[rng.index(own.size())];
            }
        }
        sentence.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence.front())));
        if (!out.empty()) out.push_back(' ');
        out += sentence + ".";
    }
    return out;
}

namespace {

Document make_document(const LabelRegistry& registry, const std::string& label, std::size_t n,
                       const CorpusOptions& options) {
    const std::uint64_t seed = hash_combine(options.seed, hash_combine(hash_bytes(label), n));
    Rng rng(hash_combine(seed, 0x5eed));
    Document doc;
    doc.id = options.id_prefix + "-" + std::to_string(n);
    const auto words = text::tokenize(label);
    std::string headline = words[rng.index(words.size())];
    const auto lead = text::tokenize(synthetic_text(registry, label, options.language, hash_combine(seed, 1), 0.0));
    for (std::size_t i = 0; i < std::min<std::size_t>(5, lead.size()); ++i) headline += " " + lead[i];
    doc.headline = std::move(headline);
    doc.body = synthetic_text(registry, label, options.language, seed, options.confusion);
    doc.language = options.language;
    if (options.labeled) doc.label = label;
    doc.source = options.sources.empty() ? std::string(kSources[rng.index(std::size(kSources))])
                                         : options.sources[rng.index(options.sources.size())];
    doc.provenance = Provenance::original;
    return doc;
}

Dataset build(RegistryPtr registry, const std::vector<std::string>& sequence, const CorpusOptions& options) {
    std::vector<Document> docs;
    docs.reserve(sequence.size());
    for (std::size_t i = 0; i < sequence.size(); ++i) docs.push_back(make_document(*registry, sequence[i], i, options));
    // Identical bodies are astronomically unlikely but would break dedup-based counts.
    Dataset d(options.name, std::move(docs), registry);
    return dedup(d);
}

} // namespace

Dataset balanced_corpus(RegistryPtr registry, std::size_t per_label, const CorpusOptions& options) {
    std::vector<std::string> sequence;
    const auto names = registry->names();
    for (std::size_t r = 0; r < per_label; ++r) {
        for (const auto& name : names) sequence.push_back(name);
    }
    return build(std::move(registry), sequence, options);
}

Dataset proportional_corpus(RegistryPtr registry, const std::map<std::string, double>& proportions,
                            std::size_t total, const CorpusOptions& options) {
    double weight_sum = 0.0;
    for (const auto& [label, w] : proportions) {
        if (!registry->contains(label)) throw DataError("proportional_corpus: unknown label '" + label + "'");
        if (!(w > 0.0)) throw PreconditionError("proportional_corpus: weights must be positive");
        weight_sum += w;
    }
    std::map<std::string, std::size_t> counts;
    std::vector<std::pair<double, std::string>> remainders;
    std::size_t assigned = 0;
    for (const auto& [label, w] : proportions) {
        const double exact = w / weight_sum * static_cast<double>(total);
        counts[label] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[label];
        remainders.emplace_back(exact - std::floor(exact), label);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[remainders[i % remainders.size()].second];

    // Round-robin interleave so prefixes stay mixed.
    std::vector<std::string> sequence;
    bool more = true;
    for (std::size_t r = 0; more; ++r) {
        more = false;
        for (const auto& [label, c] : counts) {
            if (r < c) {
                sequence.push_back(label);
                more = true;
            }
        }
    }
    return build(std::move(registry), sequence, options);
}

} // namespace esgmix::fixtures
