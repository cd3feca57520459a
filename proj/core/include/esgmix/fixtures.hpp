#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "esgmix/corpus.hpp"

// Synthetic corpora for tests, benchmarks, and the bundled demo data. Text
// is drawn from each label's description vocabulary plus shared filler, with
// a few words borrowed from other labels so the task is learnable but not
// trivial.
namespace esgmix::fixtures {

struct CorpusOptions {
    std::string name = "fixture";
    Language language = Language::en;
    std::uint64_t seed = 0;
    /// Chance that any topical word is taken from a random other label.
    double confusion = 0.15;
    bool labeled = true;
    std::string id_prefix = "doc";
    /// Publishers drawn uniformly per document; empty uses a built-in list.
    std::vector<std::string> sources;
};

/// `per_label` documents for every registry label, interleaved by label.
Dataset balanced_corpus(RegistryPtr registry, std::size_t per_label, const CorpusOptions& options = {});

/// `total` documents whose label counts follow `proportions` (any positive
/// weights; normalized) by largest remainder.
Dataset proportional_corpus(RegistryPtr registry, const std::map<std::string, double>& proportions,
                            std::size_t total, const CorpusOptions& options = {});

/// One synthetic document body for `label`.
std::string synthetic_text(const LabelRegistry& registry, const std::string& label, Language language,
                           std::uint64_t seed, double confusion);

} // namespace esgmix::fixtures
