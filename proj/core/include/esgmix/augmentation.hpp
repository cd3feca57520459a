#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "esgmix/backends.hpp"
#include "esgmix/corpus.hpp"
#include "esgmix/random.hpp"

namespace esgmix {

/// Pieces of the few-shot template. Field markers start a line; the parser
/// matches them case-insensitively and ignores surrounding whitespace.
namespace prompt_template {
inline constexpr std::string_view kTaskHeader =
    "Each item in the following list should contain #ESG News headline, #ESG news and the related "
    "#ESG key issues. #ESG key issues are based on MSCI ESG rating guidelines.";
inline constexpr std::string_view kHeadlineMarker = "#ESG News headline:";
inline constexpr std::string_view kBodyMarker = "#ESG news:";
inline constexpr std::string_view kLabelMarker = "#ESG key issues:";
} // namespace prompt_template

struct PromptExample {
    std::string headline;
    std::string body;
    std::string label;
};

/// A prompt before rendering. `descriptions` covers exactly the labels that
/// occur in `examples`, in label order.
struct PromptSpec {
    std::string task_header;
    std::vector<PromptExample> examples;
    std::vector<LabelEntry> descriptions;

    std::size_t k() const noexcept { return examples.size(); }
};

/// Throws PreconditionError for an empty example list or an unlabeled example.
PromptSpec make_prompt_spec(std::span<const Document> examples, const LabelRegistry& registry);
std::string render_prompt(const PromptSpec& spec);
std::string build_prompt(std::span<const Document> examples, const LabelRegistry& registry);

/// Two-stage draw: a label uniformly among labels present, then a document
/// uniformly within it. Within one call a document is not repeated while
/// unused documents remain.
std::vector<Document> balanced_sample(const Dataset& d, std::size_t k, Rng& rng);

struct CandidateSample {
    std::string headline;
    std::string body;
    std::string label;
    std::string raw;
    std::string rejection;  // empty when accepted

    bool accepted() const noexcept { return rejection.empty(); }
};

/// One list item in template form (no item number).
std::string render_candidate(std::string_view headline, std::string_view body, std::string_view label);

/// Reads one generated item. Structural problems become a rejection
/// ("missing field: body", "unknown label", ...), never an exception.
CandidateSample parse_generation(std::string_view text, const LabelRegistry& registry);

struct FilterConfig {
    std::size_t min_chars = 50;
    std::size_t max_chars = 4000;
    std::size_t attempt_multiplier = 5;
    std::size_t k_examples = 3;
};

FilterConfig filter_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FilterConfig& cfg);

/// Incremental form of quality_filter: remembers what it has admitted.
class CandidateFilter {
public:
    CandidateFilter(const Dataset& originals, FilterConfig config);

    /// Empty string when admitted, else the rejection reason.
    std::string admit(const CandidateSample& candidate);

private:
    RegistryPtr registry_;
    FilterConfig config_;
    std::unordered_set<std::string> original_bodies_;
    std::unordered_set<std::string> accepted_bodies_;
};

struct FilterOutcome {
    std::vector<CandidateSample> accepted;
    std::vector<CandidateSample> rejected;  // rejection reason filled in
};

/// Structural verdict, then length bounds, then duplicates against the
/// originals and earlier acceptances.
FilterOutcome quality_filter(std::span<const CandidateSample> candidates, const Dataset& originals,
                             const FilterConfig& rules);

struct AugmentOptions {
    FilterConfig filter;
    /// Prompts generated concurrently per round.
    std::size_t fanout = 4;
    /// Caps accepted synthetics per label at ceil(needed / labels present)
    /// so the generated share stays level even when the generator favors
    /// some labels.
    bool label_quota = true;
};

struct AugmentReport {
    std::size_t requested = 0;  // target_total
    std::size_t generated = 0;  // generation calls made
    std::size_t accepted = 0;
    std::map<std::string, std::size_t> rejected_by_reason;
    std::map<std::string, std::size_t> per_label_counts;  // accepted synthetics only
    bool complete = false;
};

nlohmann::json to_json(const AugmentReport& report);

struct AugmentResult {
    Dataset dataset;
    AugmentReport report;
};

/// Sample, prompt, generate, parse, filter until the dataset reaches
/// `target_total` or attempt_multiplier * target_total calls are spent
/// (report.complete = false, partial result). Originals come first, then
/// synthetics in prompt order. Generator errors propagate.
AugmentResult augment_gpt3mix(const Dataset& d, const Generator& backend, std::size_t target_total, Rng& rng,
                              const AugmentOptions& options = {});

struct TranslationResult {
    Dataset dataset;
    std::vector<std::string> passed_through;  // ids already in the target language
    std::vector<std::pair<std::string, std::string>> failures;  // (id, error)
};

/// One document per input in `target`, label kept, id suffixed with
/// "-tr-<lang>". Fails when more than 10% of documents cannot be translated.
TranslationResult translation_augment(const Dataset& d, const Translator& translator, Language target);

} // namespace esgmix
