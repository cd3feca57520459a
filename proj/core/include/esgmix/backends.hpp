#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "esgmix/corpus.hpp"

namespace esgmix {

enum class Capability { generate, classify, translate };

std::string_view to_string(Capability c) noexcept;
Capability parse_capability(std::string_view s);

struct BackendParams {
    double temperature = 0.7;
    int max_new_tokens = 256;
    int timeout_ms = 30000;
    int max_retries = 3;
};

/// Where a model lives and how to talk to it.
struct BackendSpec {
    std::string name;
    std::string endpoint;  // e.g. "http://127.0.0.1:8080"
    Capability capability = Capability::generate;
    BackendParams params;

    /// Throws ConfigError: empty name, timeout_ms <= 0, negative temperature or retries.
    void validate() const;
};

BackendSpec backend_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BackendSpec& spec);

struct ClassifyResponse {
    std::string label;
    std::optional<double> score;
};

struct TranslationRequest {
    std::string key;  // document id; file-backed translators look entries up by it
    std::string text;
    Language source = Language::fr;
    Language target = Language::en;
};

// Backend interfaces. Implementations must be safe to call concurrently.

class Generator {
public:
    virtual ~Generator() = default;
    virtual const std::string& name() const = 0;
    virtual std::string generate(std::string_view prompt) const = 0;
};

class ZeroShotClassifier {
public:
    virtual ~ZeroShotClassifier() = default;
    virtual const std::string& name() const = 0;
    virtual ClassifyResponse classify(std::string_view text, std::span<const std::string> labels) const = 0;
};

class Translator {
public:
    virtual ~Translator() = default;
    virtual const std::string& name() const = 0;
    virtual std::string translate(const TranslationRequest& request) const = 0;
};

using GeneratorPtr = std::shared_ptr<const Generator>;
using ClassifierPtr = std::shared_ptr<const ZeroShotClassifier>;
using TranslatorPtr = std::shared_ptr<const Translator>;

// ---------------------------------------------------------------------------
// Retry policy

/// Exponential backoff: initial_delay * factor^(attempt-1), capped, then
/// scaled by a jitter factor drawn uniformly from [1 - jitter, 1].
struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_delay{250};
    double factor = 2.0;
    std::chrono::milliseconds max_delay{30000};
    double jitter = 0.5;

    std::chrono::milliseconds delay_before_retry(int retry, double unit_draw) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

/// Thrown by a request attempt when the failure is worth retrying.
class TransientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    bool timeout = false;
};

/// Runs `attempt` until it succeeds, throws a non-transient error, or the
/// retry budget is spent (BackendError::Reason::retries_exhausted).
std::string call_with_retries(const std::string& backend, const RetryPolicy& policy, const Sleeper& sleep,
                              std::uint64_t jitter_seed, const std::function<std::string()>& attempt);

// ---------------------------------------------------------------------------
// HTTP client for the JSON wire protocol:
//   POST /v1/generate  {prompt, max_new_tokens, temperature} -> {text}
//   POST /v1/classify  {text, labels:[...]}                  -> {label, score}
//   POST /v1/translate {text, source, target}                -> {text}

class HttpBackend final : public Generator, public ZeroShotClassifier, public Translator {
public:
    /// The bearer token, when any, is read from auth_token_variable(spec.name).
    explicit HttpBackend(BackendSpec spec, Sleeper sleeper = real_sleeper());

    const std::string& name() const override { return spec_.name; }
    const BackendSpec& spec() const noexcept { return spec_; }

    /// Each throws PreconditionError when the backend lacks the capability.
    std::string generate(std::string_view prompt) const override;
    ClassifyResponse classify(std::string_view text, std::span<const std::string> labels) const override;
    std::string translate(const TranslationRequest& request) const override;

private:
    std::string post(const std::string& path, const std::string& body) const;
    void require(Capability c) const;

    BackendSpec spec_;
    RetryPolicy retry_;
    Sleeper sleeper_;
    std::optional<std::string> token_;
};

/// "ESGMIX_TOKEN_" + name upper-cased with non-alphanumerics mapped to '_'.
std::string auth_token_variable(std::string_view backend_name);

// ---------------------------------------------------------------------------
// Labeling operations

/// Asks one classifier and enforces that the answer is among `labels`
/// (BackendError::Reason::protocol otherwise). `labels` must be non-empty.
ClassifyResponse zero_shot_classify(const ZeroShotClassifier& backend, std::string_view text,
                                    std::span<const std::string> labels);

struct ConsensusOptions {
    std::size_t max_concurrency = 4;  // 1 = query backends one after another
};

/// The label every backend agrees on, or nothing. A backend that fails or
/// answers outside the candidates counts as disagreement. Needs >= 2 backends.
std::optional<std::string> consensus_label(std::string_view text, std::span<const ClassifierPtr> backends,
                                           std::span<const std::string> labels, const ConsensusOptions& options = {});

struct CrawlReport {
    std::size_t input = 0;
    std::size_t excluded_by_source = 0;
    std::size_t kept = 0;
    std::size_t dropped = 0;
};

struct CrawlLabelResult {
    Dataset dataset;
    CrawlReport report;
};

/// Source filter, then unanimous zero-shot labeling over the registry's
/// labels. Documents without consensus are dropped; survivors are tagged
/// provenance=crawled.
CrawlLabelResult label_crawled(const Dataset& unlabeled, std::span<const ClassifierPtr> backends,
                               const std::set<std::string>& excluded_sources, const ConsensusOptions& options = {});

nlohmann::json to_json(const CrawlReport& report);

/// Checks source != target, then delegates.
std::string translate(const Translator& backend, const TranslationRequest& request);

} // namespace esgmix
