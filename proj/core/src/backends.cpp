#include "esgmix/backends.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <future>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "esgmix/error.hpp"
#include "esgmix/hash.hpp"

namespace esgmix {

using nlohmann::json;

std::string_view to_string(Capability c) noexcept {
    switch (c) {
    case Capability::generate: return "generate";
    case Capability::classify: return "classify";
    case Capability::translate: return "translate";
    }
    return "generate";
}

Capability parse_capability(std::string_view s) {
    if (s == "generate") return Capability::generate;
    if (s == "classify") return Capability::classify;
    if (s == "translate") return Capability::translate;
    throw ConfigError("unknown backend capability '" + std::string(s) + "'");
}

void BackendSpec::validate() const {
    if (name.empty()) throw ConfigError("backend name must not be empty");
    if (params.timeout_ms <= 0) throw ConfigError("backend '" + name + "': timeout_ms must be positive");
    if (params.temperature < 0.0) throw ConfigError("backend '" + name + "': temperature must be >= 0");
    if (params.max_retries < 0) throw ConfigError("backend '" + name + "': max_retries must be >= 0");
    if (params.max_new_tokens <= 0) throw ConfigError("backend '" + name + "': max_new_tokens must be positive");
}

BackendSpec backend_spec_from_json(const json& j) {
    BackendSpec spec;
    try {
        spec.name = j.at("name").get<std::string>();
        spec.endpoint = j.value("endpoint", std::string{});
        spec.capability = parse_capability(j.at("capability").get<std::string>());
        if (j.contains("params")) {
            const auto& p = j["params"];
            spec.params.temperature = p.value("temperature", spec.params.temperature);
            spec.params.max_new_tokens = p.value("max_new_tokens", spec.params.max_new_tokens);
            spec.params.timeout_ms = p.value("timeout_ms", spec.params.timeout_ms);
            spec.params.max_retries = p.value("max_retries", spec.params.max_retries);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("backend spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

json to_json(const BackendSpec& spec) {
    return {{"name", spec.name},
            {"endpoint", spec.endpoint},
            {"capability", to_string(spec.capability)},
            {"params",
             {{"temperature", spec.params.temperature},
              {"max_new_tokens", spec.params.max_new_tokens},
              {"timeout_ms", spec.params.timeout_ms},
              {"max_retries", spec.params.max_retries}}}};
}

std::string auth_token_variable(std::string_view backend_name) {
    std::string var = "ESGMIX_TOKEN_";
    for (unsigned char c : backend_name) var.push_back(std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_');
    return var;
}

HttpBackend::HttpBackend(BackendSpec spec, Sleeper sleeper) : spec_(std::move(spec)), sleeper_(std::move(sleeper)) {
    spec_.validate();
    if (spec_.endpoint.empty()) throw ConfigError("backend '" + spec_.name + "' has no endpoint");
    retry_.max_retries = spec_.params.max_retries;
    if (const char* token = std::getenv(auth_token_variable(spec_.name).c_str()); token && *token) token_ = token;
}

void HttpBackend::require(Capability c) const {
    if (spec_.capability != c) {
        throw PreconditionError("backend '" + spec_.name + "' has capability " + std::string(to_string(spec_.capability)) +
                                ", not " + std::string(to_string(c)));
    }
}

std::string HttpBackend::post(const std::string& path, const std::string& body) const {
    const auto timeout = std::chrono::milliseconds(spec_.params.timeout_ms);
    return call_with_retries(spec_.name, retry_, sleeper_, hash_bytes(spec_.name + path + body), [&]() -> std::string {
        httplib::Client client(spec_.endpoint);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (token_) headers.emplace("Authorization", "Bearer " + *token_);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            const auto err = res.error();
            TransientError e("transport error on " + path + ": " + httplib::to_string(err));
            e.timeout = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
            throw e;
        }
        if (res->status == 429 || res->status >= 500) {
            throw TransientError("HTTP " + std::to_string(res->status) + " on " + path);
        }
        if (res->status < 200 || res->status >= 300) {
            throw BackendError(BackendError::Reason::status, spec_.name,
                               "HTTP " + std::to_string(res->status) + " on " + path);
        }
        return res->body;
    });
}

namespace {

json parse_reply(const std::string& backend, const std::string& body, const char* field) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error&) {
        throw BackendError(BackendError::Reason::protocol, backend, "reply is not JSON");
    }
    if (!j.is_object() || !j.contains(field) || !j[field].is_string()) {
        throw BackendError(BackendError::Reason::protocol, backend, std::string("reply lacks string field '") + field + "'");
    }
    return j;
}

} // namespace

std::string HttpBackend::generate(std::string_view prompt) const {
    require(Capability::generate);
    json req = {{"prompt", prompt},
                {"max_new_tokens", spec_.params.max_new_tokens},
                {"temperature", spec_.params.temperature}};
    return parse_reply(spec_.name, post("/v1/generate", req.dump()), "text")["text"].get<std::string>();
}

ClassifyResponse HttpBackend::classify(std::string_view text, std::span<const std::string> labels) const {
    require(Capability::classify);
    json req = {{"text", text}, {"labels", std::vector<std::string>(labels.begin(), labels.end())}};
    auto reply = parse_reply(spec_.name, post("/v1/classify", req.dump()), "label");
    ClassifyResponse out{reply["label"].get<std::string>(), std::nullopt};
    if (reply.contains("score") && reply["score"].is_number()) out.score = reply["score"].get<double>();
    return out;
}

std::string HttpBackend::translate(const TranslationRequest& request) const {
    require(Capability::translate);
    json req = {{"text", request.text}, {"source", to_string(request.source)}, {"target", to_string(request.target)}};
    return parse_reply(spec_.name, post("/v1/translate", req.dump()), "text")["text"].get<std::string>();
}

ClassifyResponse zero_shot_classify(const ZeroShotClassifier& backend, std::string_view text,
                                    std::span<const std::string> labels) {
    if (labels.empty()) throw PreconditionError("zero_shot_classify: empty candidate label set");
    auto response = backend.classify(text, labels);
    if (std::find(labels.begin(), labels.end(), response.label) == labels.end()) {
        throw BackendError(BackendError::Reason::protocol, backend.name(),
                           "returned label '" + response.label + "' outside the candidate set");
    }
    if (response.score && !(*response.score >= 0.0 && *response.score <= 1.0)) {
        throw BackendError(BackendError::Reason::protocol, backend.name(), "score outside [0, 1]");
    }
    return response;
}

std::optional<std::string> consensus_label(std::string_view text, std::span<const ClassifierPtr> backends,
                                           std::span<const std::string> labels, const ConsensusOptions& options) {
    if (backends.size() < 2) throw PreconditionError("consensus_label needs at least 2 backends");
    if (labels.empty()) throw PreconditionError("consensus_label: empty candidate label set");

    auto ask = [&](const ClassifierPtr& b) -> std::optional<std::string> {
        try {
            return zero_shot_classify(*b, text, labels).label;
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };

    std::vector<std::optional<std::string>> answers(backends.size());
    const std::size_t width = std::max<std::size_t>(1, options.max_concurrency);
    for (std::size_t start = 0; start < backends.size(); start += width) {
        const std::size_t stop = std::min(backends.size(), start + width);
        if (stop - start == 1 || width == 1) {
            for (std::size_t i = start; i < stop; ++i) answers[i] = ask(backends[i]);
            continue;
        }
        std::vector<std::future<std::optional<std::string>>> pending;
        for (std::size_t i = start; i < stop; ++i) pending.push_back(std::async(std::launch::async, ask, backends[i]));
        for (std::size_t i = start; i < stop; ++i) answers[i] = pending[i - start].get();
    }

    const auto& first = answers.front();
    if (!first) return std::nullopt;
    for (const auto& a : answers) {
        if (!a || *a != *first) return std::nullopt;
    }
    return first;
}

CrawlLabelResult label_crawled(const Dataset& unlabeled, std::span<const ClassifierPtr> backends,
                               const std::set<std::string>& excluded_sources, const ConsensusOptions& options) {
    if (backends.size() < 2) throw PreconditionError("label_crawled needs at least 2 classify backends");
    for (const auto& doc : unlabeled) {
        if (doc.label) throw PreconditionError("label_crawled: document '" + doc.id + "' is already labeled");
    }
    CrawlReport report;
    report.input = unlabeled.size();
    const auto filtered = filter_by_source(unlabeled, excluded_sources);
    report.excluded_by_source = unlabeled.size() - filtered.size();

    const auto labels = unlabeled.registry().names();
    std::vector<Document> kept;
    for (const auto& doc : filtered) {
        const std::string text = doc.headline ? *doc.headline + "\n" + doc.body : doc.body;
        if (auto label = consensus_label(text, backends, labels, options)) {
            Document labeled = doc;
            labeled.label = std::move(label);
            labeled.provenance = Provenance::crawled;
            kept.push_back(std::move(labeled));
        } else {
            ++report.dropped;
        }
    }
    report.kept = kept.size();
    return {Dataset(unlabeled.name(), std::move(kept), unlabeled.registry_ptr()), report};
}

json to_json(const CrawlReport& report) {
    return {{"input", report.input},
            {"excluded_by_source", report.excluded_by_source},
            {"kept", report.kept},
            {"dropped", report.dropped}};
}

std::string translate(const Translator& backend, const TranslationRequest& request) {
    if (request.source == request.target) {
        throw PreconditionError("translate: source and target language are both " + std::string(to_string(request.source)));
    }
    return backend.translate(request);
}

} // namespace esgmix
