#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "esgmix/backends.hpp"

namespace esgmix {

/// Deterministic stand-in for a generative model. The completion is a pure
/// function of (seed, prompt): it picks one of the labels shown in the
/// prompt's examples and writes a new item from that label's description
/// vocabulary.
class MockGenerator final : public Generator {
public:
    MockGenerator(std::string name, std::uint64_t seed) : name_(std::move(name)), seed_(seed) {}

    const std::string& name() const override { return name_; }
    std::string generate(std::string_view prompt) const override;

private:
    std::string name_;
    std::uint64_t seed_;
};

/// Zero-shot mock. Scores each candidate by the fraction of its name's words
/// found in the text and returns the best (ties to the earlier label in
/// byte order). With no overlap, or with probability `noise` per text, it
/// returns a seed-dependent pick instead.
class KeywordClassifier final : public ZeroShotClassifier {
public:
    KeywordClassifier(std::string name, std::uint64_t seed, double noise = 0.0)
        : name_(std::move(name)), seed_(seed), noise_(noise) {}

    const std::string& name() const override { return name_; }
    ClassifyResponse classify(std::string_view text, std::span<const std::string> labels) const override;

private:
    std::string name_;
    std::uint64_t seed_;
    double noise_;
};

class IdentityTranslator final : public Translator {
public:
    explicit IdentityTranslator(std::string name = "identity") : name_(std::move(name)) {}

    const std::string& name() const override { return name_; }
    std::string translate(const TranslationRequest& request) const override { return request.text; }

private:
    std::string name_;
};

/// Serves precomputed translations keyed by document id. Missing keys throw
/// BackendError::Reason::missing_entry naming the id.
class FileTranslator final : public Translator {
public:
    FileTranslator(std::string name, std::map<std::string, std::string> table)
        : name_(std::move(name)), table_(std::move(table)) {}

    /// JSON Lines of {"id": ..., "text": ...}.
    static FileTranslator load(std::string name, const std::filesystem::path& path);

    const std::string& name() const override { return name_; }
    std::string translate(const TranslationRequest& request) const override;

private:
    std::string name_;
    std::map<std::string, std::string> table_;
};

} // namespace esgmix
