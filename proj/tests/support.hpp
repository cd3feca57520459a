#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "esgmix/backends.hpp"
#include "esgmix/corpus.hpp"
#include "esgmix/evaluation.hpp"
#include "esgmix/labels.hpp"

namespace esgmix::test {

RegistryPtr builtin_registry();
/// The 35-label registry shipped in data/.
RegistryPtr full_registry();
/// Labels "A", "B", "C", ... with placeholder descriptions.
RegistryPtr letter_registry(std::size_t n);

Document doc(std::string id, std::string body, std::optional<std::string> label = std::nullopt,
             std::optional<std::string> source = std::nullopt);
Dataset dataset(std::string name, std::vector<Document> docs, RegistryPtr registry);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

std::filesystem::path source_dir();

/// Answers from a fixed text -> label table; unknown texts fall back to
/// `fallback`, or throw a timeout when no fallback is set.
class ScriptedClassifier final : public ZeroShotClassifier {
public:
    ScriptedClassifier(std::string name, std::map<std::string, std::string> answers,
                       std::optional<std::string> fallback = std::nullopt);
    const std::string& name() const override { return name_; }
    ClassifyResponse classify(std::string_view text, std::span<const std::string> labels) const override;

private:
    std::string name_;
    std::map<std::string, std::string> answers_;
    std::optional<std::string> fallback_;
};

/// Count-based weighted F1 written independently of the library.
double brute_force_weighted_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred);

PredictionRecord record(std::string name, const std::vector<std::string>& ids, const std::vector<std::string>& labels);
std::vector<GoldLabel> golds(const std::vector<std::string>& ids, const std::vector<std::string>& labels);

/// Runs a shell command, returns its exit status; stdout+stderr into `output`.
int run_command(const std::string& command, std::string* output = nullptr);

} // namespace esgmix::test
