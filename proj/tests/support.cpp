#include "support.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "esgmix/error.hpp"

namespace esgmix::test {

RegistryPtr builtin_registry() {
    static const auto r = std::make_shared<const LabelRegistry>(LabelRegistry::builtin());
    return r;
}

RegistryPtr full_registry() {
    static const auto r = std::make_shared<const LabelRegistry>(LabelRegistry::load(source_dir() / "data" / "registry_35.json"));
    return r;
}

RegistryPtr letter_registry(std::size_t n) {
    std::vector<LabelEntry> entries;
    for (std::size_t i = 0; i < n; ++i) {
        std::string name(1, static_cast<char>('A' + i % 26));
        if (i >= 26) name += std::to_string(i / 26);
        entries.push_back({name, "Label " + name + " placeholder description."});
    }
    return std::make_shared<const LabelRegistry>(LabelRegistry(std::move(entries)));
}

Document doc(std::string id, std::string body, std::optional<std::string> label, std::optional<std::string> source) {
    Document d;
    d.id = std::move(id);
    d.body = std::move(body);
    d.label = std::move(label);
    d.source = std::move(source);
    return d;
}

Dataset dataset(std::string name, std::vector<Document> docs, RegistryPtr registry) {
    return Dataset(std::move(name), std::move(docs), std::move(registry));
}

std::filesystem::path temp_dir(const std::string& tag) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("esgmix-test-" + std::to_string(::getpid()) + "-" + tag + "-" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream(path, std::ios::binary) << content;
}

std::filesystem::path source_dir() { return ESGMIX_SOURCE_DIR; }

ScriptedClassifier::ScriptedClassifier(std::string name, std::map<std::string, std::string> answers,
                                       std::optional<std::string> fallback)
    : name_(std::move(name)), answers_(std::move(answers)), fallback_(std::move(fallback)) {}

ClassifyResponse ScriptedClassifier::classify(std::string_view text, std::span<const std::string>) const {
    for (const auto& [needle, label] : answers_) {
        if (text.find(needle) != std::string_view::npos) return {label, 1.0};
    }
    if (fallback_) return {*fallback_, 0.5};
    throw BackendError(BackendError::Reason::timeout, name_, "scripted timeout");
}

double brute_force_weighted_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
    std::set<std::string> labels(gold.begin(), gold.end());
    labels.insert(pred.begin(), pred.end());
    double total = 0.0;
    for (const auto& l : labels) {
        double tp = 0, fp = 0, fn = 0, support = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            const bool g = gold[i] == l, p = pred[i] == l;
            support += g;
            tp += g && p;
            fp += !g && p;
            fn += g && !p;
        }
        const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
        total += f1 * support / static_cast<double>(gold.size());
    }
    return total;
}

PredictionRecord record(std::string name, const std::vector<std::string>& ids, const std::vector<std::string>& labels) {
    PredictionRecord r{std::move(name), {}};
    for (std::size_t i = 0; i < ids.size(); ++i) r.pairs.push_back({ids[i], labels[i], std::nullopt});
    return r;
}

std::vector<GoldLabel> golds(const std::vector<std::string>& ids, const std::vector<std::string>& labels) {
    std::vector<GoldLabel> out;
    for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], labels[i]});
    return out;
}

int run_command(const std::string& command, std::string* output) {
    FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
    if (!pipe) return -1;
    std::array<char, 4096> buf{};
    std::string out;
    while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
    const int status = ::pclose(pipe);
    if (output) *output = std::move(out);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace esgmix::test
