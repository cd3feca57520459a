#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace esgmix::cli {

struct Globals {
    std::string config;
    std::string workspace = "workspace";
    std::string registry;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> backend_urls;  // NAME=URL
    bool mock = false;
};

struct IngestArgs {
    std::string input, output, format, output_format, name;
    bool dedup = false;
};

struct AugmentArgs {
    std::string input, output, backend;
    std::size_t target = 0;
};

struct LabelCrawledArgs {
    std::string input, output, source_dataset;
    std::vector<std::string> backends;
    std::vector<std::string> exclude_sources;
};

struct TranslateArgs {
    std::string input, output, backend, target_language;
};

struct SplitArgs {
    std::string input, train_output, valid_output;
    double fraction = 0.05;
};

struct TrainArgs {
    std::string train, valid, model_output, train_config;
    std::optional<std::size_t> epochs;
    std::optional<double> learning_rate;
    std::optional<std::size_t> dimension;
};

struct EvalArgs {
    std::string model, input, predictions, predictions_output, metrics_output;
};

struct EnsembleArgs {
    std::string gold, output, name, tie_break = "score_then_label";
    std::vector<std::string> predictions;
};

struct ReportArgs {
    std::string input, format = "markdown", output;
};

struct ServeMockArgs {
    std::string host = "127.0.0.1";
    int port = 8080;
    double classify_noise = 0.0;
};

struct FixtureArgs {
    std::string output, language = "en", id_prefix = "doc", name = "fixture";
    std::size_t per_label = 40;
    double confusion = 0.15;
    double random_labels = 0.0;
    bool unlabeled = false;
    std::vector<std::string> sources;
};

void ingest(const Globals& g, const IngestArgs& a);
void augment(const Globals& g, const AugmentArgs& a);
void label_crawled(const Globals& g, const LabelCrawledArgs& a);
void translate(const Globals& g, const TranslateArgs& a);
void split(const Globals& g, const SplitArgs& a);
void train(const Globals& g, const TrainArgs& a);
void eval(const Globals& g, const EvalArgs& a);
void ensemble(const Globals& g, const EnsembleArgs& a);
void run(const Globals& g);
void report(const Globals& g, const ReportArgs& a);
void serve_mock(const Globals& g, const ServeMockArgs& a);
void make_fixture(const Globals& g, const FixtureArgs& a);

} // namespace esgmix::cli
