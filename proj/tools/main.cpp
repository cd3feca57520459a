#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "esgmix/error.hpp"

int main(int argc, char** argv) {
    using namespace esgmix::cli;

    CLI::App app{"Data augmentation and classification experiments for ESG news key issues"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "Experiment config (JSON)");
    app.add_option("--workspace", g.workspace, "Directory for run outputs")->capture_default_str();
    app.add_option("--registry", g.registry, "Label registry (JSON); overrides the config");
    app.add_option("--seed", g.seed, "Seed; overrides the config");
    app.add_option("--backend-url", g.backend_urls, "Backend endpoint override NAME=URL")->allow_extra_args(false);
    app.add_flag("--mock", g.mock, "Use the built-in deterministic backends");

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Validate a dataset, optionally deduplicate and convert it");
    ingest->add_option("input", ingest_args.input)->required();
    ingest->add_option("-o,--output", ingest_args.output);
    ingest->add_option("--format", ingest_args.format, "jsonl or csv; default from extension");
    ingest->add_option("--output-format", ingest_args.output_format);
    ingest->add_option("--name", ingest_args.name);
    ingest->add_flag("--dedup", ingest_args.dedup);

    AugmentArgs augment_args;
    auto* augment = app.add_subcommand("augment", "Grow a labeled set with generated examples");
    augment->add_option("input", augment_args.input)->required();
    augment->add_option("-o,--output", augment_args.output)->required();
    augment->add_option("--backend", augment_args.backend)->required();
    augment->add_option("--target", augment_args.target, "Total size after augmentation")->required();

    LabelCrawledArgs crawl_args;
    auto* crawl = app.add_subcommand("label-crawled", "Label unlabeled articles by unanimous zero-shot consensus");
    crawl->add_option("input", crawl_args.input)->required();
    crawl->add_option("-o,--output", crawl_args.output)->required();
    crawl->add_option("--backend", crawl_args.backends, "Classify backend (repeat, at least 2)")->required();
    crawl->add_option("--exclude-source", crawl_args.exclude_sources);
    crawl->add_option("--exclude-sources-of", crawl_args.source_dataset, "Exclude every publisher in this dataset");

    TranslateArgs translate_args;
    auto* translate = app.add_subcommand("translate", "Translate a dataset into another language");
    translate->add_option("input", translate_args.input)->required();
    translate->add_option("-o,--output", translate_args.output)->required();
    translate->add_option("--backend", translate_args.backend)->required();
    translate->add_option("--to", translate_args.target_language)->required();

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "Stratified train/validation split");
    split->add_option("input", split_args.input)->required();
    split->add_option("--train-output", split_args.train_output)->required();
    split->add_option("--valid-output", split_args.valid_output)->required();
    split->add_option("--fraction", split_args.fraction)->capture_default_str();

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train a hashed n-gram classifier");
    train->add_option("--train", train_args.train)->required();
    train->add_option("--valid", train_args.valid)->required();
    train->add_option("-o,--output", train_args.model_output)->required();
    train->add_option("--train-config", train_args.train_config, "Training config (JSON)");
    train->add_option("--epochs", train_args.epochs);
    train->add_option("--lr", train_args.learning_rate);
    train->add_option("--dimension", train_args.dimension);

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Weighted F1 of a model or a prediction file");
    eval->add_option("input", eval_args.input, "Gold dataset")->required();
    auto* model_opt = eval->add_option("--model", eval_args.model);
    auto* preds_opt = eval->add_option("--predictions", eval_args.predictions);
    model_opt->excludes(preds_opt);
    eval->add_option("--save-predictions", eval_args.predictions_output)->needs(model_opt);
    eval->add_option("--metrics", eval_args.metrics_output, "Write metrics here instead of stdout");

    EnsembleArgs ensemble_args;
    auto* ensemble = app.add_subcommand("ensemble", "Hard-vote prediction files and compare with members");
    ensemble->add_option("--gold", ensemble_args.gold)->required();
    ensemble->add_option("predictions", ensemble_args.predictions)->required()->expected(2, -1);
    ensemble->add_option("-o,--output", ensemble_args.output);
    ensemble->add_option("--name", ensemble_args.name);
    ensemble->add_option("--tie-break", ensemble_args.tie_break)->capture_default_str();

    auto* run = app.add_subcommand("run", "Run the full experiment grid from --config");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Render a results table");
    report->add_option("input", report_args.input, "results.csv; default <workspace>/results.csv");
    report->add_option("--format", report_args.format)->capture_default_str();
    report->add_option("-o,--output", report_args.output);

    ServeMockArgs serve_args;
    auto* serve = app.add_subcommand("serve-mock", "Serve the deterministic mock backends over HTTP");
    serve->add_option("--host", serve_args.host)->capture_default_str();
    serve->add_option("--port", serve_args.port)->capture_default_str();
    serve->add_option("--classify-noise", serve_args.classify_noise)->capture_default_str();

    FixtureArgs fixture_args;
    auto* fixture = app.add_subcommand("make-fixture", "Write a synthetic corpus with every registry label");
    fixture->add_option("-o,--output", fixture_args.output)->required();
    fixture->add_option("--per-label", fixture_args.per_label)->capture_default_str();
    fixture->add_option("--language", fixture_args.language)->capture_default_str();
    fixture->add_option("--name", fixture_args.name)->capture_default_str();
    fixture->add_option("--id-prefix", fixture_args.id_prefix)->capture_default_str();
    fixture->add_option("--confusion", fixture_args.confusion)->capture_default_str();
    fixture->add_option("--random-labels", fixture_args.random_labels, "Share of labels replaced at random");
    fixture->add_flag("--unlabeled", fixture_args.unlabeled);
    fixture->add_option("--source", fixture_args.sources, "Publisher name (repeat); default built-in list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : esgmix::exit_code(esgmix::ErrorKind::config);
    }

    try {
        if (*ingest) esgmix::cli::ingest(g, ingest_args);
        else if (*augment) esgmix::cli::augment(g, augment_args);
        else if (*crawl) esgmix::cli::label_crawled(g, crawl_args);
        else if (*translate) esgmix::cli::translate(g, translate_args);
        else if (*split) esgmix::cli::split(g, split_args);
        else if (*train) esgmix::cli::train(g, train_args);
        else if (*eval) {
            if (eval_args.model.empty() && eval_args.predictions.empty()) {
                throw esgmix::ConfigError("eval needs --model or --predictions");
            }
            esgmix::cli::eval(g, eval_args);
        }
        else if (*ensemble) esgmix::cli::ensemble(g, ensemble_args);
        else if (*run) esgmix::cli::run(g);
        else if (*report) esgmix::cli::report(g, report_args);
        else if (*serve) esgmix::cli::serve_mock(g, serve_args);
        else if (*fixture) esgmix::cli::make_fixture(g, fixture_args);
    } catch (const esgmix::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return esgmix::exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return esgmix::exit_code(esgmix::ErrorKind::data);
    }
    return 0;
}
