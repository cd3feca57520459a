#include <doctest.h>

#include <nlohmann/json.hpp>

#include "support.hpp"

using namespace esgmix;
namespace fs = std::filesystem;

namespace {

int cli(const std::string& args, std::string* output = nullptr) {
    return test::run_command(std::string("\"") + ESGMIX_CLI_PATH + "\" " + args, output);
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

/// Every regular file under `root`, relative path -> content.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = test::read_file(e.path());
    }
    return out;
}

} // namespace

TEST_SUITE("cli") {
    TEST_CASE("fixture, split, train, eval") {
        const auto dir = test::temp_dir("cli-flow");
        std::string out;
        REQUIRE(cli("make-fixture --per-label 6 --confusion 0.2 -o " + q(dir / "all.jsonl"), &out) == 0);
        REQUIRE(cli("split " + q(dir / "all.jsonl") + " --fraction 0.1 --train-output " + q(dir / "train.jsonl") +
                        " --valid-output " + q(dir / "valid.jsonl"), &out) == 0);
        REQUIRE(cli("train --train " + q(dir / "train.jsonl") + " --valid " + q(dir / "valid.jsonl") + " --epochs 3 --dimension 1024 -o " +
                        q(dir / "m.bin"), &out) == 0);
        CHECK(fs::exists(dir / "m.bin"));
        REQUIRE(cli("eval " + q(dir / "valid.jsonl") + " --model " + q(dir / "m.bin") + " --save-predictions " + q(dir / "p.jsonl"),
                    &out) == 0);
        CHECK(out.find("weighted_f1") != std::string::npos);
        CHECK(fs::exists(dir / "p.jsonl"));
    }

    TEST_CASE("mock augmentation") {
        const auto dir = test::temp_dir("cli-augment");
        std::string out;
        REQUIRE(cli("make-fixture --per-label 2 -o " + q(dir / "seed.jsonl"), &out) == 0);
        CHECK(cli("--mock augment " + q(dir / "seed.jsonl") + " --backend opt-13b --target 120 -o " + q(dir / "aug.jsonl"), &out) == 0);
        std::size_t lines = 0;
        for (char c : test::read_file(dir / "aug.jsonl")) lines += c == '\n';
        CHECK(lines == 120);
    }

    TEST_CASE("exit codes by error kind") {
        const auto dir = test::temp_dir("cli-exit");
        std::string out;
        SUBCASE("bad usage is a config error") {
            CHECK(cli("train --no-such-flag", &out) == 1);
        }
        SUBCASE("malformed config is a config error") {
            test::write_file(dir / "bad.json", "{ not json");
            CHECK(cli("--config " + q(dir / "bad.json") + " run", &out) == 1);
        }
        SUBCASE("backend without endpoint or mock is a config error") {
            REQUIRE(cli("make-fixture --per-label 1 -o " + q(dir / "seed.jsonl"), &out) == 0);
            CHECK(cli("augment " + q(dir / "seed.jsonl") + " --backend gen --target 50 -o " + q(dir / "x.jsonl"), &out) == 1);
        }
        SUBCASE("unreachable backend is a backend error") {
            REQUIRE(cli("make-fixture --per-label 1 -o " + q(dir / "seed.jsonl"), &out) == 0);
            CHECK(cli("--backend-url gen=http://127.0.0.1:1 augment " + q(dir / "seed.jsonl") + " --backend gen --target 50 -o " +
                          q(dir / "x.jsonl"), &out) == 2);
            CHECK(out.find("gen") != std::string::npos);
        }
        SUBCASE("missing or malformed data is a data error") {
            CHECK(cli("ingest " + q(dir / "missing.jsonl"), &out) == 3);
            test::write_file(dir / "bad.jsonl", "{\"id\": \"1\", \"body\": \"x\", \"label\": \"Weather\"}\n");
            CHECK(cli("ingest " + q(dir / "bad.jsonl"), &out) == 3);
        }
    }

    TEST_CASE("report renders a results file") {
        const auto dir = test::temp_dir("cli-report");
        test::write_file(dir / "r.csv", "Experiment Name,Subtask,Valid F1,Test F1\nRoBERTa-base-mix,English,0.749,0.597\n");
        std::string out;
        REQUIRE(cli("report " + q(dir / "r.csv") + " --format markdown", &out) == 0);
        CHECK(out.find("| RoBERTa-base-mix | English | 0.749 | 0.597 |") != std::string::npos);
    }

    TEST_CASE("mock runs of the demo are byte-identical") {
        const auto dir = test::temp_dir("cli-run");
        const auto config = test::source_dir() / "configs" / "demo.json";
        std::string out;
        REQUIRE(cli("--config " + q(config) + " --workspace " + q(dir / "a") + " --mock run", &out) == 0);
        REQUIRE(cli("--config " + q(config) + " --workspace " + q(dir / "b") + " --mock run", &out) == 0);
        const auto a = snapshot(dir / "a");
        const auto b = snapshot(dir / "b");
        CHECK(a.size() > 10);
        CHECK(a == b);
        CHECK(a.count("results.csv") == 1);
        CHECK(a.count("results.md") == 1);
    }
}
