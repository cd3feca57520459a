#include <doctest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "esgmix/csv.hpp"
#include "esgmix/error.hpp"
#include "esgmix/hash.hpp"
#include "esgmix/labels.hpp"
#include "esgmix/random.hpp"
#include "esgmix/text.hpp"
#include "support.hpp"

using namespace esgmix;

TEST_SUITE("text") {
    TEST_CASE("normalization lowercases, trims, and collapses whitespace") {
        CHECK(text::normalize_for_dedup("  Board   Meeting\n\tToday ") == "board meeting today");
        CHECK(text::normalize_for_dedup("") == "");
        CHECK(text::trim(" \t x y \n") == "x y");
    }

    TEST_CASE("tokenize keeps accented letters inside words") {
        const auto tokens = text::tokenize("Émissions de CO2, l'énergie!");
        const std::vector<std::string> expected{"émissions", "de", "co2", "l", "énergie"};
        CHECK(tokens == expected);
    }

    TEST_CASE("case-insensitive helpers") {
        CHECK(text::iequals("Reuters", "reuters"));
        CHECK_FALSE(text::iequals("Reuters", "Reuter"));
        CHECK(text::istarts_with("FILE:///tmp/x", "file://"));
    }

    TEST_CASE("split_lines handles CRLF and a missing final newline") {
        const auto lines = text::split_lines("a\r\nb\nc");
        REQUIRE(lines.size() == 3);
        CHECK(lines[0] == "a");
        CHECK(lines[2] == "c");
    }
}

TEST_SUITE("labels") {
    TEST_CASE("built-in registry has the 33 published key issues, sorted") {
        const auto r = LabelRegistry::builtin();
        CHECK(r.size() == 33);
        const auto names = r.names();
        CHECK(std::is_sorted(names.begin(), names.end()));
        CHECK(r.contains("Board"));
        CHECK(r.contains("Controversial Sourcing"));
        CHECK_FALSE(r.contains("Tax Transparency"));
        for (const auto& e : r.entries()) CHECK_FALSE(e.description.empty());
    }

    TEST_CASE("Access to Finance carries the published description") {
        const auto r = LabelRegistry::builtin();
        CHECK(r.description("Access to Finance") ==
              "This label is about their efforts to expand financial services to historically underserved markets, "
              "including small-business lending and the development of innovative distribution channels.");
    }

    TEST_CASE("the shipped 35-label registry extends the built-in one") {
        const auto full = test::full_registry();
        CHECK(full->size() == 35);
        const auto builtin = LabelRegistry::builtin();
        for (const auto& e : builtin.entries()) {
            REQUIRE(full->contains(e.name));
            CHECK(full->description(e.name) == e.description);
        }
        CHECK(full->contains("Health & Safety"));
        CHECK(full->contains("Tax Transparency"));
        CHECK(full->id() != builtin.id());
    }

    TEST_CASE("registry validation") {
        CHECK_THROWS_AS(LabelRegistry({{"Board", "x"}, {"Board", "y"}}), ConfigError);
        CHECK_THROWS_AS(LabelRegistry(std::vector<LabelEntry>{{" ", "x"}}), ConfigError);
        CHECK_THROWS_AS(LabelRegistry(std::vector<LabelEntry>{{"Board", ""}}), ConfigError);
    }

    TEST_CASE("index order is byte order and match is case-insensitive") {
        const LabelRegistry r({{"Pay", "p"}, {"Board", "b"}, {"Water Stress", "w"}});
        CHECK(r.index_of("Board") == 0u);
        CHECK(r.index_of("Pay") == 1u);
        CHECK(r.index_of("Water Stress") == 2u);
        CHECK(r.match("water STRESS") == std::optional<std::string>("Water Stress"));
        CHECK_FALSE(r.match("Weather").has_value());
        CHECK_THROWS_AS(r.description("Weather"), DataError);
    }

    TEST_CASE("json round trip") {
        const auto r = LabelRegistry::builtin();
        CHECK(LabelRegistry::from_json(r.to_json()) == r);
        const auto dir = test::temp_dir("registry");
        r.save(dir / "r.json");
        CHECK(LabelRegistry::load(dir / "r.json") == r);
        CHECK_THROWS_AS(LabelRegistry::load(dir / "missing.json"), ConfigError);
    }
}

TEST_SUITE("csv") {
    TEST_CASE("quoted fields with commas, quotes, and newlines") {
        const auto rows = csv::parse("a,b\n\"x, y\",\"he said \"\"hi\"\"\"\n\"multi\nline\",z\n");
        REQUIRE(rows.size() == 3);
        CHECK(rows[1].fields[0] == "x, y");
        CHECK(rows[1].fields[1] == "he said \"hi\"");
        CHECK(rows[2].fields[0] == "multi\nline");
        CHECK(rows[2].line == 3);
    }

    TEST_CASE("escape then parse is the identity") {
        const std::vector<std::string> fields{"plain", "a,b", "q\"q", "line\nbreak", ""};
        const auto rows = csv::parse(csv::format_row(fields) + "\n");
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].fields == fields);
    }

    TEST_CASE("unterminated quote names its line") {
        try {
            csv::parse("a,b\n\"open,c\n");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.line() == 2);
        }
    }
}

TEST_SUITE("random") {
    TEST_CASE("same seed, same stream") {
        Rng a(42), b(42), c(43);
        bool differs = false;
        for (int i = 0; i < 100; ++i) {
            const auto x = a.next();
            CHECK(x == b.next());
            differs |= x != c.next();
        }
        CHECK(differs);
    }

    TEST_CASE("index stays in range and covers it") {
        Rng rng(7);
        std::set<std::size_t> seen;
        for (int i = 0; i < 1000; ++i) {
            const auto k = rng.index(5);
            CHECK(k < 5);
            seen.insert(k);
        }
        CHECK(seen.size() == 5);
    }

    TEST_CASE("uniform lies in [0, 1) and normal has roughly unit variance") {
        Rng rng(3);
        double sum = 0, sq = 0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            CHECK(u >= 0.0);
            CHECK(u < 1.0);
            const double z = rng.normal();
            sum += z;
            sq += z * z;
        }
        CHECK(std::abs(sum / n) < 0.05);
        CHECK(std::abs(sq / n - 1.0) < 0.05);
    }

    TEST_CASE("hashing is stable") {
        static_assert(hash_bytes("board") == hash_bytes("board"));
        CHECK(hash_bytes("board") != hash_bytes("board", 1));
        CHECK(hash_combine(1, 2) != hash_combine(2, 1));
    }
}
