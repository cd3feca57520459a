#include <doctest.h>

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "esgmix/classifier.hpp"
#include "esgmix/error.hpp"
#include "esgmix/random.hpp"
#include "support.hpp"

using namespace esgmix;
using test::doc;

namespace {

FeaturizerConfig small_features(std::size_t order = 1, std::uint64_t seed = 0) {
    FeaturizerConfig f;
    f.dimension = 1024;
    f.ngram_order = order;
    f.hash_seed = seed;
    return f;
}

FeatureVector random_sparse(Rng& rng, std::size_t dim) {
    FeatureVector x;
    x.dimension = dim;
    for (std::uint32_t i = 0; i < dim; ++i) {
        if (rng.uniform() < 0.2) {
            x.indices.push_back(i);
            x.values.push_back(rng.normal());
        }
    }
    return x;
}

double loss_only(const LinearModel& m, std::span<const FeatureVector> xs, std::span<const std::size_t> ys) {
    std::vector<double> scratch;
    return loss_and_gradient(m, xs, ys, scratch);
}

Dataset toy_set(const std::string& name, RegistryPtr reg, std::size_t n, std::size_t offset) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        const bool board = i % 2 == 0;
        const auto id = name + std::to_string(i + offset);
        docs.push_back(board ? doc(id, "directors board chairman vote " + std::to_string(i), "Board")
                             : doc(id, "salary bonus executive compensation " + std::to_string(i), "Pay"));
    }
    return test::dataset(name, std::move(docs), std::move(reg));
}

RegistryPtr two_labels() {
    return std::make_shared<LabelRegistry>(std::vector<LabelEntry>{{"Board", "board"}, {"Pay", "pay"}});
}

} // namespace

TEST_SUITE("classifier") {
    TEST_CASE("featurize normalizes counts") {
        const auto f = small_features();
        const auto twice = featurize("board board", f);
        const auto once = featurize("board", f);
        CHECK(twice.indices == once.indices);
        CHECK(twice == once);
        CHECK(twice.norm() == doctest::Approx(1.0));
        CHECK(hashed_counts("board board", f).values == std::vector<double>{2.0});
        CHECK(featurize("", f).indices.empty());
        CHECK(featurize("Board", f) == featurize("board", f));
    }

    TEST_CASE("hash seed and order change the features") {
        const auto a = hashed_counts("independent directors", small_features(1, 0));
        const auto b = hashed_counts("independent directors", small_features(1, 99));
        CHECK(a.indices != b.indices);
        const auto bigram = hashed_counts("independent directors", small_features(2, 0));
        double total = 0;
        for (double v : bigram.values) total += v;
        CHECK(total == 3.0);
        for (std::size_t i = 1; i < bigram.indices.size(); ++i) CHECK(bigram.indices[i - 1] < bigram.indices[i]);
    }

    TEST_CASE("featurizer config validation") {
        FeaturizerConfig f;
        f.dimension = 1000;
        CHECK_THROWS_AS(f.validate(), ConfigError);
        f.dimension = 512;
        CHECK_THROWS_AS(f.validate(), ConfigError);
        f.dimension = 2048;
        f.ngram_order = 0;
        CHECK_THROWS_AS(f.validate(), ConfigError);
        CHECK_NOTHROW(FeaturizerConfig{}.validate());
    }

    TEST_CASE("softmax") {
        const std::vector<double> z{1.0, 2.0, 3.0};
        const auto p = softmax(z);
        CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
        CHECK(p[2] > p[1]);
        CHECK(p[1] > p[0]);
        const std::vector<double> big{1000.0, 1001.0, 1002.0};
        const auto q = softmax(big);
        for (std::size_t i = 0; i < 3; ++i) CHECK(q[i] == doctest::Approx(p[i]));
        const std::vector<double> flat(4, -7.0);
        for (double v : softmax(flat)) CHECK(v == doctest::Approx(0.25));
    }

    TEST_CASE("zero model predicts uniformly and picks the first label") {
        const LinearModel model(small_features(), {"A", "B", "C"}, "r");
        const auto p = predict(model, featurize("anything at all", model.features()));
        CHECK(p.label == "A");
        for (double s : p.scores) CHECK(s == doctest::Approx(1.0 / 3));
    }

    TEST_CASE("argmax ignores a constant bias shift") {
        Rng rng(3);
        LinearModel model(small_features(), {"A", "B", "C", "D"}, "r");
        for (auto& w : model.parameters()) w = rng.normal();
        const auto x = featurize("carbon water board pay", model.features());
        const auto before = predict(model, x).label;
        for (std::size_t l = 0; l < model.num_labels(); ++l) model.bias(l) += 12.5;
        CHECK(predict(model, x).label == before);
    }

    TEST_CASE("analytic gradient matches central differences") {
        constexpr std::size_t D = 64;
        constexpr std::size_t L = 5;
        Rng rng(11);
        FeaturizerConfig f;
        f.dimension = D;
        LinearModel model(f, {"A", "B", "C", "D", "E"}, "r");
        for (auto& w : model.parameters()) w = 0.3 * rng.normal();
        std::vector<FeatureVector> xs;
        std::vector<std::size_t> ys;
        for (int i = 0; i < 8; ++i) {
            xs.push_back(random_sparse(rng, D));
            ys.push_back(rng.index(L));
        }
        std::vector<double> grad;
        loss_and_gradient(model, xs, ys, grad);
        REQUIRE(grad.size() == L * D + L);

        const double h = 1e-5;
        int checked = 0;
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t k = rng.index(grad.size());
            const double saved = model.parameters()[k];
            model.parameters()[k] = saved + h;
            const double up = loss_only(model, xs, ys);
            model.parameters()[k] = saved - h;
            const double down = loss_only(model, xs, ys);
            model.parameters()[k] = saved;
            const double numeric = (up - down) / (2 * h);
            const double denom = std::max({std::abs(numeric), std::abs(grad[k]), 1e-8});
            if (std::abs(numeric) < 1e-10 && std::abs(grad[k]) < 1e-10) continue;
            CHECK(std::abs(numeric - grad[k]) / denom < 1e-4);
            ++checked;
        }
        CHECK(checked > 0);
    }

    TEST_CASE("separable toy set is learned") {
        auto reg = two_labels();
        const auto train_set = toy_set("t", reg, 20, 0);
        const auto valid_set = toy_set("v", reg, 6, 100);
        TrainConfig cfg;
        cfg.learning_rate = 0.05;
        cfg.epochs = 10;
        cfg.features = small_features();
        const auto result = train(train_set, valid_set, cfg);
        CHECK(result.trace.size() == 10);
        CHECK(result.best_epoch >= 1);
        CHECK(result.best_epoch <= 10);
        std::size_t correct = 0;
        for (const auto& d : train_set) correct += predict(result.model, d).label == *d.label;
        CHECK(correct == train_set.size());
        CHECK(result.trace[result.best_epoch - 1] == *std::max_element(result.trace.begin(), result.trace.end()));
    }

    TEST_CASE("one epoch gives one trace entry") {
        auto reg = two_labels();
        TrainConfig cfg;
        cfg.epochs = 1;
        cfg.features = small_features();
        const auto result = train(toy_set("t", reg, 8, 0), toy_set("v", reg, 4, 50), cfg);
        CHECK(result.trace.size() == 1);
        CHECK(result.best_epoch == 1);
    }

    TEST_CASE("training is deterministic in its seed") {
        auto reg = two_labels();
        const auto t = toy_set("t", reg, 20, 0);
        const auto v = toy_set("v", reg, 6, 100);
        TrainConfig cfg;
        cfg.epochs = 3;
        cfg.batch_size = 4;
        cfg.learning_rate = 0.01;
        cfg.features = small_features();
        const auto a = train(t, v, cfg);
        const auto b = train(t, v, cfg);
        CHECK(a.model == b.model);
        CHECK(a.trace == b.trace);
        cfg.seed = 5;
        CHECK_FALSE(train(t, v, cfg).model == a.model);
    }

    TEST_CASE("training preconditions") {
        auto reg = two_labels();
        TrainConfig cfg;
        cfg.features = small_features();
        const auto empty = test::dataset("e", {}, reg);
        CHECK_THROWS_AS(train(empty, toy_set("v", reg, 2, 0), cfg), PreconditionError);
        const auto unlabeled = test::dataset("u", {doc("x", "no label here")}, reg);
        CHECK_THROWS_AS(train(unlabeled, toy_set("v", reg, 2, 0), cfg), PreconditionError);
        cfg.epochs = 0;
        CHECK_THROWS_AS(train(toy_set("t", reg, 2, 0), toy_set("v", reg, 2, 9), cfg), ConfigError);
    }

    TEST_CASE("model serialization round-trips") {
        Rng rng(1);
        LinearModel model(small_features(2, 17), {"Board", "Pay", "Water Stress"}, "registry-x");
        for (auto& w : model.parameters()) w = rng.normal();
        const auto back = LinearModel::deserialize(model.serialize());
        CHECK(back == model);
        const auto dir = test::temp_dir("model");
        model.save(dir / "m.bin");
        CHECK(LinearModel::load(dir / "m.bin") == model);
        auto bytes = model.serialize();
        CHECK_THROWS_AS(LinearModel::deserialize(bytes.substr(0, bytes.size() / 2)), DataError);
        bytes[0] ^= 0x5a;
        CHECK_THROWS_AS(LinearModel::deserialize(bytes), DataError);
    }

    TEST_CASE("train config JSON round-trips and keeps defaults") {
        TrainConfig cfg;
        CHECK(cfg.learning_rate == 3e-4);
        CHECK(cfg.epochs == 20);
        cfg.learning_rate = 0.01;
        cfg.epochs = 7;
        cfg.seed = 9;
        cfg.features.dimension = 4096;
        cfg.features.ngram_order = 1;
        const auto back = train_config_from_json(to_json(cfg));
        CHECK(back.learning_rate == 0.01);
        CHECK(back.epochs == 7);
        CHECK(back.seed == 9);
        CHECK(back.features == cfg.features);
        CHECK(back.batch_size == cfg.batch_size);
        const auto partial = train_config_from_json(nlohmann::json{{"epochs", 2}});
        CHECK(partial.epochs == 2);
        CHECK(partial.learning_rate == 3e-4);
    }
}
