#include <doctest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "esgmix/augmentation.hpp"
#include "esgmix/backends.hpp"
#include "esgmix/error.hpp"
#include "esgmix/mock_backend.hpp"
#include "esgmix/mock_server.hpp"
#include "support.hpp"

using namespace esgmix;
using test::doc;

namespace {

BackendSpec spec(std::string name, std::string endpoint, Capability cap, int timeout_ms = 2000) {
    BackendSpec s;
    s.name = std::move(name);
    s.endpoint = std::move(endpoint);
    s.capability = cap;
    s.params.timeout_ms = timeout_ms;
    return s;
}

struct RecordingSleeper {
    std::shared_ptr<std::vector<std::chrono::milliseconds>> delays = std::make_shared<std::vector<std::chrono::milliseconds>>();
    Sleeper sleeper() {
        auto d = delays;
        return [d](std::chrono::milliseconds ms) { d->push_back(ms); };
    }
};

/// A server with one fixed /v1/classify reply and a header echo.
class FixedServer {
public:
    explicit FixedServer(std::string classify_body) {
        server_.Post("/v1/classify", [body = std::move(classify_body)](const httplib::Request&, httplib::Response& res) {
            res.set_content(body, "application/json");
        });
        server_.Post("/v1/generate", [](const httplib::Request& req, httplib::Response& res) {
            const auto auth = req.get_header_value("Authorization");
            res.set_content(nlohmann::json{{"text", auth}}.dump(), "application/json");
        });
        server_.Post("/v1/translate", [](const httplib::Request&, httplib::Response& res) {
            res.status = 404;
            res.set_content("{}", "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FixedServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST_SUITE("http") {
    TEST_CASE("generate through the mock server matches the in-process mock") {
        MockServer server({42, 0.0});
        server.start();
        const HttpBackend http(spec("opt-13b", server.endpoint(), Capability::generate));
        auto reg = test::builtin_registry();
        const std::vector<Document> ex{doc("1", "The board met.", "Board")};
        const auto prompt = build_prompt(ex, *reg);
        const auto a = http.generate(prompt);
        CHECK(a == http.generate(prompt));
        CHECK(a == MockGenerator("mock-generate", 42).generate(prompt));
    }

    TEST_CASE("classify and translate through the mock server") {
        MockServer server({1, 0.0});
        server.start();
        const HttpBackend classify(spec("zs", server.endpoint(), Capability::classify));
        const auto labels = test::builtin_registry()->names();
        CHECK(zero_shot_classify(classify, "carbon output fell", labels).label == "Carbon Emissions");
        const HttpBackend mt(spec("mt", server.endpoint(), Capability::translate));
        CHECK(translate(mt, {"id", "bonjour", Language::fr, Language::en}) == "bonjour");
    }

    TEST_CASE("transient failures are retried with backoff") {
        MockServer server({1, 0.0});
        server.start();
        server.fail_next(2, 503);
        RecordingSleeper rec;
        const HttpBackend http(spec("gen", server.endpoint(), Capability::generate), rec.sleeper());
        CHECK_FALSE(http.generate("prompt").empty());
        CHECK(rec.delays->size() == 2);
        CHECK(server.requests_served() == 3);
        CHECK((*rec.delays)[0].count() >= 125);
        CHECK((*rec.delays)[0].count() <= 250);
        CHECK((*rec.delays)[1].count() >= 250);
        CHECK((*rec.delays)[1].count() <= 500);
    }

    TEST_CASE("rate limiting is retried, client errors are not") {
        MockServer server({1, 0.0});
        server.start();
        RecordingSleeper rec;
        const HttpBackend http(spec("gen", server.endpoint(), Capability::generate), rec.sleeper());
        server.fail_next(1, 429);
        CHECK_NOTHROW(http.generate("p"));
        server.fail_next(1, 400);
        try {
            http.generate("p");
            FAIL("expected BackendError");
        } catch (const BackendError& e) {
            CHECK(e.reason() == BackendError::Reason::status);
        }
    }

    TEST_CASE("persistent failure exhausts the retry budget") {
        MockServer server({1, 0.0});
        server.start();
        server.fail_next(100, 500);
        RecordingSleeper rec;
        const HttpBackend http(spec("gen", server.endpoint(), Capability::generate), rec.sleeper());
        try {
            http.generate("p");
            FAIL("expected BackendError");
        } catch (const BackendError& e) {
            CHECK(e.reason() == BackendError::Reason::retries_exhausted);
        }
        CHECK(server.requests_served() == 4);
    }

    TEST_CASE("slow replies time out and count as transient") {
        MockServer server({1, 0.0});
        server.start();
        server.delay_next(1, 600);
        RecordingSleeper rec;
        const HttpBackend http(spec("gen", server.endpoint(), Capability::generate, 200), rec.sleeper());
        CHECK_NOTHROW(http.generate("p"));
        CHECK(rec.delays->size() == 1);
    }

    TEST_CASE("unreachable endpoint names the backend") {
        RecordingSleeper rec;
        const HttpBackend http(spec("pythia-12b", "http://127.0.0.1:1", Capability::generate, 300), rec.sleeper());
        try {
            http.generate("p");
            FAIL("expected BackendError");
        } catch (const BackendError& e) {
            CHECK(e.reason() == BackendError::Reason::retries_exhausted);
            CHECK(e.backend() == "pythia-12b");
            CHECK(std::string(e.what()).find("pythia-12b") != std::string::npos);
        }
        CHECK(rec.delays->size() == 3);
    }

    TEST_CASE("capability mismatch is a precondition error") {
        const HttpBackend http(spec("zs", "http://127.0.0.1:1", Capability::classify));
        CHECK_THROWS_AS(http.generate("p"), PreconditionError);
        const std::vector<std::string> labels{"Board"};
        const HttpBackend gen(spec("g", "http://127.0.0.1:1", Capability::generate));
        CHECK_THROWS_AS(gen.classify("t", labels), PreconditionError);
        CHECK_THROWS_AS(HttpBackend(spec("g", "", Capability::generate)), ConfigError);
    }

    TEST_CASE("protocol violations") {
        const std::vector<std::string> labels{"Board", "Pay"};
        {
            FixedServer server(R"({"label":"Weather","score":0.9})");
            const HttpBackend http(spec("zs", server.endpoint(), Capability::classify));
            try {
                zero_shot_classify(http, "t", labels);
                FAIL("expected BackendError");
            } catch (const BackendError& e) {
                CHECK(e.reason() == BackendError::Reason::protocol);
            }
        }
        {
            FixedServer server("not json");
            const HttpBackend http(spec("zs", server.endpoint(), Capability::classify));
            try {
                http.classify("t", labels);
                FAIL("expected BackendError");
            } catch (const BackendError& e) {
                CHECK(e.reason() == BackendError::Reason::protocol);
            }
        }
        {
            FixedServer server(R"({"label":"Board","score":3})");
            const HttpBackend http(spec("zs", server.endpoint(), Capability::classify));
            CHECK_THROWS_AS(zero_shot_classify(http, "t", labels), BackendError);
        }
    }

    TEST_CASE("bearer token comes from the environment") {
        FixedServer server("{}");
        ::setenv("ESGMIX_TOKEN_SECURE_GEN", "s3cret", 1);
        const HttpBackend with(spec("secure-gen", server.endpoint(), Capability::generate));
        ::unsetenv("ESGMIX_TOKEN_SECURE_GEN");
        CHECK(with.generate("p") == "Bearer s3cret");
        const HttpBackend without(spec("open-gen", server.endpoint(), Capability::generate));
        CHECK(without.generate("p").empty());
    }

    TEST_CASE("consensus over HTTP backends, one of them down") {
        MockServer server({1, 0.0});
        server.start();
        const auto labels = test::builtin_registry()->names();
        RecordingSleeper rec;
        std::vector<ClassifierPtr> backends{
            std::make_shared<HttpBackend>(spec("a", server.endpoint(), Capability::classify)),
            std::make_shared<HttpBackend>(spec("b", server.endpoint(), Capability::classify))};
        CHECK(consensus_label("carbon carbon", backends, labels) == std::optional<std::string>("Carbon Emissions"));
        backends.push_back(std::make_shared<HttpBackend>(spec("down", "http://127.0.0.1:1", Capability::classify, 200), rec.sleeper()));
        CHECK_FALSE(consensus_label("carbon carbon", backends, labels).has_value());
    }
}
