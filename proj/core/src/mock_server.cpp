#include "esgmix/mock_server.hpp"

#include <chrono>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "esgmix/corpus.hpp"
#include "esgmix/error.hpp"
#include "esgmix/mock_backend.hpp"

namespace esgmix {

using nlohmann::json;

struct MockServer::Impl {
    httplib::Server server;
};

MockServer::MockServer(Options options) : impl_(std::make_unique<Impl>()), options_(std::move(options)) {
    auto& srv = impl_->server;
    auto generator = std::make_shared<MockGenerator>("mock-generate", options_.seed);
    auto classifier = std::make_shared<KeywordClassifier>("mock-classify", options_.seed, options_.classify_noise);

    // Returns true when the request was answered by fault injection.
    auto inject = [this](httplib::Response& res) {
        ++served_;
        if (delays_left_.load() > 0 && delays_left_.fetch_sub(1) > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_.load()));
        }
        if (failures_left_.load() > 0 && failures_left_.fetch_sub(1) > 0) {
            res.status = failure_status_.load();
            res.set_content(R"({"error":"injected failure"})", "application/json");
            return true;
        }
        return false;
    };
    auto bad_request = [](httplib::Response& res, const std::string& why) {
        res.status = 400;
        res.set_content(json{{"error", why}}.dump(), "application/json");
    };

    srv.Post("/v1/generate", [=](const httplib::Request& req, httplib::Response& res) {
        if (inject(res)) return;
        try {
            auto j = json::parse(req.body);
            res.set_content(json{{"text", generator->generate(j.at("prompt").get<std::string>())}}.dump(),
                            "application/json");
        } catch (const std::exception& e) {
            bad_request(res, e.what());
        }
    });
    srv.Post("/v1/classify", [=](const httplib::Request& req, httplib::Response& res) {
        if (inject(res)) return;
        try {
            auto j = json::parse(req.body);
            auto labels = j.at("labels").get<std::vector<std::string>>();
            auto out = classifier->classify(j.at("text").get<std::string>(), labels);
            res.set_content(json{{"label", out.label}, {"score", out.score.value_or(0.0)}}.dump(), "application/json");
        } catch (const std::exception& e) {
            bad_request(res, e.what());
        }
    });
    srv.Post("/v1/translate", [=](const httplib::Request& req, httplib::Response& res) {
        if (inject(res)) return;
        try {
            auto j = json::parse(req.body);
            parse_language(j.at("source").get<std::string>());
            parse_language(j.at("target").get<std::string>());
            res.set_content(json{{"text", j.at("text").get<std::string>()}}.dump(), "application/json");
        } catch (const std::exception& e) {
            bad_request(res, e.what());
        }
    });
}

MockServer::~MockServer() { stop(); }

int MockServer::start() {
    auto& srv = impl_->server;
    port_ = options_.port == 0 ? srv.bind_to_any_port(options_.host) : (srv.bind_to_port(options_.host, options_.port) ? options_.port : -1);
    if (port_ <= 0) throw ConfigError("mock server: cannot bind " + options_.host + ":" + std::to_string(options_.port));
    thread_ = std::thread([&srv] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    return port_;
}

void MockServer::run() {
    auto& srv = impl_->server;
    port_ = options_.port == 0 ? srv.bind_to_any_port(options_.host) : (srv.bind_to_port(options_.host, options_.port) ? options_.port : -1);
    if (port_ <= 0) throw ConfigError("mock server: cannot bind " + options_.host + ":" + std::to_string(options_.port));
    srv.listen_after_bind();
}

void MockServer::stop() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockServer::endpoint() const { return "http://" + options_.host + ":" + std::to_string(port_); }

void MockServer::fail_next(int count, int status) {
    failure_status_ = status;
    failures_left_ = count;
}

void MockServer::delay_next(int count, int delay_ms) {
    delay_ms_ = delay_ms;
    delays_left_ = count;
}

} // namespace esgmix
