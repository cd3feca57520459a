#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

namespace esgmix {

/// Local HTTP server speaking the backend wire protocol, answering from the
/// deterministic mocks. Used by tests and by `esgmix serve-mock`.
class MockServer {
public:
    struct Options {
        std::uint64_t seed = 0;
        double classify_noise = 0.0;
        std::string host = "127.0.0.1";
        int port = 0;  // 0 picks a free port
    };

    explicit MockServer(Options options);
    ~MockServer();
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    /// Binds and serves on a background thread. Returns the bound port.
    int start();
    /// Serves on the calling thread until stop().
    void run();
    void stop();

    int port() const noexcept { return port_; }
    std::string endpoint() const;

    /// The next `count` requests answer with HTTP `status` (fault injection).
    void fail_next(int count, int status = 503);
    /// The next `count` requests stall for `delay_ms` before answering.
    void delay_next(int count, int delay_ms);
    std::size_t requests_served() const noexcept { return served_.load(); }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Options options_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> failures_left_{0};
    std::atomic<int> failure_status_{503};
    std::atomic<int> delays_left_{0};
    std::atomic<int> delay_ms_{0};
    std::atomic<std::size_t> served_{0};
};

} // namespace esgmix
