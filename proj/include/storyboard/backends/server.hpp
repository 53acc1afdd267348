#pragma once

// Provider side of the protocol: request dispatch onto any ProviderSet.

#include "storyboard/backends/capabilities.hpp"
#include "storyboard/backends/protocol.hpp"

#include <atomic>
#include <chrono>
#include <iosfwd>
#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace storyboard::backends {

class Dispatcher {
public:
    /// Advertises exactly the capabilities present in `providers`.
    Dispatcher(ProviderSet providers, std::size_t embedding_dim, nlohmann::json models = nlohmann::json::object());

    const protocol::Manifest& manifest() const noexcept { return manifest_; }

    /// Never throws for provider or payload failures; they become ok=false.
    protocol::Response handle(const protocol::Request& request);
    /// Unparseable lines get an ok=false response with id 0.
    std::string handle_line(const std::string& line);

    /// Sleep before answering each request (test hook for timeouts).
    void set_delay(std::chrono::milliseconds delay) noexcept { delay_ = delay; }

private:
    nlohmann::json dispatch(const std::string& op, const nlohmann::json& payload);

    ProviderSet providers_;
    protocol::Manifest manifest_;
    std::chrono::milliseconds delay_{0};
};

/// Writes the handshake, then answers one line per request until EOF.
void serve_stdio(Dispatcher& dispatcher, std::istream& in, std::ostream& out);

class HttpServer {
public:
    explicit HttpServer(std::shared_ptr<Dispatcher> dispatcher);
    ~HttpServer();

    /// Binds; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void run();
    void stop();

private:
    std::shared_ptr<Dispatcher> dispatcher_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace storyboard::backends
