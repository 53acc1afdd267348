#pragma once

// Client side of the provider protocol.

#include "storyboard/backends/protocol.hpp"
#include "storyboard/subprocess.hpp"

#include <chrono>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace httplib {
class Client;
}

namespace storyboard::backends {

class Dispatcher;

using Seconds = std::chrono::duration<double>;

/// A provider connection. Calls are serialized by an internal mutex; ids are
/// assigned from 1 upward per connection.
class Connection {
public:
    virtual ~Connection() = default;
    virtual const protocol::Manifest& manifest() const = 0;

    /// Returns the result object. ok=false surfaces as ProviderError.
    nlohmann::json call(const std::string& op, nlohmann::json payload, Seconds timeout);
    /// Sends every request before reading any response; responses may arrive
    /// in any order and are returned in request order.
    std::vector<protocol::Response> call_batch(const std::vector<std::pair<std::string, nlohmann::json>>& calls,
                                               Seconds timeout);

protected:
    virtual std::vector<protocol::Response> exchange(const std::vector<protocol::Request>& requests,
                                                     Seconds timeout) = 0;

private:
    std::mutex mutex_;
    std::uint64_t next_id_ = 1;
};

/// Child process speaking the protocol on stdin/stdout; the first line it
/// writes must be the manifest handshake.
class StdioConnection final : public Connection {
public:
    explicit StdioConnection(const std::vector<std::string>& argv, Seconds startup_timeout = Seconds(60));
    const protocol::Manifest& manifest() const override { return manifest_; }

protected:
    std::vector<protocol::Response> exchange(const std::vector<protocol::Request>& requests, Seconds timeout) override;

private:
    ChildProcess child_;
    protocol::Manifest manifest_;
    // Ids whose caller gave up; their late responses are discarded.
    std::set<std::uint64_t> abandoned_;
};

/// GET <url>/manifest once, then one POST <url>/rpc per request.
class HttpConnection final : public Connection {
public:
    explicit HttpConnection(const std::string& url, Seconds connect_timeout = Seconds(10));
    ~HttpConnection() override;
    const protocol::Manifest& manifest() const override { return manifest_; }

protected:
    std::vector<protocol::Response> exchange(const std::vector<protocol::Request>& requests, Seconds timeout) override;

private:
    std::unique_ptr<httplib::Client> client_;
    protocol::Manifest manifest_;
};

/// Routes encoded lines straight into a Dispatcher; the wire format is still exercised.
class InProcessConnection final : public Connection {
public:
    explicit InProcessConnection(std::shared_ptr<Dispatcher> dispatcher);
    const protocol::Manifest& manifest() const override;

protected:
    std::vector<protocol::Response> exchange(const std::vector<protocol::Request>& requests, Seconds timeout) override;

private:
    std::shared_ptr<Dispatcher> dispatcher_;
};

}  // namespace storyboard::backends
