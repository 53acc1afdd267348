#include "storyboard/backends/transport.hpp"

#include "storyboard/backends/server.hpp"
#include "storyboard/error.hpp"

#include "httplib.h"

#include <map>

namespace storyboard::backends {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

std::string strip_newline(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

std::string describe(const protocol::Response& r) { return "provider rejected request: " + r.error; }

}  // namespace

json Connection::call(const std::string& op, json payload, Seconds timeout) {
    auto responses = call_batch({{op, std::move(payload)}}, timeout);
    protocol::Response& r = responses.front();
    if (!r.ok) throw ProviderError(op + ": " + r.error);
    return std::move(r.result);
}

std::vector<protocol::Response> Connection::call_batch(const std::vector<std::pair<std::string, json>>& calls,
                                                       Seconds timeout) {
    if (calls.empty()) return {};
    std::lock_guard lock(mutex_);
    std::vector<protocol::Request> requests;
    for (const auto& [op, payload] : calls) requests.push_back({next_id_++, op, payload});
    std::map<std::uint64_t, protocol::Response> by_id;
    for (auto& r : exchange(requests, timeout)) {
        if (!by_id.emplace(r.id, std::move(r)).second)
            throw ProtocolError("duplicate response id " + std::to_string(r.id));
    }
    std::vector<protocol::Response> out;
    for (const auto& req : requests) {
        auto it = by_id.find(req.id);
        if (it == by_id.end()) throw ProtocolError("no response for request " + std::to_string(req.id));
        out.push_back(std::move(it->second));
    }
    return out;
}

StdioConnection::StdioConnection(const std::vector<std::string>& argv, Seconds startup_timeout) : child_(argv) {
    manifest_ = protocol::decode_manifest(child_.read_line(startup_timeout));
}

std::vector<protocol::Response> StdioConnection::exchange(const std::vector<protocol::Request>& requests,
                                                          Seconds timeout) {
    std::set<std::uint64_t> pending;
    for (const auto& r : requests) {
        child_.write_line(protocol::encode(r));
        pending.insert(r.id);
    }
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(timeout);
    std::vector<protocol::Response> out;
    try {
        while (!pending.empty()) {
            const Seconds remaining = deadline - Clock::now();
            if (remaining.count() <= 0) throw TimeoutError("provider did not answer in time");
            protocol::Response r = protocol::decode_response(child_.read_line(remaining));
            if (abandoned_.erase(r.id)) continue;
            if (r.id == 0) throw ProtocolError(describe(r));
            if (!pending.erase(r.id)) throw ProtocolError("unexpected response id " + std::to_string(r.id));
            out.push_back(std::move(r));
        }
    } catch (...) {
        abandoned_.insert(pending.begin(), pending.end());
        throw;
    }
    return out;
}

HttpConnection::HttpConnection(const std::string& url, Seconds connect_timeout)
    : client_(std::make_unique<httplib::Client>(url)) {
    if (!client_->is_valid()) throw InvalidArgument("invalid provider url: " + url);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(connect_timeout).count();
    client_->set_connection_timeout(usec / 1000000, usec % 1000000);
    client_->set_read_timeout(usec / 1000000, usec % 1000000);
    auto res = client_->Get("/manifest");
    if (!res) throw TransportError("cannot reach provider at " + url + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw TransportError("GET /manifest returned HTTP " + std::to_string(res->status));
    manifest_ = protocol::decode_manifest(strip_newline(res->body));
}

HttpConnection::~HttpConnection() = default;

std::vector<protocol::Response> HttpConnection::exchange(const std::vector<protocol::Request>& requests,
                                                         Seconds timeout) {
    std::vector<protocol::Response> out;
    for (const auto& req : requests) {
        const auto usec = std::max<std::int64_t>(
            1, std::chrono::duration_cast<std::chrono::microseconds>(timeout).count());
        client_->set_read_timeout(usec / 1000000, usec % 1000000);
        client_->set_write_timeout(usec / 1000000, usec % 1000000);
        const auto start = Clock::now();
        auto res = client_->Post("/rpc", protocol::encode(req), "application/json");
        if (!res) {
            if (Seconds(Clock::now() - start) >= timeout) throw TimeoutError("provider did not answer in time");
            throw TransportError("POST /rpc failed: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) throw TransportError("POST /rpc returned HTTP " + std::to_string(res->status));
        protocol::Response r = protocol::decode_response(strip_newline(res->body));
        if (r.id == 0) throw ProtocolError(describe(r));
        if (r.id != req.id) throw ProtocolError("response id " + std::to_string(r.id) + " does not match request");
        out.push_back(std::move(r));
    }
    return out;
}

InProcessConnection::InProcessConnection(std::shared_ptr<Dispatcher> dispatcher)
    : dispatcher_(std::move(dispatcher)) {
    if (!dispatcher_) throw InvalidArgument("null dispatcher");
}

const protocol::Manifest& InProcessConnection::manifest() const { return dispatcher_->manifest(); }

std::vector<protocol::Response> InProcessConnection::exchange(const std::vector<protocol::Request>& requests,
                                                              Seconds) {
    std::vector<protocol::Response> out;
    for (const auto& req : requests) {
        protocol::Response r = protocol::decode_response(dispatcher_->handle_line(protocol::encode(req)));
        if (r.id == 0) throw ProtocolError(describe(r));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace storyboard::backends
