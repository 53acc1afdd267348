#pragma once

// providers.json: capability (protocol op name, or "default") to
//   {"transport": "stdio"|"http"|"mock", "command": [...]|"...", "url": "...", "dim": N, "timeout": seconds}

#include "storyboard/backends/capabilities.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace storyboard::backends {

struct ProviderEntry {
    std::string transport = "mock";
    std::vector<std::string> command;
    std::string url;
    std::optional<std::size_t> dim;
    double timeout = 60.0;

    void validate() const;
};

class ProviderRegistry {
public:
    ProviderRegistry() = default;
    explicit ProviderRegistry(std::map<std::string, ProviderEntry> entries);

    static ProviderRegistry from_json(const nlohmann::json& j);
    static ProviderRegistry load(const std::filesystem::path& file);
    /// Every capability served by the in-process mocks.
    static ProviderRegistry all_mock();

    /// Explicit entry, else "default", else nullopt.
    std::optional<ProviderEntry> entry_for(const std::string& op) const;
    const std::map<std::string, ProviderEntry>& entries() const noexcept { return entries_; }

    /// Starts or connects every configured provider. Entries with an identical
    /// command (stdio) or url (http) share one connection. Throws ProviderError
    /// when a provider does not advertise a capability it is mapped to, and
    /// ProtocolError when a declared dim disagrees with its manifest.
    ProviderSet connect() const;

private:
    std::map<std::string, ProviderEntry> entries_;
};

}  // namespace storyboard::backends
