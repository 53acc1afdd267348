// Serves the deterministic mock capabilities over the provider protocol,
// on stdio by default or over HTTP with --http.

#include "storyboard/backends/mocks.hpp"
#include "storyboard/backends/server.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <memory>

using namespace storyboard::backends;

int main(int argc, char** argv) {
    CLI::App app{"Mock provider"};
    int port = -1;
    std::string host = "127.0.0.1";
    int delay_ms = 0;
    app.add_option("--http", port, "Serve HTTP on this port (0 picks one and prints it)");
    app.add_option("--host", host)->capture_default_str();
    app.add_option("--delay-ms", delay_ms, "Sleep before every answer");
    CLI11_PARSE(app, argc, argv);

    const auto manifest = mock_manifest();
    auto dispatcher = std::make_shared<Dispatcher>(mock_provider_set(), manifest.embedding_dim, manifest.models);
    dispatcher->set_delay(std::chrono::milliseconds(delay_ms));
    try {
        if (port < 0) {
            std::ios::sync_with_stdio(false);
            serve_stdio(*dispatcher, std::cin, std::cout);
            return 0;
        }
        HttpServer server(dispatcher);
        const int bound = server.bind(host, port);
        std::cout << "port " << bound << std::endl;
        server.run();
    } catch (const std::exception& e) {
        std::cerr << "mock_provider: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
