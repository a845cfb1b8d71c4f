#pragma once

#include "ethomap/embed/umap.hpp"
#include "ethomap/explore/ensemble.hpp"
#include "ethomap/explore/labels.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace ethomap::service {

struct SessionOptions {
    std::filesystem::path model;                     // embedding directory
    std::filesystem::path labels = "labels.json";
    std::optional<std::filesystem::path> frames;     // camera frames root
    std::optional<std::filesystem::path> segments;   // spotlight segments; found next to the model when omitted
    std::optional<std::filesystem::path> ui;         // built explorer bundle served at /
    std::optional<std::size_t> omega;                // window length; read from the training meta when omitted
    unsigned threads = 1;                            // ensemble workers
};

/// Window length recorded with the model's training windows, if reachable.
std::optional<std::size_t> model_omega(const std::filesystem::path& model_dir);

/// Segments JSONL of a pipeline run laid out as <run>/embedding and <run>/spotlight.
std::optional<std::filesystem::path> default_segments(const std::filesystem::path& model_dir);

/// Loads the artifacts once and answers the HTTP API until stop().
class Server {
public:
    explicit Server(const SessionOptions& options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Port 0 picks a free port. Returns the bound port; throws Error on failure.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();
    void wait_until_ready() const;

private:
    struct State;
    std::unique_ptr<State> state_;
};

/// "host:port" split; ValidationError when malformed.
std::pair<std::string, int> parse_bind(const std::string& text);

} // namespace ethomap::service
