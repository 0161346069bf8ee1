#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

namespace geofield {

struct ServerOptions {
    std::string bind = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    std::string static_root;     // UI bundle directory, empty disables static serving
    std::string asset_dir;       // precomputed scene manifests, see scene_assets()
};

// HTTP + WebSocket on one port. GET /scenes lists built-in scenes, other GETs
// are served from static_root, and an upgrade request opens a session. One
// thread per connection.
class Server {
public:
    explicit Server(ServerOptions opts);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and starts accepting on a background thread; returns the bound port.
    unsigned short start();
    void stop();
    // Blocks until stop() is called from another thread.
    void wait();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace geofield
