#include "geofield/server.hpp"

#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "geofield/session.hpp"

namespace geofield {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string mime_type(const std::string& path) {
    std::string ext = fs::path(path).extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".png") return "image/png";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".wasm") return "application/wasm";
    return "application/octet-stream";
}

http::response<http::string_body> make_response(const http::request<http::string_body>& req, http::status st,
                                                std::string body, const std::string& type) {
    http::response<http::string_body> res{st, req.version()};
    res.set(http::field::server, "geofield");
    res.set(http::field::content_type, type);
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
}

http::response<http::string_body> handle_http(const http::request<http::string_body>& req, const ServerOptions& opt) {
    if (req.method() != http::verb::get && req.method() != http::verb::head)
        return make_response(req, http::status::method_not_allowed, "method not allowed\n", "text/plain");
    std::string target(req.target());
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target == "/scenes") {
        json list = json::array();
        for (const auto& id : scene_ids()) {
            Scene s = builtin_scene(id);
            list.push_back({{"id", id}, {"dimension", s.fixed.dimension()}, {"description", s.description}});
        }
        return make_response(req, http::status::ok, json{{"scenes", list}}.dump(), "application/json");
    }
    if (opt.static_root.empty() || target.empty() || target[0] != '/' || target.find("..") != std::string::npos)
        return make_response(req, http::status::not_found, "not found\n", "text/plain");
    if (target.back() == '/') target += "index.html";
    fs::path p = fs::path(opt.static_root) / target.substr(1);
    std::ifstream in(p, std::ios::binary);
    if (!in || fs::is_directory(p)) return make_response(req, http::status::not_found, "not found\n", "text/plain");
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return make_response(req, http::status::ok, std::move(body), mime_type(p.string()));
}

}  // namespace

struct Server::Impl {
    ServerOptions opt;
    net::io_context ioc;
    std::unique_ptr<tcp::acceptor> acceptor;
    std::thread accept_thread;
    std::atomic<bool> stopping{false};
    std::atomic<int> next_session{1};
    std::mutex conn_mu;
    std::set<tcp::socket*> live;
    std::vector<std::thread> workers;
    std::mutex done_mu;
    std::condition_variable done_cv;
    bool done = false;

    void serve_websocket(websocket::stream<tcp::socket>& ws) {
        Session session("s" + std::to_string(next_session++), opt.asset_dir);
        std::mutex write_mu;
        std::vector<std::thread> slice_threads;
        auto send = [&](const json& j) {
            std::lock_guard<std::mutex> lk(write_mu);
            ws.text(true);
            ws.write(net::buffer(j.dump()));
        };
        try {
            for (;;) {
                beast::flat_buffer buf;
                ws.read(buf);
                std::string text = beast::buffers_to_string(buf.data());
                json msg;
                try {
                    msg = json::parse(text);
                } catch (const json::exception&) {
                    send({{"t", "error"}, {"of", ""}, {"message", "malformed JSON"}});
                    continue;
                }
                if (msg.is_object() && msg.value("t", "") == "field_slice") {
                    // off the pose path: the reply arrives whenever it is ready
                    slice_threads.emplace_back([&session, &send, msg] {
                        try {
                            for (const auto& r : session.handle(msg)) send(r);
                        } catch (const std::exception&) {
                        }
                    });
                    continue;
                }
                for (const auto& r : session.handle(msg)) send(r);
            }
        } catch (const std::exception&) {
            // closed by peer or by stop()
        }
        for (auto& t : slice_threads) t.join();
    }

    void serve(tcp::socket sock) {
        {
            std::lock_guard<std::mutex> lk(conn_mu);
            live.insert(&sock);
        }
        try {
            beast::flat_buffer buf;
            for (;;) {
                http::request<http::string_body> req;
                http::read(sock, buf, req);
                if (websocket::is_upgrade(req)) {
                    websocket::stream<tcp::socket> ws(std::move(sock));
                    {
                        std::lock_guard<std::mutex> lk(conn_mu);
                        live.erase(&sock);
                        live.insert(&ws.next_layer());
                    }
                    ws.accept(req);
                    serve_websocket(ws);
                    std::lock_guard<std::mutex> lk(conn_mu);
                    live.erase(&ws.next_layer());
                    return;
                }
                auto res = handle_http(req, opt);
                bool keep = res.keep_alive();
                http::write(sock, res);
                if (!keep) break;
            }
        } catch (const std::exception&) {
        }
        beast::error_code ec;
        sock.shutdown(tcp::socket::shutdown_both, ec);
        std::lock_guard<std::mutex> lk(conn_mu);
        live.erase(&sock);
    }
};

Server::Server(ServerOptions opts) : impl_(std::make_unique<Impl>()) { impl_->opt = std::move(opts); }

Server::~Server() { stop(); }

unsigned short Server::start() {
    Impl& s = *impl_;
    auto addr = net::ip::make_address(s.opt.bind);
    s.acceptor = std::make_unique<tcp::acceptor>(s.ioc, tcp::endpoint(addr, s.opt.port));
    unsigned short port = s.acceptor->local_endpoint().port();
    s.accept_thread = std::thread([&s] {
        while (!s.stopping) {
            beast::error_code ec;
            tcp::socket sock(s.ioc);
            s.acceptor->accept(sock, ec);
            if (ec || s.stopping) break;
            std::lock_guard<std::mutex> lk(s.conn_mu);
            s.workers.emplace_back([&s, sk = std::move(sock)]() mutable { s.serve(std::move(sk)); });
        }
    });
    return port;
}

void Server::stop() {
    Impl& s = *impl_;
    if (s.stopping.exchange(true)) return;
    if (s.acceptor) {
        // wake the blocking accept with a throwaway connection
        beast::error_code ec;
        tcp::endpoint ep = s.acceptor->local_endpoint(ec);
        if (!ec) {
            if (ep.address().is_unspecified()) ep.address(net::ip::make_address("127.0.0.1"));
            tcp::socket poke(s.ioc);
            poke.connect(ep, ec);
        }
    }
    {
        std::lock_guard<std::mutex> lk(s.conn_mu);
        for (auto* sock : s.live) {
            beast::error_code ec;
            sock->shutdown(tcp::socket::shutdown_both, ec);
        }
    }
    if (s.accept_thread.joinable()) s.accept_thread.join();
    if (s.acceptor) {
        beast::error_code ec;
        s.acceptor->close(ec);
    }
    std::vector<std::thread> workers;
    {
        std::lock_guard<std::mutex> lk(s.conn_mu);
        workers.swap(s.workers);
    }
    for (auto& t : workers)
        if (t.joinable()) t.join();
    std::lock_guard<std::mutex> lk(s.done_mu);
    s.done = true;
    s.done_cv.notify_all();
}

void Server::wait() {
    std::unique_lock<std::mutex> lk(impl_->done_mu);
    impl_->done_cv.wait(lk, [&] { return impl_->done; });
}

}  // namespace geofield
