#include "vhmmt/gateway/server.hpp"

#include <chrono>
#include <condition_variable>
#include <csignal>
#include <iostream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::gateway {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::optional<std::string> TelemetryBridge::next() {
    for (auto* q : {&live, &preview, &state, &stats}) {
        if (auto m = q->pop()) {
            return m;
        }
    }
    return std::nullopt;
}

void TelemetryBridge::clear() {
    for (auto* q : {&live, &preview, &state, &stats}) {
        while (q->pop()) {
        }
    }
}

namespace {

constexpr auto kPollPeriod = std::chrono::milliseconds(5);

const char* mime_type(const std::filesystem::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json" || ext == ".map") return "application/json";
    if (ext == ".png") return "image/png";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".ico") return "image/x-icon";
    if (ext == ".wasm") return "application/wasm";
    return "application/octet-stream";
}

const char* kStubPage =
    "<!doctype html><title>vhmmt gateway</title>"
    "<p>Gateway running. Console assets are not installed; connect a client to <code>/ws</code>.</p>";

} // namespace

class WsSession;

struct Server::Impl {
    Impl(harness::Scenario s, ServerOptions o) : scenario(std::move(s)), opt(std::move(o)), bridge(opt.frame_depth) {}

    harness::Scenario scenario;
    ServerOptions opt;
    asio::io_context ioc;
    tcp::acceptor acceptor{ioc};
    harness::InputQueue input;
    TelemetryBridge bridge;
    std::unique_ptr<harness::Simulation> sim;
    std::atomic<bool> stop_flag{false};
    std::thread io_thread, sim_thread;
    harness::RealtimeStats timing;
    std::weak_ptr<WsSession> active;  // I/O thread only

    std::mutex done_mu;
    std::condition_variable done_cv;
    bool finished = false;

    void log(const std::string& what) {
        if (opt.log) {
            opt.log(what);
        } else {
            std::cerr << "gateway: " << what << std::endl;
        }
    }
    bool operator_connected() const;
    void do_accept();
};

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(Server::Impl& impl, tcp::socket socket)
        : impl_(impl), ws_(std::move(socket)), timer_(ws_.get_executor()) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.read_message_max(impl_.opt.max_message_bytes);
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

    bool open() const { return !closed_; }

private:
    void on_accept(beast::error_code ec) {
        if (ec) {
            impl_.log("websocket handshake failed: " + ec.message());
            return;
        }
        impl_.active = shared_from_this();
        impl_.bridge.clear();
        impl_.log("operator connected");
        const harness::Simulation& sim = *impl_.sim;
        HelloInfo h;
        h.home_hand = sim.home_hand();
        h.hand_eye = sim.calibration().hand_eye;
        h.probe = sim.calibration().probe;
        h.image_px = impl_.scenario.image_px;
        h.fov_m = impl_.scenario.fov_m;
        h.delay_ms = impl_.scenario.delay_ms;
        h.mode = impl_.scenario.mode;
        h.control_hz = impl_.scenario.control_hz;
        out_.push_back(hello_message(h));
        do_write();
        do_read();
        poll();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t n) {
        if (ec) {
            if (ec == websocket::error::message_too_big) {
                impl_.log(ProtocolViolation("message over the size limit").what());
            }
            close();
            return;
        }
        if (!ws_.got_text()) {
            impl_.log(ProtocolViolation("binary message").what());
            close();
            ws_.async_close(websocket::close_code::policy_error,
                            [self = shared_from_this()](beast::error_code) {});
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(n);
        const ClientParse p = parse_client(text);
        if (p.input) {
            impl_.input.push(*p.input);
        } else {
            impl_.log("ignored client message: " + p.warning);
            out_.push_back(warning_message(p.warning));
            do_write();
        }
        do_read();
    }

    void poll() {
        timer_.expires_after(kPollPeriod);
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec || self->closed_) {
                return;
            }
            // Only take from the bridge once the socket has caught up, so a
            // stalled client leaves the drop-oldest buffers to absorb it.
            if (!self->writing_ && self->out_.empty()) {
                while (auto m = self->impl_.bridge.next()) {
                    self->out_.push_back(std::move(*m));
                }
                self->do_write();
            }
            self->poll();
        });
    }

    void do_write() {
        if (writing_ || out_.empty() || closed_) {
            return;
        }
        writing_ = true;
        ws_.text(true);
        ws_.async_write(asio::buffer(out_.front()),
                        beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        writing_ = false;
        if (ec) {
            close();
            return;
        }
        out_.pop_front();
        do_write();
    }

    void close() {
        if (closed_) {
            return;
        }
        closed_ = true;
        timer_.cancel();
        // Losing the operator stops teleoperation.
        impl_.input.push(harness::input::Stop{});
        impl_.log("operator disconnected");
    }

    Server::Impl& impl_;
    websocket::stream<beast::tcp_stream> ws_;
    asio::steady_timer timer_;
    beast::flat_buffer buffer_;
    std::deque<std::string> out_;
    bool writing_ = false;
    bool closed_ = false;
};

bool Server::Impl::operator_connected() const {
    auto s = active.lock();
    return s && s->open();
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(Server::Impl& impl, tcp::socket socket) : impl_(impl), stream_(std::move(socket)) {}

    void run() {
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

private:
    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            return;
        }
        if (websocket::is_upgrade(req_)) {
            if (req_.target() != "/ws") {
                return reply(http::status::not_found, "text/plain", "no websocket here; use /ws\n");
            }
            if (impl_.operator_connected()) {
                impl_.log("refused a second operator connection");
                return reply(http::status::conflict, "text/plain", "an operator is already connected\n");
            }
            stream_.expires_never();
            std::make_shared<WsSession>(impl_, stream_.release_socket())->run(std::move(req_));
            return;
        }
        serve_file();
    }

    void serve_file() {
        if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
            return reply(http::status::method_not_allowed, "text/plain", "GET only\n");
        }
        std::string target(req_.target());
        target = target.substr(0, target.find('?'));
        if (target.empty() || target[0] != '/' || target.find("..") != std::string::npos) {
            return reply(http::status::bad_request, "text/plain", "bad path\n");
        }
        if (target.back() == '/') {
            target += "index.html";
        }
        if (impl_.opt.web_root.empty()) {
            if (target == "/index.html") {
                return reply(http::status::ok, "text/html; charset=utf-8", kStubPage);
            }
            return reply(http::status::not_found, "text/plain", "not found\n");
        }
        const std::filesystem::path path = impl_.opt.web_root / target.substr(1);
        http::file_body::value_type body;
        beast::error_code ec;
        body.open(path.string().c_str(), beast::file_mode::scan, ec);
        if (ec) {
            return reply(http::status::not_found, "text/plain", "not found\n");
        }
        auto res = std::make_shared<http::response<http::file_body>>(
            std::piecewise_construct, std::make_tuple(std::move(body)), std::make_tuple(http::status::ok, req_.version()));
        res->set(http::field::content_type, mime_type(path));
        res->set(http::field::cache_control, "no-cache");
        res->keep_alive(false);
        res->prepare_payload();
        if (req_.method() == http::verb::head) {
            res->body().close();
        }
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
            beast::error_code ignore;
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignore);
        });
    }

    void reply(http::status status, const char* type, std::string body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::content_type, type);
        res->body() = std::move(body);
        res->keep_alive(false);
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
            beast::error_code ignore;
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignore);
        });
    }

    Server::Impl& impl_;
    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

void Server::Impl::do_accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            if (ec != asio::error::operation_aborted) {
                log("accept failed: " + ec.message());
            }
            return;
        }
        std::make_shared<HttpSession>(*this, std::move(socket))->run();
        do_accept();
    });
}

Server::Server(harness::Scenario scenario, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(options))) {
    impl_->scenario.interactive = true;
    impl_->scenario.validate();
}

Server::~Server() {
    stop();
}

void Server::start() {
    Impl& m = *impl_;
    harness::SimulationOptions so;
    so.keep_ticks = false;
    so.input = &m.input;
    so.telemetry = &m.bridge;
    m.sim = std::make_unique<harness::Simulation>(m.scenario, so);

    beast::error_code ec;
    const auto address = asio::ip::make_address(m.opt.host, ec);
    if (ec) {
        throw BindError("bad host '" + m.opt.host + "': " + ec.message());
    }
    const tcp::endpoint ep(address, m.opt.port);
    m.acceptor.open(ep.protocol(), ec);
    if (!ec) {
        m.acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    }
    if (!ec) {
        m.acceptor.bind(ep, ec);
    }
    if (!ec) {
        m.acceptor.listen(asio::socket_base::max_listen_connections, ec);
    }
    if (ec) {
        throw BindError(m.opt.host + ":" + std::to_string(m.opt.port) + ": " + ec.message());
    }
    m.do_accept();
    m.io_thread = std::thread([&m] { m.ioc.run(); });
    m.sim_thread = std::thread([&m] {
        try {
            m.timing = m.sim->run_realtime(m.stop_flag);
        } catch (const std::exception& e) {
            m.log(std::string("simulation stopped: ") + e.what());
        }
        std::lock_guard lock(m.done_mu);
        m.finished = true;
        m.done_cv.notify_all();
    });
}

void Server::stop() {
    if (!impl_) {
        return;
    }
    Impl& m = *impl_;
    m.stop_flag = true;
    if (m.sim_thread.joinable()) {
        m.sim_thread.join();
    }
    m.ioc.stop();
    if (m.io_thread.joinable()) {
        m.io_thread.join();
    }
}

void Server::wait() {
    std::unique_lock lock(impl_->done_mu);
    impl_->done_cv.wait(lock, [this] { return impl_->finished; });
}

std::uint16_t Server::port() const {
    return impl_->acceptor.local_endpoint().port();
}

const harness::Simulation& Server::simulation() const {
    return *impl_->sim;
}

const TelemetryBridge& Server::bridge() const {
    return impl_->bridge;
}

harness::RealtimeStats Server::realtime_stats() const {
    std::lock_guard lock(impl_->done_mu);
    return impl_->timing;
}

namespace {
std::atomic<bool> g_interrupted{false};
extern "C" void on_signal(int) {
    g_interrupted = true;
}
} // namespace

int serve(const harness::Scenario& scenario, const ServerOptions& options) {
    Server server(scenario, options);
    server.start();
    std::printf("listening on http://%s:%u (websocket at /ws)\n", options.host.c_str(), server.port());
    std::fflush(stdout);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_interrupted && !server.simulation().done()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
    return 0;
}

} // namespace vhmmt::gateway
