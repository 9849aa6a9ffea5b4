#include "vhmmt/netsim/transport.hpp"

#include <cerrno>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <sys/socket.h>
#include <unistd.h>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::netsim {

namespace {

struct Pipe {
    std::mutex mu;
    Bytes data;
};

class LoopbackTransport final : public Transport {
public:
    LoopbackTransport(std::shared_ptr<Pipe> out, std::shared_ptr<Pipe> in) : out_(std::move(out)), in_(std::move(in)) {}

    void write(std::span<const std::uint8_t> bytes) override {
        std::lock_guard lock(out_->mu);
        out_->data.insert(out_->data.end(), bytes.begin(), bytes.end());
    }

    void read(Bytes& out) override {
        std::lock_guard lock(in_->mu);
        out.insert(out.end(), in_->data.begin(), in_->data.end());
        in_->data.clear();
    }

private:
    std::shared_ptr<Pipe> out_, in_;
};

class SocketTransport final : public Transport {
public:
    explicit SocketTransport(int fd) : fd_(fd) {}
    ~SocketTransport() override { ::close(fd_); }
    SocketTransport(const SocketTransport&) = delete;
    SocketTransport& operator=(const SocketTransport&) = delete;

    void write(std::span<const std::uint8_t> bytes) override {
        backlog_.insert(backlog_.end(), bytes.begin(), bytes.end());
        flush();
    }

    void read(Bytes& out) override {
        flush();
        std::uint8_t buf[65536];
        for (;;) {
            ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
            if (n > 0) {
                out.insert(out.end(), buf, buf + n);
                continue;
            }
            if (n < 0 && errno == EINTR) {
                continue;
            }
            return;  // EAGAIN, or the peer closed
        }
    }

private:
    // Bytes the kernel buffer could not take yet wait here for the next call.
    void flush() {
        std::size_t sent = 0;
        while (sent < backlog_.size()) {
            ssize_t n = ::send(fd_, backlog_.data() + sent, backlog_.size() - sent, MSG_NOSIGNAL);
            if (n > 0) {
                sent += static_cast<std::size_t>(n);
            } else if (n < 0 && errno == EINTR) {
                continue;
            } else {
                break;
            }
        }
        backlog_.erase(backlog_.begin(), backlog_.begin() + static_cast<std::ptrdiff_t>(sent));
    }

    int fd_;
    Bytes backlog_;
};

} // namespace

TransportPair make_loopback_pair() {
    auto ab = std::make_shared<Pipe>();
    auto ba = std::make_shared<Pipe>();
    return {std::make_unique<LoopbackTransport>(ab, ba), std::make_unique<LoopbackTransport>(ba, ab)};
}

TransportPair make_socketpair_pair() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
        throw ConfigError(std::string("socketpair failed: ") + std::strerror(errno));
    }
    for (int fd : fds) {
        ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
        int size = 1 << 21;
        ::setsockopt(fd, SOL_SOCKET, SO_SNDBUF, &size, sizeof size);
        ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &size, sizeof size);
    }
    return {std::make_unique<SocketTransport>(fds[0]), std::make_unique<SocketTransport>(fds[1])};
}

TransportPair make_transport_pair(const std::string& kind) {
    if (kind == "loopback") {
        return make_loopback_pair();
    }
    if (kind == "socketpair") {
        return make_socketpair_pair();
    }
    throw ConfigError("unknown transport '" + kind + "' (expected loopback or socketpair)");
}

} // namespace vhmmt::netsim
