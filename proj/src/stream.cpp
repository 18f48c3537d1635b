#include <sys/socket.h>
#include <sys/time.h>

#include <boost/asio.hpp>
#include <list>
#include <mutex>
#include <thread>

#include "eko/ingest.hpp"

namespace eko::ingest {

namespace asio = boost::asio;
using asio::ip::tcp;

struct StreamServer::Impl {
    asio::io_context io;
    tcp::acceptor acceptor{io};
    std::string payload;  // every line, end marker included unless truncating
    StreamOptions options;
    std::size_t accepted = 0;
    std::mutex mutex;
    std::list<std::thread> sessions;
    std::thread runner;

    void accept_next() {
        acceptor.async_accept([this](const boost::system::error_code& ec, tcp::socket socket) {
            if (ec) return;
            {
                std::lock_guard lock(mutex);
                sessions.emplace_back([this, s = std::move(socket)]() mutable { serve(std::move(s)); });
            }
            if (++accepted < options.max_clients) accept_next();
        });
    }

    void serve(tcp::socket socket) {
        boost::system::error_code ec;
        asio::write(socket, asio::buffer(payload), ec);
        socket.shutdown(tcp::socket::shutdown_send, ec);
        socket.close(ec);
    }

    void join_all() {
        if (runner.joinable()) runner.join();
        std::lock_guard lock(mutex);
        for (auto& t : sessions)
            if (t.joinable()) t.join();
    }
};

StreamServer::StreamServer(std::vector<RawRecord> records, const std::string& host, std::uint16_t port,
                           StreamOptions options)
    : impl_(std::make_unique<Impl>()) {
    if (options.max_clients == 0) throw ValidationError("serve_stream: max_clients must be >= 1");
    impl_->options = options;
    const std::size_t sent = options.close_after ? std::min(*options.close_after, records.size()) : records.size();
    for (std::size_t i = 0; i < sent; ++i) (impl_->payload += format_record(records[i])) += '\n';
    if (!options.close_after) (impl_->payload += kEndMarker) += '\n';
    try {
        const tcp::endpoint ep(asio::ip::make_address(host), port);
        impl_->acceptor.open(ep.protocol());
        impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
        impl_->acceptor.bind(ep);
        impl_->acceptor.listen();
    } catch (const boost::system::system_error& e) {
        throw IoError("serve_stream: cannot listen on " + host + ":" + std::to_string(port) + ": " + e.what());
    }
    impl_->accept_next();
    impl_->runner = std::thread([impl = impl_.get()] { impl->io.run(); });
}

StreamServer::~StreamServer() { stop(); }

std::uint16_t StreamServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void StreamServer::wait() { impl_->join_all(); }

void StreamServer::stop() {
    if (!impl_) return;
    asio::post(impl_->io, [impl = impl_.get()] {
        boost::system::error_code ec;
        impl->acceptor.close(ec);
    });
    impl_->join_all();
}

StreamResult consume_stream(const std::string& host, std::uint16_t port, int timeout_ms) {
    asio::io_context io;
    tcp::socket socket(io);
    try {
        tcp::resolver resolver(io);
        asio::connect(socket, resolver.resolve(host, std::to_string(port)));
    } catch (const boost::system::system_error& e) {
        throw IoError("consume_stream: cannot connect to " + host + ":" + std::to_string(port) + ": " + e.what());
    }
    if (timeout_ms > 0) {
        timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
        ::setsockopt(socket.native_handle(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    }
    StreamResult out;
    out.truncated = true;
    asio::streambuf buf;
    boost::system::error_code ec;
    std::string line;
    while (true) {
        const std::size_t n = asio::read_until(socket, buf, '\n', ec);
        if (n == 0) break;  // connection closed or failed before a full line
        line.resize(n - 1);
        buf.sgetn(line.data(), static_cast<std::streamsize>(n - 1));
        buf.consume(1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == kEndMarker) {
            out.truncated = false;
            break;
        }
        if (line == kCsvHeader) continue;
        if (auto r = parse_record(line)) out.records.push_back(*r);
        else ++out.malformed;
    }
    return out;
}

}  // namespace eko::ingest
