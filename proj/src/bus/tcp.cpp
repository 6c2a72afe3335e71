#include "woc/bus/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include <fmt/format.h>

namespace woc::bus {

namespace {

double steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

// Splits received bytes into lines; returns false on EOF or error.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  template <typename F>
  bool pump(F&& on_line) {
    char chunk[8192];
    ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) return true;
    if (n <= 0) return false;
    buffer_.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (std::size_t nl; (nl = buffer_.find('\n', start)) != std::string::npos; start = nl + 1) {
      std::string line = buffer_.substr(start, nl - start);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) on_line(std::move(line));
    }
    buffer_.erase(0, start);
    return true;
  }

 private:
  int fd_;
  std::string buffer_;
};

}  // namespace

struct TcpBrokerServer::Conn {
  ConnId id = 0;
  int fd = -1;
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::string> outgoing;
  bool reader_done = false;
  bool drain_and_close = false;
  std::thread reader;
  std::thread writer;
};

TcpBrokerServer::TcpBrokerServer(Manifest manifest, TcpServerOptions options)
    : manifest_(std::move(manifest)), options_(std::move(options)) {
  broker_ = std::make_unique<Broker>(
      manifest_, [this](ConnId conn, const std::string& line) { send_line(conn, line); }, [this] { return event_clock_; });
}

TcpBrokerServer::~TcpBrokerServer() {
  if (started_ && !joined_) {
    abort("server destroyed");
    wait();
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

double TcpBrokerServer::now() const { return steady_seconds() - epoch_; }

const EventLog& TcpBrokerServer::log() const { return broker_->log(); }

void TcpBrokerServer::start() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(options_.port);
  if (int rc = ::getaddrinfo(options_.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw TransportError(fmt::format("cannot resolve {}: {}", options_.host, ::gai_strerror(rc)));
  }
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    throw TransportError(fmt::format("socket: {}", std::strerror(errno)));
  }
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(listen_fd_, 64) != 0) {
    const int err = errno;
    ::freeaddrinfo(res);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw TransportError(fmt::format("cannot bind {}:{}: {}", options_.host, options_.port, std::strerror(err)));
  }
  ::freeaddrinfo(res);
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = ntohs(addr.sin_port);

  epoch_ = steady_seconds();
  started_ = true;
  post({TranscriptEvent::Kind::Begin, 0, 0.0, {}});
  loop_thread_ = std::thread([this] { event_loop(); });
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void TcpBrokerServer::post(TranscriptEvent ev) {
  {
    std::lock_guard lk(events_mutex_);
    events_.push_back(std::move(ev));
  }
  events_cv_.notify_one();
}

void TcpBrokerServer::abort(const std::string& reason) { post({TranscriptEvent::Kind::Abort, 0, 0.0, reason}); }

void TcpBrokerServer::accept_loop() {
  while (!stopping_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto conn = std::make_shared<Conn>();
    conn->fd = fd;
    {
      std::lock_guard lk(conns_mutex_);
      conn->id = ++next_conn_;
      conns_[conn->id] = conn;
      // Open is posted before the reader can post any line of this connection.
      post({TranscriptEvent::Kind::Open, conn->id, 0.0, {}});
    }
    conn->reader = std::thread([this, conn] { reader_loop(conn); });
    conn->writer = std::thread([this, conn] { writer_loop(conn); });
  }
}

void TcpBrokerServer::reader_loop(std::shared_ptr<Conn> conn) {
  LineReader reader(conn->fd);
  while (reader.pump([&](std::string line) { post({TranscriptEvent::Kind::Line, conn->id, 0.0, std::move(line)}); })) {
  }
  post({TranscriptEvent::Kind::Close, conn->id, 0.0, {}});
  {
    std::lock_guard lk(conn->mutex);
    conn->reader_done = true;
  }
  conn->cv.notify_all();
}

void TcpBrokerServer::writer_loop(std::shared_ptr<Conn> conn) {
  std::unique_lock lk(conn->mutex);
  for (;;) {
    conn->cv.wait(lk, [&] { return !conn->outgoing.empty() || conn->reader_done || conn->drain_and_close; });
    while (!conn->outgoing.empty()) {
      std::string line = std::move(conn->outgoing.front());
      conn->outgoing.pop_front();
      lk.unlock();
      line.push_back('\n');
      const bool ok = write_all(conn->fd, line);
      lk.lock();
      if (!ok) {
        conn->outgoing.clear();
        ::shutdown(conn->fd, SHUT_RDWR);
        return;
      }
    }
    if (conn->reader_done) return;
    if (conn->drain_and_close) {
      ::shutdown(conn->fd, SHUT_WR);
      return;
    }
  }
}

void TcpBrokerServer::send_line(ConnId id, const std::string& line) {
  std::shared_ptr<Conn> conn;
  {
    std::lock_guard lk(conns_mutex_);
    auto it = conns_.find(id);
    if (it == conns_.end()) return;
    conn = it->second;
  }
  {
    std::lock_guard lk(conn->mutex);
    if (conn->reader_done || conn->drain_and_close) return;
    conn->outgoing.push_back(line);
  }
  conn->cv.notify_all();
}

void TcpBrokerServer::event_loop() {
  std::size_t open = 0;
  std::optional<double> grace_deadline;
  bool forced = false;
  for (;;) {
    std::optional<TranscriptEvent> ev;
    {
      std::unique_lock lk(events_mutex_);
      if (events_.empty()) {
        if (broker_->done() && open == 0) break;
        double wake = now() + 0.1;
        if (auto d = broker_->next_deadline()) wake = std::min(wake, *d);
        if (grace_deadline) wake = std::min(wake, *grace_deadline);
        const double wait = std::max(0.0, wake - now());
        events_cv_.wait_for(lk, std::chrono::duration<double>(wait), [&] { return !events_.empty(); });
      }
      if (!events_.empty()) {
        ev = std::move(events_.front());
        events_.pop_front();
      }
    }
    if (ev) {
      if (ev->kind == TranscriptEvent::Kind::Open) ++open;
      if (ev->kind == TranscriptEvent::Kind::Close && open > 0) --open;
      ev->clock = now();
      event_clock_ = ev->clock;
      apply_event(*broker_, *ev);
      transcript_.push_back(std::move(*ev));
    } else if (auto d = broker_->next_deadline(); d && now() >= *d) {
      TranscriptEvent tick{TranscriptEvent::Kind::Tick, 0, now(), {}};
      event_clock_ = tick.clock;
      apply_event(*broker_, tick);
      transcript_.push_back(std::move(tick));
    }

    if (broker_->done() && !grace_deadline) {
      grace_deadline = now() + options_.close_grace_seconds;
      stopping_ = true;
      if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
      std::lock_guard lk(conns_mutex_);
      for (auto& [id, conn] : conns_) {
        {
          std::lock_guard clk(conn->mutex);
          conn->drain_and_close = true;
        }
        conn->cv.notify_all();
      }
    }
    if (grace_deadline && !forced && now() >= *grace_deadline) {
      forced = true;
      std::lock_guard lk(conns_mutex_);
      for (auto& [id, conn] : conns_) ::shutdown(conn->fd, SHUT_RDWR);
    }
  }
  outcome_.finished = broker_->finished();
  outcome_.aborted = broker_->aborted();
  outcome_.reason = broker_->abort_reason();
  outcome_.events = transcript_.size();
}

HubOutcome TcpBrokerServer::wait() {
  if (!started_ || joined_) return outcome_;
  loop_thread_.join();
  stopping_ = true;
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  accept_thread_.join();
  std::map<ConnId, std::shared_ptr<Conn>> conns;
  {
    std::lock_guard lk(conns_mutex_);
    conns.swap(conns_);
  }
  for (auto& [id, conn] : conns) {
    ::shutdown(conn->fd, SHUT_RDWR);
    if (conn->reader.joinable()) conn->reader.join();
    {
      std::lock_guard lk(conn->mutex);
      conn->reader_done = true;
    }
    conn->cv.notify_all();
    if (conn->writer.joinable()) conn->writer.join();
    ::close(conn->fd);
  }
  joined_ = true;
  return outcome_;
}

TcpClientResult run_tcp_client(Client& client, const std::string& host, std::uint16_t port, double connect_timeout_s) {
  TcpClientResult result;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_text = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), port_text.c_str(), &hints, &res); rc != 0) {
    throw TransportError(fmt::format("cannot resolve {}: {}", host, ::gai_strerror(rc)));
  }
  int fd = -1;
  const double give_up = steady_seconds() + connect_timeout_s;
  for (;;) {
    fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd >= 0 && ::connect(fd, res->ai_addr, res->ai_addrlen) == 0) break;
    const int err = errno;
    if (fd >= 0) ::close(fd);
    fd = -1;
    if (steady_seconds() >= give_up) {
      ::freeaddrinfo(res);
      throw TransportError(fmt::format("cannot connect to {}:{}: {}", host, port, std::strerror(err)));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  ::freeaddrinfo(res);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

  const double epoch = steady_seconds();
  ClientSession session(client, [epoch] { return steady_seconds() - epoch; });
  auto send_lines = [&](const std::vector<std::string>& lines) {
    std::string data;
    for (const auto& l : lines) {
      data += l;
      data += '\n';
    }
    return data.empty() || write_all(fd, data);
  };
  bool ok = send_lines(session.start());
  LineReader reader(fd);
  while (ok && !session.closed()) {
    bool failed = false;
    ok = reader.pump([&](std::string line) {
      if (failed || session.closed()) return;
      try {
        if (!send_lines(session.deliver(line))) failed = true;
      } catch (const std::exception& e) {
        result.errors.push_back(fmt::format("client '{}' failed: {}", client.name(), e.what()));
        failed = true;
      }
    }) && !failed;
  }
  result.registered = session.registered();
  result.shutdown_received = session.closed();
  result.errors.insert(result.errors.begin(), session.errors().begin(), session.errors().end());
  if (!session.closed()) client.on_shutdown();
  ::shutdown(fd, SHUT_RDWR);
  ::close(fd);
  return result;
}

}  // namespace woc::bus
