#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "woc/bus/broker.hpp"
#include "woc/bus/client.hpp"
#include "woc/bus/inprocess.hpp"

namespace woc::bus {

constexpr std::uint16_t kDefaultPort = 7788;

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TcpServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = kDefaultPort;  // 0 picks an ephemeral port
  double close_grace_seconds = 5.0;
};

// Broker over newline-delimited JSON on TCP. Socket threads only move
// bytes; every broker call happens on the single event-loop thread.
class TcpBrokerServer {
 public:
  TcpBrokerServer(Manifest manifest, TcpServerOptions options = {});
  ~TcpBrokerServer();
  TcpBrokerServer(const TcpBrokerServer&) = delete;
  TcpBrokerServer& operator=(const TcpBrokerServer&) = delete;

  // Binds and starts serving; throws TransportError on bind failure.
  void start();
  std::uint16_t port() const noexcept { return bound_port_; }
  // Blocks until the schedule finished or aborted and connections drained.
  HubOutcome wait();
  void abort(const std::string& reason);

  // Valid after wait().
  const Transcript& transcript() const noexcept { return transcript_; }
  const EventLog& log() const;

 private:
  struct Conn;

  void accept_loop();
  void reader_loop(std::shared_ptr<Conn> conn);
  void writer_loop(std::shared_ptr<Conn> conn);
  void event_loop();
  void post(TranscriptEvent ev);
  void send_line(ConnId conn, const std::string& line);
  double now() const;

  Manifest manifest_;
  TcpServerOptions options_;
  std::unique_ptr<Broker> broker_;
  int listen_fd_ = -1;
  std::uint16_t bound_port_ = 0;
  double epoch_ = 0.0;
  // clock seen by the broker: the stamp of the event being applied
  double event_clock_ = 0.0;

  std::mutex conns_mutex_;
  std::map<ConnId, std::shared_ptr<Conn>> conns_;
  ConnId next_conn_ = 0;

  std::mutex events_mutex_;
  std::condition_variable events_cv_;
  std::deque<TranscriptEvent> events_;

  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::thread loop_thread_;
  Transcript transcript_;
  HubOutcome outcome_;
  bool started_ = false;
  bool joined_ = false;
};

struct TcpClientResult {
  bool registered = false;
  bool shutdown_received = false;
  std::vector<std::string> errors;
};

// Connects (retrying up to connect_timeout_s), registers and pumps the
// session until SHUTDOWN or disconnect.
TcpClientResult run_tcp_client(Client& client, const std::string& host, std::uint16_t port,
                               double connect_timeout_s = 10.0);

}  // namespace woc::bus
