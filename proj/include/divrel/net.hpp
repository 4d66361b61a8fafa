#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "divrel/protocol.hpp"
#include "divrel/wire.hpp"

namespace divrel {

// blocking line-oriented TCP stream with per-step timeouts
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream();

  static TcpStream connect_to(const std::string& host, std::uint16_t port);

  void set_timeout(int seconds);
  void send_line(const std::string& line);
  // false on clean EOF; TimeoutError when the peer stays silent too long
  bool recv_line(std::string& out);
  void close();
  bool valid() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
  std::string buf_;
};

class TcpListener {
 public:
  TcpListener() = default;
  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&& other) noexcept;
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener();

  static TcpListener bind_to(const std::string& host, std::uint16_t port);
  std::uint16_t port() const { return port_; }
  TcpStream accept_one();  // TransportError once shut down
  void shutdown_now();
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// One thread per connection. Buyers register a session (query + reveal);
// sellers join a session by id, answer the query, and receive the valuation.
// The session registry is append-only and mutex-guarded.
class BrokerServer {
 public:
  using OutcomeHook = std::function<void(const ValuationOutcome&)>;

  explicit BrokerServer(ValuationConfig config, int step_timeout_sec = 30,
                        OutcomeHook on_outcome = {});
  ~BrokerServer();

  void start(const std::string& host, std::uint16_t port);
  std::uint16_t port() const { return listener_.port(); }
  void stop();

 private:
  struct Session {
    DirectionQuery query;
    BuyerSecret secret;
  };

  void accept_loop();
  void handle_connection(TcpStream stream);
  void handle_buyer(TcpStream& stream, const std::string& session);
  void handle_seller(TcpStream& stream, const std::string& session);
  WireMessage recv_expected(TcpStream& stream, const char* want);

  ValuationConfig config_;
  int timeout_;
  OutcomeHook on_outcome_;
  TcpListener listener_;
  std::thread accept_thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Session> sessions_;
  std::vector<std::thread> workers_;
  std::atomic<bool> stopping_{false};
};

// client roles; session ids must agree between buyer and sellers
void wire_buyer_session(const std::string& host, std::uint16_t port,
                        const Eigen::MatrixXd& buyer, int k_decoys,
                        const ValuationConfig& config, std::uint64_t seed,
                        const std::string& session, int timeout_sec = 30);

ValuationOutcome wire_seller_session(const std::string& host, std::uint16_t port,
                                     const Eigen::MatrixXd& seller,
                                     const std::string& session,
                                     int timeout_sec = 30);

// loopback broker + both client roles in one call
std::vector<ValuationOutcome> run_wire_session(
    const Eigen::MatrixXd& buyer, const std::vector<Eigen::MatrixXd>& sellers,
    int k_decoys, const ValuationConfig& config, std::uint64_t seed,
    int timeout_sec = 30);

}  // namespace divrel
