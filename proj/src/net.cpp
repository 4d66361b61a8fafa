#include "divrel/net.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <utility>

namespace divrel {

namespace {

constexpr std::size_t kMaxLine = 64u << 20;  // runaway-peer guard

[[noreturn]] void throw_errno(const char* what) {
  throw TransportError(std::string(what) + ": " + std::strerror(errno));
}

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) freeaddrinfo(head);
  }
};

}  // namespace

TcpStream::TcpStream(TcpStream&& other) noexcept
    : fd_(other.fd_), buf_(std::move(other.buf_)) {
  other.fd_ = -1;
}

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    buf_ = std::move(other.buf_);
    other.fd_ = -1;
  }
  return *this;
}

TcpStream::~TcpStream() { close(); }

void TcpStream::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

TcpStream TcpStream::connect_to(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  AddrInfo res;
  const std::string service = std::to_string(port);
  if (getaddrinfo(host.c_str(), service.c_str(), &hints, &res.head) != 0)
    throw TransportError("cannot resolve host '" + host + "'");
  int last_errno = ECONNREFUSED;
  for (addrinfo* ai = res.head; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_errno = errno;
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) return TcpStream(fd);
    last_errno = errno;
    ::close(fd);
  }
  errno = last_errno;
  throw_errno("connect");
}

void TcpStream::set_timeout(int seconds) {
  timeval tv{};
  tv.tv_sec = seconds;
  if (setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv)) < 0 ||
      setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv)) < 0)
    throw_errno("setsockopt");
}

void TcpStream::send_line(const std::string& line) {
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n =
        ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK)
        throw TimeoutError("send timed out");
      throw_errno("send");
    }
    sent += static_cast<std::size_t>(n);
  }
}

bool TcpStream::recv_line(std::string& out) {
  while (true) {
    const std::size_t nl = buf_.find('\n');
    if (nl != std::string::npos) {
      out.assign(buf_, 0, nl);
      buf_.erase(0, nl + 1);
      if (!out.empty() && out.back() == '\r') out.pop_back();
      return true;
    }
    if (buf_.size() > kMaxLine) throw ProtocolViolation("message line too long");
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n > 0) {
      buf_.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    if (n == 0) {
      if (!buf_.empty()) throw TransportError("connection closed mid-line");
      return false;
    }
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK)
      throw TimeoutError("peer sent nothing within the step timeout");
    throw_errno("recv");
  }
}

TcpListener::TcpListener(TcpListener&& other) noexcept
    : fd_(other.fd_), port_(other.port_) {
  other.fd_ = -1;
  other.port_ = 0;
}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    port_ = other.port_;
    other.fd_ = -1;
    other.port_ = 0;
  }
  return *this;
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void TcpListener::shutdown_now() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

TcpListener TcpListener::bind_to(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  AddrInfo res;
  const std::string service = std::to_string(port);
  if (getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints,
                  &res.head) != 0)
    throw TransportError("cannot resolve bind address '" + host + "'");
  for (addrinfo* ai = res.head; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    const int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      sockaddr_storage bound{};
      socklen_t len = sizeof(bound);
      if (getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len) < 0) {
        ::close(fd);
        throw_errno("getsockname");
      }
      TcpListener l;
      l.fd_ = fd;
      l.port_ = bound.ss_family == AF_INET6
                    ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                    : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
      return l;
    }
    ::close(fd);
  }
  throw TransportError("cannot bind to " + host + ":" + service);
}

TcpStream TcpListener::accept_one() {
  while (true) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return TcpStream(fd);
    if (errno == EINTR) continue;
    throw_errno("accept");
  }
}

BrokerServer::BrokerServer(ValuationConfig config, int step_timeout_sec,
                           OutcomeHook on_outcome)
    : config_(std::move(config)),
      timeout_(step_timeout_sec),
      on_outcome_(std::move(on_outcome)) {}

BrokerServer::~BrokerServer() { stop(); }

void BrokerServer::start(const std::string& host, std::uint16_t port) {
  listener_ = TcpListener::bind_to(host, port);
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void BrokerServer::stop() {
  if (stopping_.exchange(true)) {
    if (accept_thread_.joinable()) accept_thread_.join();
    return;
  }
  cv_.notify_all();
  listener_.shutdown_now();
  if (accept_thread_.joinable()) accept_thread_.join();
  listener_.close();
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lk(mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers)
    if (w.joinable()) w.join();
}

void BrokerServer::accept_loop() {
  while (!stopping_.load()) {
    TcpStream stream;
    try {
      stream = listener_.accept_one();
    } catch (const TransportError&) {
      break;  // listener shut down
    }
    std::lock_guard<std::mutex> lk(mu_);
    if (stopping_.load()) break;
    workers_.emplace_back(
        [this](TcpStream s) { handle_connection(std::move(s)); },
        std::move(stream));
  }
}

WireMessage BrokerServer::recv_expected(TcpStream& stream, const char* want) {
  std::string line;
  if (!stream.recv_line(line))
    throw TransportError(std::string("peer closed before ") + want);
  const WireMessage msg = decode_message(line);
  if (msg.type == want) return msg;
  static const char* known[] = {"HELLO", "QUERY", "VARIANCES",
                                "REVEAL", "VALUATION", "ERROR"};
  for (const char* k : known)
    if (msg.type == k)
      throw ProtocolViolation("expected " + std::string(want) + ", got " + msg.type);
  throw ProtocolViolation("unknown_type:" + msg.type);
}

namespace {

// errors raised while serving a connection become one ERROR line; the code
// rides in front of the detail, "unknown_type:" marked specially above
std::pair<std::string, std::string> error_code_for(const std::exception& e) {
  const std::string what = e.what();
  if (what.rfind("unknown_type:", 0) == 0)
    return {"unknown_type", "unrecognized message type '" + what.substr(13) + "'"};
  if (dynamic_cast<const SessionError*>(&e)) return {"protocol_violation", what};
  if (dynamic_cast<const ProtocolViolation*>(&e)) return {"protocol_violation", what};
  if (dynamic_cast<const Error*>(&e)) return {"invalid_request", what};
  return {"internal_error", what};
}

}  // namespace

void BrokerServer::handle_connection(TcpStream stream) {
  std::string session;
  try {
    stream.set_timeout(timeout_);
    const WireMessage hello = recv_expected(stream, "HELLO");
    session = hello.session;
    if (session.empty()) throw ProtocolViolation("empty session id");
    if (!hello.payload.contains("role") || !hello.payload["role"].is_string())
      throw ProtocolViolation("HELLO payload needs a role");
    const std::string role = hello.payload["role"].get<std::string>();
    if (role == "buyer")
      handle_buyer(stream, session);
    else if (role == "seller")
      handle_seller(stream, session);
    else
      throw ProtocolViolation("unknown role '" + role + "'");
  } catch (const TransportError&) {
    // peer vanished or stalled; nothing to say to it
  } catch (const std::exception& e) {
    const auto [code, detail] = error_code_for(e);
    try {
      stream.send_line(encode_message(error_message(session, code, detail)));
    } catch (...) {
    }
  }
}

void BrokerServer::handle_buyer(TcpStream& stream, const std::string& session) {
  const WireMessage query_msg = recv_expected(stream, "QUERY");
  if (query_msg.session != session)
    throw SessionError("QUERY session does not match HELLO");
  DirectionQuery query = parse_query(query_msg);
  for (Eigen::Index i = 0; i < query.directions.cols(); ++i) {
    const double n = query.directions.col(i).norm();
    if (std::abs(n - 1.0) > 1e-8)
      throw ProtocolViolation("query direction is not unit length");
  }

  const WireMessage reveal_msg = recv_expected(stream, "REVEAL");
  if (reveal_msg.session != session)
    throw SessionError("REVEAL session does not match HELLO");
  BuyerSecret secret = parse_reveal(reveal_msg);
  std::vector<bool> seen(static_cast<std::size_t>(query.directions.cols()), false);
  for (const Eigen::Index idx : secret.real_indices) {
    if (idx < 0 || idx >= query.directions.cols())
      throw ProtocolViolation("real index out of query bounds");
    if (seen[static_cast<std::size_t>(idx)])
      throw ProtocolViolation("duplicate real index");
    seen[static_cast<std::size_t>(idx)] = true;
  }

  {
    std::lock_guard<std::mutex> lk(mu_);
    if (sessions_.count(session))
      throw ProtocolViolation("session '" + session + "' already registered");
    sessions_.emplace(session, Session{std::move(query), std::move(secret)});
  }
  cv_.notify_all();
  // registration complete; closing the connection is the acknowledgement
}

void BrokerServer::handle_seller(TcpStream& stream, const std::string& session) {
  Session snapshot;
  {
    std::unique_lock<std::mutex> lk(mu_);
    const bool found =
        cv_.wait_for(lk, std::chrono::seconds(timeout_), [&] {
          return stopping_.load() || sessions_.count(session) > 0;
        });
    if (stopping_.load()) return;
    if (!found || sessions_.count(session) == 0) {
      lk.unlock();
      stream.send_line(encode_message(error_message(
          session, "unknown_session",
          "no buyer registered session '" + session + "' in time")));
      return;
    }
    snapshot = sessions_.at(session);
  }

  stream.send_line(encode_message(query_message(snapshot.query)));
  const WireMessage var_msg = recv_expected(stream, "VARIANCES");
  if (var_msg.session != session)
    throw SessionError("VARIANCES session does not match HELLO");
  const VarianceResponse response = parse_variances(var_msg);

  const ValuationOutcome outcome = broker_valuate(
      snapshot.secret, response, config_, snapshot.query.directions.cols());
  stream.send_line(encode_message(valuation_message(outcome)));
  if (on_outcome_) on_outcome_(outcome);
}

void wire_buyer_session(const std::string& host, std::uint16_t port,
                        const Eigen::MatrixXd& buyer, int k_decoys,
                        const ValuationConfig& config, std::uint64_t seed,
                        const std::string& session, int timeout_sec) {
  auto [query, secret] = buyer_prepare_query(buyer, k_decoys, config, seed, session);
  TcpStream stream = TcpStream::connect_to(host, port);
  stream.set_timeout(timeout_sec);
  stream.send_line(encode_message(hello_message("buyer", session)));
  stream.send_line(encode_message(query_message(query)));
  stream.send_line(encode_message(reveal_message(secret)));
  std::string line;
  while (stream.recv_line(line)) {
    const WireMessage msg = decode_message(line);
    if (msg.type == "ERROR")
      throw ProtocolViolation("broker rejected the session: " +
                              msg.payload.value("code", std::string("?")) + " — " +
                              msg.payload.value("detail", std::string()));
  }
  // clean EOF: the broker accepted the registration
}

ValuationOutcome wire_seller_session(const std::string& host, std::uint16_t port,
                                     const Eigen::MatrixXd& seller,
                                     const std::string& session, int timeout_sec) {
  TcpStream stream = TcpStream::connect_to(host, port);
  stream.set_timeout(timeout_sec);
  stream.send_line(encode_message(hello_message("seller", session)));

  std::string line;
  if (!stream.recv_line(line))
    throw TransportError("broker closed before sending the query");
  WireMessage msg = decode_message(line);
  if (msg.type == "ERROR")
    throw ProtocolViolation("broker error: " +
                            msg.payload.value("code", std::string("?")) + " — " +
                            msg.payload.value("detail", std::string()));
  const DirectionQuery query = parse_query(msg);

  const VarianceResponse response = seller_respond(seller, query);
  stream.send_line(encode_message(variances_message(response)));

  if (!stream.recv_line(line))
    throw TransportError("broker closed before sending the valuation");
  msg = decode_message(line);
  if (msg.type == "ERROR")
    throw ProtocolViolation("broker error: " +
                            msg.payload.value("code", std::string("?")) + " — " +
                            msg.payload.value("detail", std::string()));
  return parse_valuation(msg);
}

std::vector<ValuationOutcome> run_wire_session(
    const Eigen::MatrixXd& buyer, const std::vector<Eigen::MatrixXd>& sellers,
    int k_decoys, const ValuationConfig& config, std::uint64_t seed,
    int timeout_sec) {
  BrokerServer server(config, timeout_sec);
  server.start("127.0.0.1", 0);
  const std::string session = "sess-" + std::to_string(seed);
  std::vector<ValuationOutcome> outcomes;
  try {
    wire_buyer_session("127.0.0.1", server.port(), buyer, k_decoys, config, seed,
                       session, timeout_sec);
    outcomes.reserve(sellers.size());
    for (const auto& seller : sellers)
      outcomes.push_back(wire_seller_session("127.0.0.1", server.port(), seller,
                                             session, timeout_sec));
  } catch (...) {
    server.stop();
    throw;
  }
  server.stop();
  return outcomes;
}

}  // namespace divrel
