#include "coforget/proposal.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <fmt/format.h>

#include "coforget/log.hpp"

namespace coforget {

ProposalService::ProposalService(std::string name) : name_(std::move(name)) {}

Frame ProposalService::handle(const Frame& request) {
  if (request.kind != MessageKind::propose) {
    throw Error(ErrorCode::MalformedFrame,
                fmt::format("coordinator expects PROPOSE, got {}", to_string(request.kind)));
  }
  Frame ack{MessageKind::propose_ack, request.epoch, name_, {}, std::nullopt, {}};
  std::set<std::string> seen;
  for (const auto& id : request.ids) {
    if (seen.insert(id).second) ack.ids.push_back(id);
  }
  std::lock_guard lock(mu_);
  by_agent_[request.sender].insert(seen.begin(), seen.end());
  return ack;
}

std::map<std::string, std::set<std::string>> ProposalService::proposals() const {
  std::lock_guard lock(mu_);
  return by_agent_;
}

std::set<std::string> ProposalService::proposed_ids() const {
  std::lock_guard lock(mu_);
  std::set<std::string> all;
  for (const auto& [agent, ids] : by_agent_) all.insert(ids.begin(), ids.end());
  return all;
}

void ProposalService::clear() {
  std::lock_guard lock(mu_);
  by_agent_.clear();
}

Bytes InProcessChannel::call(std::span<const std::uint8_t> request, std::chrono::milliseconds) {
  if (closed_) throw Error(ErrorCode::TransportClosed, "channel closed");
  if (service_ == nullptr) throw Error(ErrorCode::ProposalTimeout, "coordinator unreachable");
  return encode_frame(service_->handle(decode_frame(request)));
}

namespace {

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() < 0 ? 0 : static_cast<int>(left.count());
}

bool wait_for(int fd, short events, Clock::time_point deadline) {
  pollfd p{fd, events, 0};
  int rc;
  do {
    rc = ::poll(&p, 1, remaining_ms(deadline));
  } while (rc < 0 && errno == EINTR);
  return rc > 0;
}

void send_all(int fd, std::span<const std::uint8_t> data, Clock::time_point deadline) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    if (!wait_for(fd, POLLOUT, deadline)) throw Error(ErrorCode::ProposalTimeout, "send timed out");
    const auto n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorCode::TransportClosed, fmt::format("send failed: {}", std::strerror(errno)));
    }
    sent += static_cast<std::size_t>(n);
  }
}

// Reads until one whole frame is buffered; nullopt on orderly EOF before any byte.
std::optional<Frame> read_frame(int fd, Bytes& buffer, Clock::time_point deadline) {
  std::uint8_t chunk[4096];
  while (true) {
    if (auto f = extract_frame(buffer)) return f;
    if (!wait_for(fd, POLLIN, deadline)) throw Error(ErrorCode::ProposalTimeout, "reply timed out");
    const auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorCode::TransportClosed, fmt::format("recv failed: {}", std::strerror(errno)));
    }
    if (n == 0) {
      if (buffer.empty()) return std::nullopt;
      throw Error(ErrorCode::TransportClosed, "peer closed mid-frame");
    }
    buffer.insert(buffer.end(), chunk, chunk + n);
  }
}

}  // namespace

TcpProposalChannel::TcpProposalChannel(std::string host, std::uint16_t port)
    : host_(std::move(host)), port_(port) {}

Bytes TcpProposalChannel::call(std::span<const std::uint8_t> request,
                               std::chrono::milliseconds timeout) {
  if (closed_) throw Error(ErrorCode::TransportClosed, "channel closed");
  const auto deadline = Clock::now() + timeout;

  Fd sock(::socket(AF_INET, SOCK_STREAM | SOCK_NONBLOCK, 0));
  if (sock.get() < 0) throw Error(ErrorCode::Io, "socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port_);
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
    throw Error(ErrorCode::InvalidParameter, fmt::format("bad IPv4 address '{}'", host_));
  }
  if (::connect(sock.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    if (errno != EINPROGRESS) {
      throw Error(ErrorCode::ProposalTimeout,
                  fmt::format("{}:{} unreachable: {}", host_, port_, std::strerror(errno)));
    }
    int err = 0;
    socklen_t len = sizeof err;
    if (!wait_for(sock.get(), POLLOUT, deadline) ||
        ::getsockopt(sock.get(), SOL_SOCKET, SO_ERROR, &err, &len) < 0 || err != 0) {
      throw Error(ErrorCode::ProposalTimeout, fmt::format("{}:{} unreachable", host_, port_));
    }
  }
  send_all(sock.get(), request, deadline);
  Bytes buffer;
  auto reply = read_frame(sock.get(), buffer, deadline);
  if (!reply) throw Error(ErrorCode::TransportClosed, "coordinator closed without replying");
  return encode_frame(*reply);
}

TcpProposalServer::TcpProposalServer(ProposalService& service, std::uint16_t port)
    : service_(service) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::Io, "socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listen_fd_, 16) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(ErrorCode::Io, fmt::format("cannot listen on port {}: {}", port, why));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::pipe(wake_) < 0) {
    ::close(listen_fd_);
    throw Error(ErrorCode::Io, "pipe() failed");
  }
  thread_ = std::thread([this] { serve(); });
}

TcpProposalServer::~TcpProposalServer() { stop(); }

void TcpProposalServer::stop() {
  if (stopping_.exchange(true)) return;
  const std::uint8_t b = 1;
  [[maybe_unused]] auto n = ::write(wake_[1], &b, 1);
  if (thread_.joinable()) thread_.join();
  ::close(listen_fd_);
  ::close(wake_[0]);
  ::close(wake_[1]);
}

void TcpProposalServer::serve() {
  while (!stopping_) {
    pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_[0], POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (fds[1].revents != 0) break;
    if (fds[0].revents & POLLIN) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd >= 0) serve_connection(fd);
    }
  }
}

void TcpProposalServer::serve_connection(int raw_fd) {
  Fd fd(raw_fd);
  Bytes buffer;
  try {
    while (!stopping_) {
      const auto deadline = Clock::now() + std::chrono::seconds(10);
      auto request = read_frame(fd.get(), buffer, deadline);
      if (!request) return;
      const auto reply = encode_frame(service_.handle(*request));
      send_all(fd.get(), reply, deadline);
    }
  } catch (const Error& e) {
    logger().warn("proposal connection dropped: {}", e.what());
  }
}

std::vector<std::string> propose_forgetting(std::span<const std::string> memory_ids,
                                            const std::string& agent_id, ProposalChannel& channel,
                                            std::uint64_t epoch,
                                            std::chrono::milliseconds timeout) {
  if (memory_ids.empty()) throw Error(ErrorCode::InvalidParameter, "empty proposal");
  Frame request{MessageKind::propose, epoch, agent_id,
                std::vector<std::string>(memory_ids.begin(), memory_ids.end()), std::nullopt, {}};
  Bytes reply_bytes;
  try {
    reply_bytes = channel.call(encode_frame(request), timeout);
  } catch (const Error& e) {
    logger().error("proposal call failed: {}", e.what());
    throw;
  }
  auto reply = decode_frame(reply_bytes);
  if (reply.kind != MessageKind::propose_ack) {
    throw Error(ErrorCode::MalformedFrame,
                fmt::format("expected PROPOSE_ACK, got {}", to_string(reply.kind)));
  }
  return std::move(reply.ids);
}

}  // namespace coforget
