#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "coforget/codec.hpp"

namespace coforget {

/// Coordinator side of the forgetting proposal RPC. Answers each PROPOSE
/// frame with a PROPOSE_ACK listing the distinct ids, in first-seen order.
/// Safe to call from several threads.
class ProposalService {
 public:
  explicit ProposalService(std::string name = "coordinator");

  Frame handle(const Frame& request);

  /// Ids acknowledged so far, per proposing agent.
  std::map<std::string, std::set<std::string>> proposals() const;
  /// Union of all acknowledged ids.
  std::set<std::string> proposed_ids() const;
  void clear();

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  mutable std::mutex mu_;
  std::map<std::string, std::set<std::string>> by_agent_;
};

/// A request/response path to the coordinator carrying encoded frames.
class ProposalChannel {
 public:
  virtual ~ProposalChannel() = default;

  /// Throws ProposalTimeout when no reply arrives in time, TransportClosed
  /// when the channel or the peer is closed.
  virtual Bytes call(std::span<const std::uint8_t> request, std::chrono::milliseconds timeout) = 0;
  virtual void close() = 0;
};

/// Same-process channel. A null service models an unreachable coordinator.
class InProcessChannel final : public ProposalChannel {
 public:
  explicit InProcessChannel(ProposalService* service) : service_(service) {}

  Bytes call(std::span<const std::uint8_t> request, std::chrono::milliseconds timeout) override;
  void close() override { closed_ = true; }

 private:
  ProposalService* service_;
  bool closed_ = false;
};

/// TCP channel; one connection per call.
class TcpProposalChannel final : public ProposalChannel {
 public:
  TcpProposalChannel(std::string host, std::uint16_t port);

  Bytes call(std::span<const std::uint8_t> request, std::chrono::milliseconds timeout) override;
  void close() override { closed_ = true; }

 private:
  std::string host_;
  std::uint16_t port_;
  bool closed_ = false;
};

/// Serves a ProposalService over TCP on 127.0.0.1 from a background thread.
class TcpProposalServer {
 public:
  /// Port 0 picks an ephemeral port; see port().
  explicit TcpProposalServer(ProposalService& service, std::uint16_t port = 0);
  ~TcpProposalServer();

  TcpProposalServer(const TcpProposalServer&) = delete;
  TcpProposalServer& operator=(const TcpProposalServer&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  void serve();
  void serve_connection(int fd);

  ProposalService& service_;
  int listen_fd_ = -1;
  int wake_[2] = {-1, -1};
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

/// Sends the ids as one PROPOSE frame and returns the acknowledged ids.
/// Throws InvalidParameter on an empty list, plus the channel's errors.
std::vector<std::string> propose_forgetting(
    std::span<const std::string> memory_ids, const std::string& agent_id,
    ProposalChannel& channel, std::uint64_t epoch = 0,
    std::chrono::milliseconds timeout = std::chrono::seconds(10));

}  // namespace coforget
