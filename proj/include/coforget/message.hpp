#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "coforget/core.hpp"

namespace coforget {

enum class MessageKind : std::uint8_t {
  evaluate = 0,
  prepare = 1,
  commit = 2,
  propose = 3,
  propose_ack = 4,
};

std::string_view to_string(MessageKind kind);

/// One consensus message about one memory. PREPARE and COMMIT carry a vote;
/// EVALUATE does not.
struct PbftMessage {
  MessageKind kind = MessageKind::evaluate;
  std::uint64_t epoch = 0;
  std::string memory_id;
  std::string sender;
  std::optional<Vote> vote;

  bool operator==(const PbftMessage&) const = default;
};

}  // namespace coforget
