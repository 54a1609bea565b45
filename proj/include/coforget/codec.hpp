#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coforget/message.hpp"

namespace coforget {

using Bytes = std::vector<std::uint8_t>;

/// Largest allowed frame body (everything after the length prefix).
inline constexpr std::size_t kMaxFrameBody = 64 * 1024;

/// Wire frame; all integers big-endian:
///
///   u32 body_length (excludes itself)
///   u8  kind          0 EVALUATE, 1 PREPARE, 2 COMMIT, 3 PROPOSE, 4 PROPOSE_ACK
///   u64 epoch
///   u16 sender_len, sender bytes (UTF-8)
///   u16 id_count, then per id: u16 len, bytes (UTF-8)
///   u8  vote          0 keep, 1 forget, 2 absent
///   u16 sig_len, signature bytes (may be empty)
struct Frame {
  MessageKind kind = MessageKind::evaluate;
  std::uint64_t epoch = 0;
  std::string sender;
  std::vector<std::string> ids;
  std::optional<Vote> vote;
  Bytes signature;

  bool operator==(const Frame&) const = default;
};

/// Throws OversizeFrame if a field or the body exceeds its limit, and
/// MalformedFrame for text that is not valid UTF-8.
Bytes encode_frame(const Frame& frame);

/// Decodes exactly one frame occupying all of `bytes`.
/// Errors: TruncatedFrame, UnknownMessageKind, OversizeFrame, MalformedFrame.
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Pops one complete frame off the front of a stream buffer, if present.
std::optional<Frame> extract_frame(Bytes& buffer);

Frame to_frame(const PbftMessage& msg);
/// Throws MalformedFrame unless the frame is a consensus message with one id
/// and a vote present exactly for PREPARE/COMMIT.
PbftMessage from_frame(const Frame& frame);

Bytes encode(const PbftMessage& msg);
PbftMessage decode(std::span<const std::uint8_t> bytes);

bool valid_utf8(std::string_view text);

}  // namespace coforget
