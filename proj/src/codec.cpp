#include "coforget/codec.hpp"

#include <fmt/format.h>

namespace coforget {

namespace {

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_text(Bytes& out, std::string_view s, std::string_view what) {
  if (s.size() > 0xFFFF) {
    throw Error(ErrorCode::OversizeFrame, fmt::format("{} is {} bytes, limit 65535", what, s.size()));
  }
  if (!valid_utf8(s)) throw Error(ErrorCode::MalformedFrame, fmt::format("{} is not UTF-8", what));
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint64_t uint(std::size_t width) {
    need(width);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v = (v << 8) | data_[pos_ + i];
    pos_ += width;
    return v;
  }

  std::string text(std::string_view what) {
    const auto len = static_cast<std::size_t>(uint(2));
    need(len);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), len);
    pos_ += len;
    if (!valid_utf8(s)) throw Error(ErrorCode::MalformedFrame, fmt::format("{} is not UTF-8", what));
    return s;
  }

  Bytes raw(std::size_t len) {
    need(len);
    Bytes b(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
            data_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
    pos_ += len;
    return b;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw Error(ErrorCode::TruncatedFrame,
                  fmt::format("need {} bytes at offset {}, have {}", n, pos_, data_.size() - pos_));
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

bool valid_utf8(std::string_view text) {
  std::size_t i = 0;
  const auto n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates, and values past U+10FFFF.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

Bytes encode_frame(const Frame& frame) {
  if (frame.ids.size() > 0xFFFF) {
    throw Error(ErrorCode::OversizeFrame, fmt::format("{} ids, limit 65535", frame.ids.size()));
  }
  if (frame.signature.size() > 0xFFFF) {
    throw Error(ErrorCode::OversizeFrame, "signature longer than 65535 bytes");
  }
  Bytes body;
  put_u8(body, static_cast<std::uint8_t>(frame.kind));
  put_u64(body, frame.epoch);
  put_text(body, frame.sender, "sender");
  put_u16(body, static_cast<std::uint16_t>(frame.ids.size()));
  for (const auto& id : frame.ids) put_text(body, id, "memory id");
  put_u8(body, frame.vote ? static_cast<std::uint8_t>(*frame.vote) : 2);
  put_u16(body, static_cast<std::uint16_t>(frame.signature.size()));
  body.insert(body.end(), frame.signature.begin(), frame.signature.end());

  if (body.size() > kMaxFrameBody) {
    throw Error(ErrorCode::OversizeFrame,
                fmt::format("frame body {} bytes exceeds {}", body.size(), kMaxFrameBody));
  }
  Bytes out;
  out.reserve(body.size() + 4);
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  Reader head(bytes);
  const auto body_len = static_cast<std::size_t>(head.uint(4));
  if (body_len > kMaxFrameBody) {
    throw Error(ErrorCode::OversizeFrame,
                fmt::format("declared body {} bytes exceeds {}", body_len, kMaxFrameBody));
  }
  if (bytes.size() - 4 < body_len) {
    throw Error(ErrorCode::TruncatedFrame,
                fmt::format("declared body {} bytes, have {}", body_len, bytes.size() - 4));
  }
  if (bytes.size() - 4 > body_len) {
    throw Error(ErrorCode::MalformedFrame, "bytes follow the declared frame end");
  }

  Reader r(bytes.subspan(4, body_len));
  Frame f;
  const auto kind = r.uint(1);
  if (kind > static_cast<std::uint8_t>(MessageKind::propose_ack)) {
    throw Error(ErrorCode::UnknownMessageKind, fmt::format("kind byte 0x{:02X}", kind));
  }
  f.kind = static_cast<MessageKind>(kind);
  f.epoch = r.uint(8);
  f.sender = r.text("sender");
  const auto count = static_cast<std::size_t>(r.uint(2));
  f.ids.reserve(count);
  for (std::size_t i = 0; i < count; ++i) f.ids.push_back(r.text("memory id"));
  switch (r.uint(1)) {
    case 0: f.vote = Vote::keep; break;
    case 1: f.vote = Vote::forget; break;
    case 2: break;
    default: throw Error(ErrorCode::MalformedFrame, "vote byte outside {0,1,2}");
  }
  const auto sig_len = static_cast<std::size_t>(r.uint(2));
  f.signature = r.raw(sig_len);
  if (r.remaining() != 0) {
    throw Error(ErrorCode::MalformedFrame,
                fmt::format("{} unread bytes inside frame body", r.remaining()));
  }
  return f;
}

std::optional<Frame> extract_frame(Bytes& buffer) {
  if (buffer.size() < 4) return std::nullopt;
  const std::size_t body_len = (std::size_t{buffer[0]} << 24) | (std::size_t{buffer[1]} << 16) |
                               (std::size_t{buffer[2]} << 8) | std::size_t{buffer[3]};
  if (body_len > kMaxFrameBody) {
    throw Error(ErrorCode::OversizeFrame,
                fmt::format("declared body {} bytes exceeds {}", body_len, kMaxFrameBody));
  }
  if (buffer.size() < body_len + 4) return std::nullopt;
  Frame f = decode_frame(std::span<const std::uint8_t>(buffer.data(), body_len + 4));
  buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(body_len + 4));
  return f;
}

Frame to_frame(const PbftMessage& msg) {
  return Frame{msg.kind, msg.epoch, msg.sender, {msg.memory_id}, msg.vote, {}};
}

PbftMessage from_frame(const Frame& frame) {
  if (frame.kind != MessageKind::evaluate && frame.kind != MessageKind::prepare &&
      frame.kind != MessageKind::commit) {
    throw Error(ErrorCode::MalformedFrame,
                fmt::format("{} is not a consensus message", to_string(frame.kind)));
  }
  if (frame.ids.size() != 1) {
    throw Error(ErrorCode::MalformedFrame,
                fmt::format("consensus message carries {} ids, expected 1", frame.ids.size()));
  }
  const bool wants_vote = frame.kind != MessageKind::evaluate;
  if (wants_vote != frame.vote.has_value()) {
    throw Error(ErrorCode::MalformedFrame,
                fmt::format("{} {} a vote", to_string(frame.kind),
                            wants_vote ? "requires" : "must not carry"));
  }
  return PbftMessage{frame.kind, frame.epoch, frame.ids.front(), frame.sender, frame.vote};
}

Bytes encode(const PbftMessage& msg) { return encode_frame(to_frame(msg)); }

PbftMessage decode(std::span<const std::uint8_t> bytes) { return from_frame(decode_frame(bytes)); }

}  // namespace coforget
