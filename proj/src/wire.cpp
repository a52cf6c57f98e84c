#include "bridgedist/wire.hpp"

#include <string>
#include <type_traits>

#include "bridgedist/errors.hpp"

namespace bridgedist {
namespace {

enum class Tag : std::uint8_t {
  kRegisterShare = 1,
  kAssignBroadcast = 2,
  kShareDelivery = 3,
  kDrgCommit = 4,
  kDrgReveal = 5,
  kAgree = 6,
};

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) { put_u64_be(out_, v); }
  template <std::size_t N>
  void bytes(const std::array<std::uint8_t, N>& a) {
    out_.insert(out_.end(), a.begin(), a.end());
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v = (v << 8) | in_[pos_++];
    return v;
  }
  std::uint64_t u64() {
    need(8);
    const std::uint64_t v = read_u64_be(in_.subspan(pos_, 8));
    pos_ += 8;
    return v;
  }
  template <std::size_t N>
  void bytes(std::array<std::uint8_t, N>& a) {
    need(N);
    for (auto& b : a) b = in_[pos_++];
  }
  // Rejects counts that cannot fit in the remaining input.
  std::uint32_t count(std::size_t min_item_size) {
    const std::uint32_t n = u32();
    if (static_cast<std::uint64_t>(n) * min_item_size > in_.size() - pos_) fail("length prefix too large");
    return n;
  }
  bool done() const { return pos_ == in_.size(); }

  [[noreturn]] static void fail(const std::string& what) { throw Error(Errc::kMalformedMessage, what); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail("truncated message");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_message(Writer& w, const Message& msg) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RegisterShare>) {
          w.u8(static_cast<std::uint8_t>(Tag::kRegisterShare));
          w.u64(m.secret_id);
          w.u32(m.index);
          w.u64(m.value.value);
        } else if constexpr (std::is_same_v<T, AssignBroadcast>) {
          w.u8(static_cast<std::uint8_t>(Tag::kAssignBroadcast));
          w.u64(m.user);
          w.u32(static_cast<std::uint32_t>(m.indices.size()));
          for (SecretId s : m.indices) w.u64(s);
        } else if constexpr (std::is_same_v<T, ShareDelivery>) {
          w.u8(static_cast<std::uint8_t>(Tag::kShareDelivery));
          w.u64(m.user);
          w.u64(m.secret_id);
          w.u32(m.index);
          w.u64(m.value.value);
        } else if constexpr (std::is_same_v<T, DrgCommit>) {
          w.u8(static_cast<std::uint8_t>(Tag::kDrgCommit));
          w.u32(m.index);
          w.bytes(m.digest);
        } else if constexpr (std::is_same_v<T, DrgReveal>) {
          w.u8(static_cast<std::uint8_t>(Tag::kDrgReveal));
          w.u32(m.index);
          w.u32(static_cast<std::uint32_t>(m.values.size()));
          for (const auto& v : m.values) w.u64(v.value);
          w.bytes(m.nonce);
        } else {
          w.u8(static_cast<std::uint8_t>(Tag::kAgree));
          w.u32(m.phase);
          w.u32(static_cast<std::uint32_t>(m.payload.size()));
          for (std::uint64_t v : m.payload) w.u64(v);
        }
      },
      msg);
}

Message read_message(Reader& r) {
  switch (static_cast<Tag>(r.u8())) {
    case Tag::kRegisterShare: {
      RegisterShare m;
      m.secret_id = r.u64();
      m.index = r.u32();
      m.value.value = r.u64();
      return m;
    }
    case Tag::kAssignBroadcast: {
      AssignBroadcast m;
      m.user = r.u64();
      m.indices.resize(r.count(8));
      for (auto& s : m.indices) s = r.u64();
      return m;
    }
    case Tag::kShareDelivery: {
      ShareDelivery m;
      m.user = r.u64();
      m.secret_id = r.u64();
      m.index = r.u32();
      m.value.value = r.u64();
      return m;
    }
    case Tag::kDrgCommit: {
      DrgCommit m;
      m.index = r.u32();
      r.bytes(m.digest);
      return m;
    }
    case Tag::kDrgReveal: {
      DrgReveal m;
      m.index = r.u32();
      m.values.resize(r.count(8));
      for (auto& v : m.values) v.value = r.u64();
      r.bytes(m.nonce);
      return m;
    }
    case Tag::kAgree: {
      AgreeMsg m;
      m.phase = r.u32();
      m.payload.resize(r.count(8));
      for (auto& v : m.payload) v = r.u64();
      return m;
    }
  }
  Reader::fail("unknown message tag");
}

void write_endpoint(Writer& w, const Endpoint& e) {
  w.u8(static_cast<std::uint8_t>(e.kind));
  w.u64(e.id);
}

Endpoint read_endpoint(Reader& r) {
  const std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 3) Reader::fail("unknown party kind");
  return {static_cast<PartyKind>(kind), r.u64()};
}

}  // namespace

std::vector<std::uint8_t> encode(const Message& msg) {
  std::vector<std::uint8_t> out;
  Writer w(out);
  write_message(w, msg);
  return out;
}

std::vector<std::uint8_t> encode(const Envelope& env) {
  std::vector<std::uint8_t> out;
  Writer w(out);
  write_endpoint(w, env.from);
  write_endpoint(w, env.to);
  w.u32(static_cast<std::uint32_t>(env.records.size()));
  for (const auto& m : env.records) write_message(w, m);
  return out;
}

Message decode_message(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  Message m = read_message(r);
  if (!r.done()) Reader::fail("trailing bytes after message");
  return m;
}

Envelope decode_envelope(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  Envelope env;
  env.from = read_endpoint(r);
  env.to = read_endpoint(r);
  env.records.resize(r.count(1));
  for (auto& m : env.records) m = read_message(r);
  if (!r.done()) Reader::fail("trailing bytes after envelope");
  return env;
}

}  // namespace bridgedist
