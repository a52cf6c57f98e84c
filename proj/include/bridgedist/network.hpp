#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "bridgedist/wire.hpp"

namespace bridgedist {

struct TrafficCounters {
  std::uint64_t sent = 0;      // envelopes
  std::uint64_t received = 0;  // envelopes
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;

  std::uint64_t messages() const noexcept { return sent + received; }
};

/// Lockstep message layer with reliable, authenticated delivery. Every
/// envelope is serialized on send and parsed on delivery, so the accounting
/// reflects the wire format. Counters accumulate until reset.
class SyncNetwork {
 public:
  void send(Endpoint from, Endpoint to, std::vector<Message> records);

  /// Removes and returns everything queued for `to`, in send order.
  std::vector<Envelope> deliver(Endpoint to);

  const TrafficCounters& counters(Endpoint party) const;
  const std::map<Endpoint, TrafficCounters>& all_counters() const noexcept { return counters_; }
  std::uint64_t total_envelopes() const noexcept { return total_; }
  void reset_counters();

 private:
  std::map<Endpoint, std::vector<std::vector<std::uint8_t>>> inbox_;
  std::map<Endpoint, TrafficCounters> counters_;
  std::uint64_t total_ = 0;
};

}  // namespace bridgedist
