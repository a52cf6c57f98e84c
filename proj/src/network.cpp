#include "bridgedist/network.hpp"

namespace bridgedist {

void SyncNetwork::send(Endpoint from, Endpoint to, std::vector<Message> records) {
  auto bytes = encode(Envelope{from, to, std::move(records)});
  auto& out = counters_[from];
  ++out.sent;
  out.bytes_sent += bytes.size();
  auto& in = counters_[to];
  ++in.received;
  in.bytes_received += bytes.size();
  ++total_;
  inbox_[to].push_back(std::move(bytes));
}

std::vector<Envelope> SyncNetwork::deliver(Endpoint to) {
  std::vector<Envelope> out;
  auto it = inbox_.find(to);
  if (it == inbox_.end()) return out;
  out.reserve(it->second.size());
  for (const auto& bytes : it->second) out.push_back(decode_envelope(bytes));
  inbox_.erase(it);
  return out;
}

const TrafficCounters& SyncNetwork::counters(Endpoint party) const {
  static const TrafficCounters kEmpty;
  auto it = counters_.find(party);
  return it == counters_.end() ? kEmpty : it->second;
}

void SyncNetwork::reset_counters() {
  counters_.clear();
  total_ = 0;
}

}  // namespace bridgedist
