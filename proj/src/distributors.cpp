#include "bridgedist/distributors.hpp"

#include <algorithm>
#include <string>

#include "bridgedist/drg.hpp"
#include "bridgedist/errors.hpp"

namespace bridgedist {

DistributorNode::DistributorNode(std::uint32_t index, NodeRole role, bool honest, DistributorBehavior behavior)
    : index_(index), role_(role), honest_(honest), behavior_(honest ? DistributorBehavior::kHonest : behavior) {}

void DistributorNode::absorb(SyncNetwork& net) {
  for (const auto& env : net.deliver(endpoint())) {
    for (const auto& rec : env.records) {
      if (const auto* s = std::get_if<RegisterShare>(&rec)) {
        if (s->index != index_) throw Error(Errc::kContractViolation, "share for another distributor");
        if (!shares_.emplace(s->secret_id, Share{s->secret_id, s->index, s->value}).second) {
          throw Error(Errc::kContractViolation, "second share for secret " + std::to_string(s->secret_id));
        }
      } else if (const auto* a = std::get_if<AssignBroadcast>(&rec)) {
        assignment_view_[a->user] = a->indices;
      }
    }
  }
}

void DistributorNode::set_assignment(UserId user, std::vector<SecretId> secrets) {
  assignment_view_[user] = std::move(secrets);
}

nlohmann::json DistributorNode::snapshot() const {
  nlohmann::json shares = nlohmann::json::array();
  for (const auto& [id, s] : shares_) shares.push_back({id, s.index, s.value.value});
  nlohmann::json view = nlohmann::json::object();
  for (const auto& [u, ids] : assignment_view_) view[std::to_string(u)] = ids;
  return {
      {"index", index_},
      {"role", role_ == NodeRole::kLeader ? "leader" : "peer"},
      {"honest", honest_},
      {"shares", std::move(shares)},
      {"assignment_view", std::move(view)},
      {"session", session ? session->to_json() : nlohmann::json()},
      {"supply", supply.to_json()},
  };
}

std::vector<DistributorNode> make_distributors(int m, std::span<const std::uint32_t> corrupt,
                                               DistributorBehavior behavior) {
  std::vector<DistributorNode> nodes;
  nodes.reserve(m);
  for (int j = 1; j <= m; ++j) {
    const bool bad = std::find(corrupt.begin(), corrupt.end(), static_cast<std::uint32_t>(j)) != corrupt.end();
    nodes.emplace_back(j, j == 1 ? NodeRole::kLeader : NodeRole::kPeer, !bad, behavior);
  }
  return nodes;
}

void register_bridge(const PrimeField& field, FieldElement address, SecretId id, const SharingPolicy& policy,
                     std::span<DistributorNode> nodes, SyncNetwork& net, Rng& rng) {
  if (static_cast<int>(nodes.size()) != policy.m) throw Error(Errc::kPrecondition, "policy size differs from node count");
  const auto shares = share(field, address, policy, rng, id);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    net.send(bridge_endpoint(id), nodes[j].endpoint(), {RegisterShare{id, shares[j].index, shares[j].value}});
  }
  for (auto& node : nodes) node.absorb(net);
}

void leader_assign_round(std::span<DistributorNode> nodes, SyncNetwork& net) {
  if (nodes.empty() || !nodes[0].session) throw Error(Errc::kPrecondition, "the leader has no session");
  DistributorNode& leader = nodes[0];
  const Session& s = *leader.session;
  leader.clear_assignments();
  std::vector<Message> table;
  table.reserve(s.n());
  for (UserId u : s.users()) {
    auto ids = s.assignments_for(u);
    table.push_back(AssignBroadcast{u, ids});
    leader.set_assignment(u, std::move(ids));
  }
  for (std::size_t j = 1; j < nodes.size(); ++j) {
    nodes[j].clear_assignments();
    net.send(leader.endpoint(), nodes[j].endpoint(), table);
    nodes[j].absorb(net);
  }
}

void replica_assign_round(std::span<DistributorNode> nodes) {
  for (auto& node : nodes) {
    node.clear_assignments();
    if (!node.session) continue;
    for (UserId u : node.session->users()) node.set_assignment(u, node.session->assignments_for(u));
  }
}

void deliver_shares(const PrimeField& field, std::span<DistributorNode> nodes, SyncNetwork& net, Rng& rng) {
  for (const auto& node : nodes) {
    if (node.behavior() == DistributorBehavior::kSilent) continue;
    for (const auto& [user, ids] : node.assignment_view()) {
      std::vector<Message> records;
      records.reserve(ids.size());
      for (SecretId id : ids) {
        auto it = node.shares().find(id);
        if (it == node.shares().end()) throw Error(Errc::kContractViolation, "no share for assigned secret");
        FieldElement v = it->second.value;
        if (!node.honest()) v = field.random(rng);
        records.push_back(ShareDelivery{user, id, node.index(), v});
      }
      net.send(node.endpoint(), user_endpoint(user), std::move(records));
    }
  }
}

std::optional<SecretId> decentralized_assign(FieldElement r, std::span<const SecretId> pool, std::uint64_t modulus,
                                             bool exact) {
  if (pool.empty()) throw Error(Errc::kPrecondition, "empty pool");
  const auto k = index_from_random(r, pool.size(), modulus, exact);
  if (!k) return std::nullopt;
  return pool[*k];
}

std::vector<ReconstructedBridge> user_reconstruct(const PrimeField& field, std::span<const Envelope> inbox,
                                                  const SharingPolicy& policy) {
  std::map<SecretId, std::vector<Share>> grouped;
  for (const auto& env : inbox) {
    if (env.from.kind != PartyKind::kDistributor) continue;
    for (const auto& rec : env.records) {
      const auto* d = std::get_if<ShareDelivery>(&rec);
      // A share only counts under the index of the distributor that sent it.
      if (!d || d->index != env.from.id) continue;
      auto& list = grouped[d->secret_id];
      if (std::none_of(list.begin(), list.end(), [&](const Share& s) { return s.index == d->index; })) {
        list.push_back({d->secret_id, d->index, d->value});
      }
    }
  }
  std::vector<ReconstructedBridge> out;
  out.reserve(grouped.size());
  for (const auto& [id, shares] : grouped) {
    ReconstructedBridge r{id, std::nullopt, static_cast<std::uint32_t>(shares.size())};
    try {
      r.address = reconstruct(field, shares, policy);
    } catch (const Error& e) {
      if (e.code() != Errc::kReconstructFailure && e.code() != Errc::kPrecondition) throw;
    }
    out.push_back(r);
  }
  return out;
}

bool snapshot_leaks_address(const nlohmann::json& snapshot, const std::unordered_set<std::uint64_t>& packed) {
  if (packed.empty()) return false;
  std::vector<std::string> dotted;
  dotted.reserve(packed.size());
  for (std::uint64_t p : packed) {
    const auto text = BridgeAddress::unpack({p}).to_string();
    dotted.push_back(text.substr(0, text.rfind(':')));
  }
  std::vector<const nlohmann::json*> stack{&snapshot};
  while (!stack.empty()) {
    const nlohmann::json* j = stack.back();
    stack.pop_back();
    if (j->is_structured()) {
      for (const auto& child : *j) stack.push_back(&child);
    } else if (j->is_number_unsigned()) {
      if (packed.count(j->get<std::uint64_t>())) return true;
    } else if (j->is_number_integer()) {
      const auto v = j->get<std::int64_t>();
      if (v >= 0 && packed.count(static_cast<std::uint64_t>(v))) return true;
    } else if (j->is_string()) {
      const auto& s = j->get_ref<const std::string&>();
      for (const auto& d : dotted) {
        if (s.find(d) != std::string::npos) return true;
      }
    }
  }
  return false;
}

}  // namespace bridgedist
