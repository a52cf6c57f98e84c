#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bridgedist/adversary.hpp"
#include "bridgedist/bridge_supply.hpp"
#include "bridgedist/field.hpp"
#include "bridgedist/network.hpp"
#include "bridgedist/secret_sharing.hpp"
#include "bridgedist/session.hpp"

namespace bridgedist {

enum class NodeRole : std::uint8_t { kLeader, kPeer };

/// One distributor. Holds a share of every registered bridge and, depending
/// on the mode, the leader's session or a replica of it. Never holds an address.
class DistributorNode {
 public:
  DistributorNode(std::uint32_t index, NodeRole role, bool honest,
                  DistributorBehavior behavior = DistributorBehavior::kHonest);

  std::uint32_t index() const noexcept { return index_; }
  NodeRole role() const noexcept { return role_; }
  bool honest() const noexcept { return honest_; }
  DistributorBehavior behavior() const noexcept { return behavior_; }
  Endpoint endpoint() const { return distributor_endpoint(index_); }

  /// Drains this node's inbox, storing shares and assignment broadcasts.
  /// Throws Errc::kContractViolation on a second share for the same secret or
  /// a share addressed to another index.
  void absorb(SyncNetwork& net);

  const std::map<SecretId, Share>& shares() const noexcept { return shares_; }
  const std::map<UserId, std::vector<SecretId>>& assignment_view() const noexcept { return assignment_view_; }
  void set_assignment(UserId user, std::vector<SecretId> secrets);
  void clear_assignments() { assignment_view_.clear(); }

  /// Session state (the leader's, or this node's replica).
  std::optional<Session> session;
  BridgeSupply supply;

  /// State dump used by the obliviousness scan.
  nlohmann::json snapshot() const;

 private:
  std::uint32_t index_;
  NodeRole role_;
  bool honest_;
  DistributorBehavior behavior_;
  std::map<SecretId, Share> shares_;
  std::map<UserId, std::vector<SecretId>> assignment_view_;
};

/// Builds m nodes, node 1 the leader; `corrupt` are 1-based indices.
std::vector<DistributorNode> make_distributors(int m, std::span<const std::uint32_t> corrupt,
                                               DistributorBehavior behavior);

/// The bridge splits its address into m shares and sends share j to
/// distributor j, then every node absorbs its inbox.
void register_bridge(const PrimeField& field, FieldElement address, SecretId id, const SharingPolicy& policy,
                     std::span<DistributorNode> nodes, SyncNetwork& net, Rng& rng);

/// The leader announces (user, secrets) for every user to every other
/// distributor in one envelope each; all nodes then hold the table.
void leader_assign_round(std::span<DistributorNode> nodes, SyncNetwork& net);

/// Records each node's own replica assignments as its assignment view.
void replica_assign_round(std::span<DistributorNode> nodes);

/// Every node sends each user in its assignment view one envelope with its
/// share of each assigned secret. Corrupt nodes deviate per their behavior:
/// silent sends nothing, garbage and equivocate send random field elements.
void deliver_shares(const PrimeField& field, std::span<DistributorNode> nodes, SyncNetwork& net, Rng& rng);

/// The secret chosen from a replicated pool by an agreed random number.
/// Returns nullopt when `exact` rejects r.
std::optional<SecretId> decentralized_assign(FieldElement r, std::span<const SecretId> pool, std::uint64_t modulus,
                                             bool exact);

struct ReconstructedBridge {
  SecretId secret_id = 0;
  std::optional<FieldElement> address;  // nullopt: reconstruction failed
  std::uint32_t shares = 0;
};

/// Groups the user's share deliveries by secret and decodes each one.
/// Failures are flagged per bridge rather than thrown.
std::vector<ReconstructedBridge> user_reconstruct(const PrimeField& field, std::span<const Envelope> inbox,
                                                  const SharingPolicy& policy);

/// True when any number in the JSON tree equals one of the packed addresses,
/// or any string contains one of their dotted forms.
bool snapshot_leaks_address(const nlohmann::json& snapshot, const std::unordered_set<std::uint64_t>& packed);

}  // namespace bridgedist
