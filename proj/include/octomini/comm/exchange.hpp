#pragma once

#include "octomini/core/tree.hpp"
#include "octomini/task/engine.hpp"

#include <mutex>

namespace octomini::comm {

using LocalityId = int;

/// Leaf ownership by contiguous Morton slabs. Interior nodes belong to the
/// owner of their first leaf descendant in Morton order.
struct DistributionMap {
	int localities = 1;
	/// Owner per NodeId.
	std::vector<LocalityId> owner;
	/// Leaves of each locality, in Morton order.
	std::vector<std::vector<NodeId>> slabs;

	LocalityId owner_of(NodeId id) const { return owner[static_cast<std::size_t>(id)]; }
};

/// Splits the Morton leaf order into L slabs whose sizes differ by at most one,
/// and records the owners on the tree nodes as well.
DistributionMap partition(Tree& tree, int localities);

struct CommConfig {
	/// Same-locality neighbors copy ghosts directly instead of sending messages.
	bool local_opt = true;
	int localities = 1;

	void validate() const;
};

/// One ghost slab on the wire. Payload: g * N^2 * kFieldCount little-endian
/// float64 values, ordered field, depth from the face, then the two transverse
/// axes in increasing axis order (first transverse axis fastest).
struct GhostMessage {
	LocalityId sender = 0;
	LocalityId receiver = 0;
	/// Receiving leaf and its face.
	NodeId leaf = kNoNode;
	Face face = Face::xm;
	std::uint64_t sequence = 0;
	std::vector<unsigned char> payload;

	static std::size_t payload_bytes(int n_edge) {
		return static_cast<std::size_t>(kGhostWidth) * n_edge * n_edge * kFieldCount * 8;
	}
};

struct CommStats {
	std::uint64_t messages = 0;
	std::uint64_t bytes = 0;
	std::uint64_t fast_path_copies = 0;
	std::uint64_t exchanges = 0;
	std::uint64_t max_messages_per_exchange = 0;
	std::uint64_t max_bytes_per_exchange = 0;
};

/// A face of a leaf whose ghost slab comes from another node.
struct NeighborFace {
	NodeId leaf = kNoNode;
	Face face = Face::xm;
	NeighborRef source;
};

/// Every leaf face with a neighbor (same-level leaf, finer region, coarser leaf),
/// in Morton leaf order then face order. Domain-boundary faces are excluded.
std::vector<NeighborFace> neighbor_faces(const Tree& tree);

/// Computes the ghost slab that `nf.leaf` needs across `nf.face`, from the
/// source node's data only, in payload order.
void compute_ghost_slab(const Tree& tree, const NeighborFace& nf, std::vector<double>& slab);

/// Writes a slab (payload order) into the leaf's ghost layer.
void store_ghost_slab(Tree& tree, NodeId leaf, Face face, const std::vector<double>& slab);

/// Fills domain-boundary ghosts of a reflecting tree: mirror with the normal momentum negated.
void fill_boundary_ghosts(Tree& tree, NodeId leaf);

void encode_payload(const std::vector<double>& slab, std::vector<unsigned char>& out);
void decode_payload(const std::vector<unsigned char>& bytes, std::vector<double>& slab);

/// Simulated localities exchanging ghost layers through explicit channels.
class GhostExchange {
public:
	GhostExchange(CommConfig config, task::Engine& engine);

	const CommConfig& config() const { return config_; }

	/// Restricts interior nodes, publishes readiness, then fills every leaf ghost
	/// layer through messages or, when enabled and the source is local, direct copies.
	void exchange(Tree& tree, const DistributionMap& map);

	/// Direct ghost fill between two nodes of one locality. Throws
	/// ContractViolation if they live on different localities or the source has
	/// not published readiness for the current epoch.
	void local_fast_path(Tree& tree, const DistributionMap& map, const NeighborFace& nf);

	/// Marks every node's boundary data as ready for the current epoch.
	void publish_all(const Tree& tree);
	void begin_epoch() { ++epoch_; }
	std::uint64_t epoch() const { return epoch_; }

	CommStats stats() const;
	void reset_stats();

private:
	struct Channel {
		std::mutex mutex;
		std::vector<GhostMessage> inbox;
	};

	CommConfig config_;
	task::Engine* engine_;
	std::uint64_t epoch_ = 0;
	std::vector<std::uint64_t> ready_epoch_;
	/// Next sequence number per (sender, receiver).
	std::vector<std::uint64_t> next_seq_;
	/// Last sequence number seen per (sender, receiver).
	std::vector<std::int64_t> last_seen_;
	std::vector<std::unique_ptr<Channel>> channels_;
	mutable std::mutex stats_mutex_;
	CommStats stats_;
};

} // namespace octomini::comm
