#include "octomini/comm/exchange.hpp"
#include "octomini/core/snapshot.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace octomini::comm {

namespace {

/// The two axes transverse to `axis`, in increasing order.
std::array<int, 2> transverse(int axis) {
	return axis == 0 ? std::array<int, 2>{1, 2} : axis == 1 ? std::array<int, 2>{0, 2} : std::array<int, 2>{0, 1};
}

double minmod(double a, double b) {
	if (a * b <= 0.0) {
		return 0.0;
	}
	return std::abs(a) < std::abs(b) ? a : b;
}

/// Index along the face axis of the cell at `depth` inside the neighbor, seen from a leaf's `face`.
int source_depth_index(Face face, int depth, int n) { return face_sign(face) > 0 ? depth : n - 1 - depth; }

/// Index along the face axis of the leaf's ghost cell at `depth`.
int ghost_depth_index(Face face, int depth, int n) { return face_sign(face) > 0 ? n + depth : -1 - depth; }

std::size_t slab_size(int n) { return static_cast<std::size_t>(kGhostWidth) * n * n * kFieldCount; }

} // namespace

DistributionMap partition(Tree& tree, int localities) {
	if (localities < 1) {
		throw ConfigError("localities must be >= 1");
	}
	DistributionMap map;
	map.localities = localities;
	map.owner.assign(tree.node_count(), 0);
	map.slabs.resize(static_cast<std::size_t>(localities));
	const auto& leaves = tree.leaves();
	const std::size_t base = leaves.size() / localities;
	const std::size_t extra = leaves.size() % localities;
	std::size_t next = 0;
	for (int p = 0; p < localities; ++p) {
		const std::size_t count = base + (static_cast<std::size_t>(p) < extra ? 1 : 0);
		for (std::size_t i = 0; i < count; ++i, ++next) {
			map.slabs[p].push_back(leaves[next]);
			map.owner[static_cast<std::size_t>(leaves[next])] = p;
		}
	}
	for (std::size_t id = 0; id < tree.node_count(); ++id) {
		NodeId first = static_cast<NodeId>(id);
		while (!tree.node(first).is_leaf()) {
			first = tree.node(first).children[0];
		}
		map.owner[id] = map.owner[static_cast<std::size_t>(first)];
		tree.node(static_cast<NodeId>(id)).locality = map.owner[id];
	}
	return map;
}

void CommConfig::validate() const {
	if (localities < 1) {
		throw ConfigError("localities must be >= 1");
	}
}

std::vector<NeighborFace> neighbor_faces(const Tree& tree) {
	std::vector<NeighborFace> out;
	for (NodeId leaf : tree.leaves()) {
		for (Face f : kAllFaces) {
			const NeighborRef ref = face_neighbor(tree, leaf, f, Wrap::periodic);
			if (ref.kind != NeighborRef::Kind::domain_boundary) {
				out.push_back({leaf, f, ref});
			}
		}
	}
	return out;
}

void compute_ghost_slab(const Tree& tree, const NeighborFace& nf, std::vector<double>& slab) {
	const int n = tree.n_edge();
	const int axis = face_axis(nf.face);
	const auto [ta, tb] = transverse(axis);
	const SubGrid& src = tree.node(nf.source.node).grid;
	slab.resize(slab_size(n));
	std::size_t w = 0;

	if (nf.source.kind == NeighborRef::Kind::same_level) {
		for (int f = 0; f < kFieldCount; ++f) {
			for (int d = 0; d < kGhostWidth; ++d) {
				Index3 c;
				c[axis] = source_depth_index(nf.face, d, n);
				for (int b = 0; b < n; ++b) {
					c[tb] = b;
					for (int a = 0; a < n; ++a) {
						c[ta] = a;
						slab[w++] = src.at(f, c[0], c[1], c[2]);
					}
				}
			}
		}
		return;
	}
	if (nf.source.kind != NeighborRef::Kind::coarser) {
		throw ContractViolation("compute_ghost_slab: face has no neighbor");
	}

	// Fine ghost cells inside the coarse leaf's octant: conservative linear
	// interpolation with minmod slopes, slopes zero at the coarse block edge.
	const int half = n / 2;
	for (int f = 0; f < kFieldCount; ++f) {
		for (int d = 0; d < kGhostWidth; ++d) {
			Index3 fine;
			fine[axis] = source_depth_index(nf.face, d, n);
			for (int b = 0; b < n; ++b) {
				fine[tb] = b;
				for (int a = 0; a < n; ++a) {
					fine[ta] = a;
					const Index3 c = nf.source.octant * half + fine / 2;
					const double u = src.at(f, c[0], c[1], c[2]);
					double v = u;
					for (int ax = 0; ax < 3; ++ax) {
						if (c[ax] == 0 || c[ax] == n - 1) {
							continue;
						}
						Index3 lo = c, hi = c;
						--lo[ax];
						++hi[ax];
						const double slope =
						    minmod(src.at(f, hi[0], hi[1], hi[2]) - u, u - src.at(f, lo[0], lo[1], lo[2]));
						v += slope * ((fine[ax] % 2) ? 0.25 : -0.25);
					}
					slab[w++] = v;
				}
			}
		}
	}
}

void store_ghost_slab(Tree& tree, NodeId leaf, Face face, const std::vector<double>& slab) {
	const int n = tree.n_edge();
	if (slab.size() != slab_size(n)) {
		throw ContractViolation("store_ghost_slab: slab has the wrong length");
	}
	const int axis = face_axis(face);
	const auto [ta, tb] = transverse(axis);
	SubGrid& dst = tree.node(leaf).grid;
	std::size_t r = 0;
	for (int f = 0; f < kFieldCount; ++f) {
		for (int d = 0; d < kGhostWidth; ++d) {
			Index3 c;
			c[axis] = ghost_depth_index(face, d, n);
			for (int b = 0; b < n; ++b) {
				c[tb] = b;
				for (int a = 0; a < n; ++a) {
					c[ta] = a;
					dst.at(f, c[0], c[1], c[2]) = slab[r++];
				}
			}
		}
	}
}

void fill_boundary_ghosts(Tree& tree, NodeId leaf) {
	const int n = tree.n_edge();
	for (Face face : kAllFaces) {
		if (face_neighbor(tree, leaf, face, Wrap::periodic).kind != NeighborRef::Kind::domain_boundary) {
			continue;
		}
		const int axis = face_axis(face);
		const auto [ta, tb] = transverse(axis);
		SubGrid& g = tree.node(leaf).grid;
		for (int f = 0; f < kFieldCount; ++f) {
			const double sign = (f == kSx + axis) ? -1.0 : 1.0;
			for (int d = 0; d < kGhostWidth; ++d) {
				Index3 ghost, mirror;
				ghost[axis] = ghost_depth_index(face, d, n);
				mirror[axis] = face_sign(face) > 0 ? n - 1 - d : d;
				for (int b = 0; b < n; ++b) {
					ghost[tb] = mirror[tb] = b;
					for (int a = 0; a < n; ++a) {
						ghost[ta] = mirror[ta] = a;
						g.at(f, ghost[0], ghost[1], ghost[2]) = sign * g.at(f, mirror[0], mirror[1], mirror[2]);
					}
				}
			}
		}
	}
}

void encode_payload(const std::vector<double>& slab, std::vector<unsigned char>& out) {
	out.clear();
	out.reserve(slab.size() * 8);
	for (double v : slab) {
		put_le_f64(out, v);
	}
}

void decode_payload(const std::vector<unsigned char>& bytes, std::vector<double>& slab) {
	if (bytes.size() % 8 != 0) {
		throw ContractViolation("decode_payload: length is not a multiple of 8");
	}
	slab.resize(bytes.size() / 8);
	for (std::size_t i = 0; i < slab.size(); ++i) {
		slab[i] = get_le_f64(bytes.data() + 8 * i);
	}
}

GhostExchange::GhostExchange(CommConfig config, task::Engine& engine) : config_(config), engine_(&engine) {
	config_.validate();
	const auto l = static_cast<std::size_t>(config_.localities);
	next_seq_.assign(l * l, 0);
	last_seen_.assign(l * l, -1);
	for (std::size_t i = 0; i < l; ++i) {
		channels_.push_back(std::make_unique<Channel>());
	}
}

void GhostExchange::publish_all(const Tree& tree) { ready_epoch_.assign(tree.node_count(), epoch_); }

void GhostExchange::local_fast_path(Tree& tree, const DistributionMap& map, const NeighborFace& nf) {
	const NodeId src = nf.source.node;
	if (map.owner_of(src) != map.owner_of(nf.leaf)) {
		throw ContractViolation("local_fast_path: source and destination live on different localities");
	}
	if (static_cast<std::size_t>(src) >= ready_epoch_.size() || ready_epoch_[static_cast<std::size_t>(src)] != epoch_) {
		throw ContractViolation("local_fast_path: source boundary not published for this epoch");
	}
	std::vector<double> slab;
	compute_ghost_slab(tree, nf, slab);
	store_ghost_slab(tree, nf.leaf, nf.face, slab);
}

void GhostExchange::exchange(Tree& tree, const DistributionMap& map) {
	const int l = config_.localities;
	if (map.localities != l || map.owner.size() != tree.node_count()) {
		throw ContractViolation("exchange: distribution map does not match the configuration or tree");
	}
	restrict_tree(tree);
	begin_epoch();
	publish_all(tree);

	const std::vector<NeighborFace> faces = neighbor_faces(tree);
	std::vector<std::vector<std::size_t>> outgoing(static_cast<std::size_t>(l));
	for (std::size_t i = 0; i < faces.size(); ++i) {
		outgoing[map.owner_of(faces[i].source.node)].push_back(i);
	}
	// Slot (leaf * 6 + face) -> index into faces, to check that each face is filled once.
	std::vector<std::int64_t> slot(tree.node_count() * 6, -1);
	for (std::size_t i = 0; i < faces.size(); ++i) {
		slot[static_cast<std::size_t>(faces[i].leaf) * 6 + static_cast<int>(faces[i].face)] = static_cast<std::int64_t>(i);
	}
	std::vector<unsigned char> filled(faces.size(), 0);
	std::vector<std::uint64_t> sent_messages(static_cast<std::size_t>(l), 0);
	std::vector<std::uint64_t> sent_bytes(static_cast<std::size_t>(l), 0);
	std::vector<std::uint64_t> fast_copies(static_cast<std::size_t>(l), 0);

	std::vector<task::TaskHandle<void>> sends;
	for (int p = 0; p < l; ++p) {
		sends.push_back(engine_->submit([&, p] {
			std::vector<double> slab;
			for (std::size_t i : outgoing[p]) {
				const NeighborFace& nf = faces[i];
				const LocalityId q = map.owner_of(nf.leaf);
				if (config_.local_opt && q == p) {
					local_fast_path(tree, map, nf);
					filled[i] = 1;
					++fast_copies[p];
					continue;
				}
				GhostMessage msg;
				msg.sender = p;
				msg.receiver = q;
				msg.leaf = nf.leaf;
				msg.face = nf.face;
				msg.sequence = next_seq_[static_cast<std::size_t>(p) * l + q]++;
				compute_ghost_slab(tree, nf, slab);
				encode_payload(slab, msg.payload);
				sent_bytes[p] += msg.payload.size();
				++sent_messages[p];
				Channel& ch = *channels_[q];
				std::lock_guard lock(ch.mutex);
				ch.inbox.push_back(std::move(msg));
			}
		}));
	}
	task::when_all(*engine_, sends).get();

	std::vector<task::TaskHandle<void>> receives;
	for (int q = 0; q < l; ++q) {
		receives.push_back(engine_->submit([&, q] {
			std::vector<GhostMessage> inbox;
			{
				Channel& ch = *channels_[q];
				std::lock_guard lock(ch.mutex);
				inbox.swap(ch.inbox);
			}
			std::stable_sort(inbox.begin(), inbox.end(), [](const GhostMessage& a, const GhostMessage& b) {
				return std::tie(a.sender, a.sequence) < std::tie(b.sender, b.sequence);
			});
			const std::size_t expected_bytes = GhostMessage::payload_bytes(tree.n_edge());
			std::vector<double> slab;
			for (const GhostMessage& msg : inbox) {
				auto& last = last_seen_[static_cast<std::size_t>(msg.sender) * l + q];
				if (msg.receiver != q || static_cast<std::int64_t>(msg.sequence) != last + 1) {
					std::ostringstream os;
					os << "ghost exchange: sequence gap on channel " << msg.sender << "->" << q << " (expected "
					   << last + 1 << ", got " << msg.sequence << ")";
					throw SolverError(os.str());
				}
				last = static_cast<std::int64_t>(msg.sequence);
				if (msg.payload.size() != expected_bytes) {
					throw SolverError("ghost exchange: payload has the wrong length");
				}
				const std::int64_t i = slot[static_cast<std::size_t>(msg.leaf) * 6 + static_cast<int>(msg.face)];
				if (i < 0 || filled[static_cast<std::size_t>(i)]) {
					throw SolverError("ghost exchange: unexpected or duplicate ghost message");
				}
				decode_payload(msg.payload, slab);
				store_ghost_slab(tree, msg.leaf, msg.face, slab);
				filled[static_cast<std::size_t>(i)] = 1;
			}
			for (NodeId leaf : map.slabs[q]) {
				fill_boundary_ghosts(tree, leaf);
			}
		}));
	}
	task::when_all(*engine_, receives).get();

	for (std::size_t i = 0; i < faces.size(); ++i) {
		if (!filled[i]) {
			std::ostringstream os;
			os << "ghost exchange: missing payload for leaf " << faces[i].leaf << " face " << static_cast<int>(faces[i].face)
			   << " after the step barrier";
			throw SolverError(os.str());
		}
	}

	std::uint64_t messages = 0, bytes = 0, copies = 0;
	for (int p = 0; p < l; ++p) {
		messages += sent_messages[p];
		bytes += sent_bytes[p];
		copies += fast_copies[p];
	}
	std::lock_guard lock(stats_mutex_);
	stats_.messages += messages;
	stats_.bytes += bytes;
	stats_.fast_path_copies += copies;
	++stats_.exchanges;
	stats_.max_messages_per_exchange = std::max(stats_.max_messages_per_exchange, messages);
	stats_.max_bytes_per_exchange = std::max(stats_.max_bytes_per_exchange, bytes);
}

CommStats GhostExchange::stats() const {
	std::lock_guard lock(stats_mutex_);
	return stats_;
}

void GhostExchange::reset_stats() {
	std::lock_guard lock(stats_mutex_);
	stats_ = {};
}

} // namespace octomini::comm
