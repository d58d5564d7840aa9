#include "octomini/core/snapshot.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace octomini {

void put_le_f64(std::vector<unsigned char>& out, double v) {
	const auto bits = std::bit_cast<std::uint64_t>(v);
	for (int b = 0; b < 8; ++b) {
		out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xFFU));
	}
}

double get_le_f64(const unsigned char* p) {
	std::uint64_t bits = 0;
	for (int b = 0; b < 8; ++b) {
		bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
	}
	return std::bit_cast<double>(bits);
}

namespace {

void put_le_i32(std::vector<unsigned char>& out, std::int32_t v) {
	const auto bits = static_cast<std::uint32_t>(v);
	for (int b = 0; b < 4; ++b) {
		out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xFFU));
	}
}

std::int32_t get_le_i32(const unsigned char* p) {
	std::uint32_t bits = 0;
	for (int b = 0; b < 4; ++b) {
		bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
	}
	return static_cast<std::int32_t>(bits);
}

} // namespace

void write_snapshot(const Tree& tree, std::ostream& out) {
	const auto& leaves = tree.leaves();
	out << "OCTOMINI v1 " << tree.n_edge() << ' ' << tree.depth() << ' ' << leaves.size() << '\n';
	std::vector<unsigned char> buf;
	for (NodeId id : leaves) {
		const OctreeNode& n = tree.node(id);
		buf.clear();
		put_le_i32(buf, n.level);
		for (int d = 0; d < 3; ++d) {
			put_le_i32(buf, n.index[d]);
		}
		const Eigen::ArrayXXd cells = n.grid.interior();
		for (int f = 0; f < kFieldCount; ++f) {
			for (Eigen::Index r = 0; r < cells.rows(); ++r) {
				put_le_f64(buf, cells(r, f));
			}
		}
		out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
	}
}

void write_snapshot(const Tree& tree, const std::string& path) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw ConfigError("cannot open snapshot path " + path);
	}
	write_snapshot(tree, out);
}

Snapshot read_snapshot(std::istream& in) {
	std::string line;
	if (!std::getline(in, line)) {
		throw ConfigError("snapshot: missing header");
	}
	std::istringstream hs(line);
	std::string magic, version;
	std::size_t count = 0;
	Snapshot snap;
	hs >> magic >> version >> snap.n_edge >> snap.max_level >> count;
	if (!hs || magic != "OCTOMINI" || version != "v1") {
		throw ConfigError("snapshot: bad header '" + line + "'");
	}
	const std::size_t cells = static_cast<std::size_t>(snap.n_edge) * snap.n_edge * snap.n_edge;
	std::vector<unsigned char> buf(16 + cells * kFieldCount * 8);
	for (std::size_t l = 0; l < count; ++l) {
		if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
			throw ConfigError("snapshot: truncated leaf record");
		}
		SnapshotLeaf leaf;
		leaf.level = get_le_i32(buf.data());
		for (int d = 0; d < 3; ++d) {
			leaf.index[d] = get_le_i32(buf.data() + 4 * (d + 1));
		}
		leaf.cells.resize(static_cast<Eigen::Index>(cells), kFieldCount);
		const unsigned char* p = buf.data() + 16;
		for (int f = 0; f < kFieldCount; ++f) {
			for (std::size_t r = 0; r < cells; ++r, p += 8) {
				leaf.cells(static_cast<Eigen::Index>(r), f) = get_le_f64(p);
			}
		}
		snap.leaves.push_back(std::move(leaf));
	}
	return snap;
}

} // namespace octomini
