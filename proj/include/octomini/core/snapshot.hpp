#pragma once

#include "octomini/core/tree.hpp"

#include <iosfwd>

namespace octomini {

/// On-disk layout:
///   "OCTOMINI v1 <n_edge> <max_level> <leaf_count>\n"
///   per leaf in Morton order: level, i, j, k as little-endian int32,
///   then kFieldCount * n_edge^3 little-endian float64 values, field-major, x fastest.
struct SnapshotLeaf {
	int level = 0;
	Index3 index = Index3::Zero();
	Eigen::ArrayXXd cells;
};

struct Snapshot {
	int n_edge = 0;
	int max_level = 0;
	std::vector<SnapshotLeaf> leaves;
};

void write_snapshot(const Tree& tree, std::ostream& out);
void write_snapshot(const Tree& tree, const std::string& path);
Snapshot read_snapshot(std::istream& in);

void put_le_f64(std::vector<unsigned char>& out, double v);
double get_le_f64(const unsigned char* p);

} // namespace octomini
