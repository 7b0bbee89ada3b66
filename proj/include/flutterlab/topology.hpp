#pragma once

#include <span>
#include <string>
#include <vector>

#include "flutterlab/feather.hpp"

namespace flutterlab {

enum class TopologyKind { ring, grid, complete };

std::string to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& s);

/// Symmetric non-negative information weights between feathers with a
/// zero diagonal and unit row sums over each neighbor set. Regular
/// graphs get exact uniform weights; irregular ones are balanced by a
/// symmetric Sinkhorn scaling (tolerance 1e-9).
struct Topology {
    int N = 0;
    std::vector<double> w;                    // N x N, row-major
    std::vector<std::vector<int>> neighbors;  // indices with w > 0 per row

    double weight(int i, int j) const { return w[std::size_t(i) * N + j]; }

    /// Symmetry, zero diagonal, and row normalization within 1e-9.
    void validate() const;
};

/// Builds the communication graph over span-ordered feather anchors.
/// - ring: each feather talks to its k nearest neighbors in the cyclic
///   span order (k even, split evenly to both sides);
/// - grid: one row per wing surface, ordered by span; lateral and
///   vertical adjacency (k is ignored);
/// - complete: all pairs.
/// Throws ComputationError if Sinkhorn balancing does not converge.
Topology build_topology(std::span<const FeatherSpec> feathers, TopologyKind kind, int k);

}  // namespace flutterlab
