#include "flutterlab/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flutterlab/errors.hpp"

namespace flutterlab {

std::string to_string(TopologyKind kind) {
    switch (kind) {
        case TopologyKind::ring: return "ring";
        case TopologyKind::grid: return "grid";
        case TopologyKind::complete: return "complete";
    }
    return "?";
}

TopologyKind topology_kind_from_string(const std::string& s) {
    if (s == "ring") return TopologyKind::ring;
    if (s == "grid") return TopologyKind::grid;
    if (s == "complete") return TopologyKind::complete;
    throw ConfigError("topology kind must be \"ring\", \"grid\" or \"complete\"");
}

void Topology::validate() const {
    for (int i = 0; i < N; ++i) {
        if (weight(i, i) != 0.0) throw ConfigError("topology diagonal must be zero");
        double row = 0.0;
        for (int j = 0; j < N; ++j) {
            if (weight(i, j) < 0.0) throw ConfigError("topology weights must be non-negative");
            if (weight(i, j) != weight(j, i)) throw ConfigError("topology weights must be symmetric");
            row += weight(i, j);
        }
        if (std::abs(row - 1.0) > 1e-9)
            throw ConfigError("topology row sums must equal 1 within 1e-9");
    }
}

namespace {

// Symmetric Sinkhorn scaling: find x > 0 with diag(x) A diag(x) having
// unit row sums. Iterates x <- sqrt(x / (A x)).
std::vector<double> sinkhorn_balance(const std::vector<double>& adj, int n) {
    std::vector<double> x(n, 1.0), ax(n);
    for (int it = 0; it < 500; ++it) {
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += adj[std::size_t(i) * n + j] * x[j];
            ax[i] = s;
            worst = std::max(worst, std::abs(x[i] * s - 1.0));
        }
        if (worst < 1e-9) {
            std::vector<double> w(std::size_t(n) * n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    w[std::size_t(i) * n + j] = x[i] * adj[std::size_t(i) * n + j] * x[j];
            return w;
        }
        for (int i = 0; i < n; ++i) {
            if (ax[i] <= 0.0)
                throw ComputationError("topology error: isolated node in the communication graph");
            x[i] = std::sqrt(x[i] / ax[i]);
        }
    }
    throw ComputationError(
        "topology error: Sinkhorn balancing did not converge in 500 iterations");
}

}  // namespace

Topology build_topology(std::span<const FeatherSpec> feathers, TopologyKind kind, int k) {
    const int n = int(feathers.size());
    if (n < 2) throw ConfigError("topology needs at least two feathers");
    if (kind == TopologyKind::ring) {
        if (k < 2 || k >= n || k % 2 != 0)
            throw ConfigError("ring topology needs an even neighbor count with 2 <= k < N",
                              "topology.k");
    }

    // span order: anchor, then surface, then id (a deterministic total order)
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& fa = feathers[a];
        const auto& fb = feathers[b];
        if (fa.z_anchor() != fb.z_anchor()) return fa.z_anchor() < fb.z_anchor();
        if (fa.side != fb.side) return fa.side == Side::lower;
        return fa.id < fb.id;
    });

    std::vector<double> adj(std::size_t(n) * n, 0.0);
    auto connect = [&](int a, int b) {
        adj[std::size_t(a) * n + b] = 1.0;
        adj[std::size_t(b) * n + a] = 1.0;
    };

    bool regular = false;
    int degree = 0;

    switch (kind) {
        case TopologyKind::complete:
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) connect(i, j);
            regular = true;
            degree = n - 1;
            break;
        case TopologyKind::ring:
            for (int i = 0; i < n; ++i)
                for (int d = 1; d <= k / 2; ++d) connect(order[i], order[(i + d) % n]);
            regular = true;
            degree = k;
            break;
        case TopologyKind::grid: {
            // one row per surface, each ordered by span; lateral + vertical links
            std::vector<int> lower, upper;
            for (int i : order)
                (feathers[i].side == Side::lower ? lower : upper).push_back(i);
            for (const auto& row : {lower, upper})
                for (std::size_t i = 0; i + 1 < row.size(); ++i) connect(row[i], row[i + 1]);
            const std::size_t rungs = std::min(lower.size(), upper.size());
            for (std::size_t i = 0; i < rungs; ++i) connect(lower[i], upper[i]);
            break;
        }
    }

    Topology topo;
    topo.N = n;
    if (regular) {
        topo.w.assign(std::size_t(n) * n, 0.0);
        for (std::size_t i = 0; i < adj.size(); ++i)
            if (adj[i] > 0.0) topo.w[i] = 1.0 / double(degree);
    } else {
        topo.w = sinkhorn_balance(adj, n);
    }

    topo.neighbors.resize(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (topo.weight(i, j) > 0.0) topo.neighbors[i].push_back(j);

    topo.validate();
    return topo;
}

}  // namespace flutterlab
