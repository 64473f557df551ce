#include "mlepi/multiplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace mlepi {

bool LayerGraph::has_edge(NodeIndex i, NodeIndex j) const {
    auto nb = neighbors_of(i);
    return std::binary_search(nb.begin(), nb.end(), j);
}

uint64_t MultiplexNetwork::total_edges() const {
    uint64_t t = 0;
    for (const auto& l : layers) t += l.edge_count;
    return t;
}

uint32_t MultiplexNetwork::multidegree(NodeIndex i) const {
    uint32_t d = 0;
    for (const auto& l : layers) d += l.degree(i);
    return d;
}

const LayerGraph* MultiplexNetwork::find_layer(const std::string& name) const {
    for (const auto& l : layers)
        if (l.name == name) return &l;
    return nullptr;
}

namespace {

LayerGraph csr_from_pairs(std::string name, std::size_t n,
                          std::vector<std::pair<NodeIndex, NodeIndex>>& pairs) {
    // pairs are directed duplicates-allowed; symmetrize and dedup
    std::vector<std::pair<NodeIndex, NodeIndex>> sym;
    sym.reserve(pairs.size() * 2);
    for (auto [a, b] : pairs) {
        sym.emplace_back(a, b);
        sym.emplace_back(b, a);
    }
    std::sort(sym.begin(), sym.end());
    sym.erase(std::unique(sym.begin(), sym.end()), sym.end());

    LayerGraph g;
    g.name = std::move(name);
    g.offsets.assign(n + 1, 0);
    for (auto [a, b] : sym) g.offsets[a + 1]++;
    std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
    g.neighbors.reserve(sym.size());
    for (auto [a, b] : sym) g.neighbors.push_back(b); // already in sorted order per row
    g.edge_count = sym.size() / 2;
    return g;
}

} // namespace

MultiplexNetwork build_multiplex(const std::vector<LayerEdgeList>& edge_lists,
                                 const std::vector<NodeId>& registry) {
    MultiplexNetwork net;
    net.node_ids = registry;
    std::sort(net.node_ids.begin(), net.node_ids.end());
    net.node_ids.erase(std::unique(net.node_ids.begin(), net.node_ids.end()),
                       net.node_ids.end());
    const std::size_t n = net.node_ids.size();

    std::unordered_map<NodeId, NodeIndex> index;
    index.reserve(n);
    for (std::size_t i = 0; i < n; ++i) index[net.node_ids[i]] = static_cast<NodeIndex>(i);

    for (const auto& layer : edge_lists) {
        std::vector<std::pair<NodeIndex, NodeIndex>> pairs;
        pairs.reserve(layer.edges.size());
        for (auto [u, v] : layer.edges) {
            if (u == v)
                throw std::invalid_argument("self-loop on node " + std::to_string(u) +
                                            " in layer " + layer.name);
            auto iu = index.find(u);
            if (iu == index.end())
                throw std::invalid_argument("unknown node " + std::to_string(u) +
                                            " in layer " + layer.name);
            auto iv = index.find(v);
            if (iv == index.end())
                throw std::invalid_argument("unknown node " + std::to_string(v) +
                                            " in layer " + layer.name);
            pairs.emplace_back(iu->second, iv->second);
        }
        net.layers.push_back(csr_from_pairs(layer.name, n, pairs));
    }
    return net;
}

AggregateGraph aggregate(const MultiplexNetwork& net) {
    const std::size_t n = net.n_nodes();
    AggregateGraph g;
    g.offsets.assign(n + 1, 0);

    // k-way merge of sorted neighbor lists per node
    std::vector<NodeIndex> nbr;
    std::vector<double> wgt;
    std::vector<uint64_t> row_len(n, 0);
    std::vector<NodeIndex> merged;
    for (std::size_t i = 0; i < n; ++i) {
        merged.clear();
        for (const auto& l : net.layers) {
            auto nb = l.neighbors_of(static_cast<NodeIndex>(i));
            merged.insert(merged.end(), nb.begin(), nb.end());
        }
        std::sort(merged.begin(), merged.end());
        std::size_t k = 0;
        while (k < merged.size()) {
            std::size_t k2 = k;
            while (k2 < merged.size() && merged[k2] == merged[k]) ++k2;
            nbr.push_back(merged[k]);
            wgt.push_back(static_cast<double>(k2 - k));
            ++row_len[i];
            k = k2;
        }
    }
    for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] = g.offsets[i] + row_len[i];
    g.neighbors = std::move(nbr);
    g.weights = std::move(wgt);
    g.strength.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (uint64_t k = g.offsets[i]; k < g.offsets[i + 1]; ++k)
            g.strength[i] += g.weights[k];
    return g;
}

SupraAdjacency::SupraAdjacency(const MultiplexNetwork& net, double coupling_weight)
    : net_(net), n_(net.n_nodes()), l_(net.n_layers()), coupling_(coupling_weight) {
    if (coupling_weight < 0)
        throw std::invalid_argument("supra_adjacency: coupling_weight must be >= 0");
}

void SupraAdjacency::apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t a = 0; a < l_; ++a) {
        const auto& g = net_.layers[a];
        double* ya = y.data() + a * n_;
        const double* xa = x.data() + a * n_;
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (NodeIndex j : g.neighbors_of(static_cast<NodeIndex>(i))) s += xa[j];
            ya[i] = s;
        }
    }
    if (coupling_ != 0.0 && l_ > 1) {
        // add coupling * (sum over other copies) = coupling * (colsum - own)
        std::vector<double> colsum(n_, 0.0);
        for (std::size_t a = 0; a < l_; ++a) {
            const double* xa = x.data() + a * n_;
            for (std::size_t i = 0; i < n_; ++i) colsum[i] += xa[i];
        }
        for (std::size_t a = 0; a < l_; ++a) {
            double* ya = y.data() + a * n_;
            const double* xa = x.data() + a * n_;
            for (std::size_t i = 0; i < n_; ++i)
                ya[i] += coupling_ * (colsum[i] - xa[i]);
        }
    }
}

std::vector<double> SupraAdjacency::strengths() const {
    std::vector<double> s(n_ * l_, 0.0);
    for (std::size_t a = 0; a < l_; ++a)
        for (std::size_t i = 0; i < n_; ++i)
            s[a * n_ + i] = net_.layers[a].degree(static_cast<NodeIndex>(i)) +
                            (l_ > 1 ? coupling_ * static_cast<double>(l_ - 1) : 0.0);
    return s;
}

ComponentInfo connected_components(const std::vector<uint64_t>& offsets,
                                   const std::vector<NodeIndex>& neighbors) {
    const std::size_t n = offsets.size() - 1;
    std::vector<NodeIndex> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](NodeIndex x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (uint64_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            NodeIndex a = find(static_cast<NodeIndex>(i));
            NodeIndex b = find(neighbors[k]);
            if (a != b) parent[a] = b;
        }

    ComponentInfo info;
    info.component.assign(n, -1);
    std::unordered_map<NodeIndex, int64_t> label;
    for (std::size_t i = 0; i < n; ++i) {
        if (offsets[i + 1] == offsets[i]) continue; // inactive
        NodeIndex r = find(static_cast<NodeIndex>(i));
        auto it = label.find(r);
        if (it == label.end()) {
            it = label.emplace(r, static_cast<int64_t>(info.sizes.size())).first;
            info.sizes.push_back(0);
        }
        info.component[i] = it->second;
        info.sizes[it->second]++;
    }
    return info;
}

uint64_t ComponentInfo::giant() const {
    uint64_t g = 0;
    for (auto s : sizes) g = std::max(g, s);
    return g;
}

namespace {

// global transitivity: 3 * triangles / wedges
double transitivity(const std::vector<uint64_t>& offsets,
                    const std::vector<NodeIndex>& neighbors) {
    const std::size_t n = offsets.size() - 1;
    uint64_t wedges = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const uint64_t d = offsets[i + 1] - offsets[i];
        wedges += d * (d - 1) / 2;
    }
    // triangle counting by sorted adjacency intersection, each triangle
    // found once with i < j < k
    uint64_t triangles = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto nb_i_beg = neighbors.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
        auto nb_i_end = neighbors.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
        for (auto it = nb_i_beg; it != nb_i_end; ++it) {
            NodeIndex j = *it;
            if (j <= i) continue;
            // intersect neighbors(i) and neighbors(j), counting k > j
            auto a = it + 1; // neighbors of i greater than j
            auto b = neighbors.begin() + static_cast<std::ptrdiff_t>(offsets[j]);
            auto b_end = neighbors.begin() + static_cast<std::ptrdiff_t>(offsets[j + 1]);
            while (a != nb_i_end && b != b_end) {
                if (*a < *b) ++a;
                else if (*b < *a) ++b;
                else {
                    if (*a > j) ++triangles;
                    ++a; ++b;
                }
            }
        }
    }
    if (wedges == 0) return std::nan("");
    return 3.0 * static_cast<double>(triangles) / static_cast<double>(wedges);
}

LayerStats stats_for(const std::string& name, const std::vector<uint64_t>& offsets,
                     const std::vector<NodeIndex>& neighbors) {
    const std::size_t n = offsets.size() - 1;
    LayerStats s;
    s.layer = name;
    std::vector<uint32_t> degs;
    degs.reserve(n);
    uint64_t degsum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto d = static_cast<uint32_t>(offsets[i + 1] - offsets[i]);
        if (d > 0) {
            degs.push_back(d);
            degsum += d;
        }
    }
    s.active_nodes = degs.size();
    s.ties = degsum / 2;
    if (degs.empty()) {
        s.clustering = std::nan("");
        return s;
    }
    s.clustering = transitivity(offsets, neighbors);
    auto comp = connected_components(offsets, neighbors);
    s.components = comp.sizes.size();
    s.giant_share = 100.0 * static_cast<double>(comp.giant()) /
                    static_cast<double>(s.active_nodes);

    std::sort(degs.begin(), degs.end());
    auto pct = [&degs](double p) {
        // nearest-rank on sorted active degrees
        double idx = p * (static_cast<double>(degs.size()) - 1.0);
        auto lo = static_cast<std::size_t>(idx);
        auto hi = std::min(lo + 1, degs.size() - 1);
        double frac = idx - static_cast<double>(lo);
        return (1.0 - frac) * degs[lo] + frac * degs[hi];
    };
    s.deg_p5 = pct(0.05);
    s.deg_median = pct(0.5);
    s.deg_p95 = pct(0.95);
    s.deg_mean = static_cast<double>(degsum) / static_cast<double>(degs.size());
    double var = 0.0;
    for (auto d : degs) {
        double diff = static_cast<double>(d) - s.deg_mean;
        var += diff * diff;
    }
    s.deg_sd = degs.size() > 1 ? std::sqrt(var / (static_cast<double>(degs.size()) - 1.0)) : 0.0;
    return s;
}

} // namespace

std::vector<LayerStats> descriptive_stats(const MultiplexNetwork& net) {
    std::vector<LayerStats> out;
    for (const auto& l : net.layers)
        out.push_back(stats_for(l.name, l.offsets, l.neighbors));
    auto agg = aggregate(net);
    out.push_back(stats_for("aggregate", agg.offsets, agg.neighbors));
    return out;
}

} // namespace mlepi
