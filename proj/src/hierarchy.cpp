#include "conekg/hierarchy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "conekg/errors.hpp"

namespace conekg {
namespace {

constexpr double kEfficiencyAlpha = 500.0;
constexpr std::size_t kMaxLubNodes = 50000;  // pairwise bitmap guard (~312 MB)

struct BitMatrix {
    std::size_t rows = 0, cols = 0, stride = 0;  // stride in 64-bit words
    std::vector<std::uint64_t> words;

    BitMatrix(std::size_t r, std::size_t c)
        : rows(r), cols(c), stride((c + 63) / 64), words(r * stride, 0) {}
    std::uint64_t* row(std::size_t r) { return words.data() + r * stride; }
    const std::uint64_t* row(std::size_t r) const { return words.data() + r * stride; }
    void set(std::size_t r, std::size_t c) { row(r)[c >> 6] |= 1ULL << (c & 63); }
    void or_row(std::size_t dst, std::size_t src) {
        std::uint64_t* d = row(dst);
        const std::uint64_t* s = row(src);
        for (std::size_t w = 0; w < stride; ++w) d[w] |= s[w];
    }
    std::size_t popcount_row(std::size_t r) const {
        const std::uint64_t* p = row(r);
        std::size_t total = 0;
        for (std::size_t w = 0; w < stride; ++w) total += std::popcount(p[w]);
        return total;
    }
};

using Adjacency = std::vector<std::vector<std::int32_t>>;

// Strongly connected components; comps are numbered in emission order, which
// for Tarjan is reverse topological (sinks get low numbers).
struct SccResult {
    std::vector<std::int32_t> comp;
    std::int32_t count = 0;
};

SccResult tarjan(const Adjacency& adj) {
    const auto n = static_cast<std::int32_t>(adj.size());
    SccResult result;
    result.comp.assign(adj.size(), -1);
    std::vector<std::int32_t> index(adj.size(), -1), lowlink(adj.size(), 0);
    std::vector<bool> on_stack(adj.size(), false);
    std::vector<std::int32_t> stack;
    struct Frame {
        std::int32_t v;
        std::size_t edge;
    };
    std::vector<Frame> frames;
    std::int32_t next_index = 0;

    for (std::int32_t root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        frames.push_back({root, 0});
        index[root] = lowlink[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            Frame& f = frames.back();
            const auto v = static_cast<std::size_t>(f.v);
            if (f.edge < adj[v].size()) {
                const std::int32_t w = adj[v][f.edge++];
                if (index[w] < 0) {
                    index[w] = lowlink[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    lowlink[f.v] = std::min(lowlink[f.v], index[w]);
                }
            } else {
                const std::int32_t v_id = f.v;
                frames.pop_back();
                if (!frames.empty())
                    lowlink[frames.back().v] = std::min(lowlink[frames.back().v], lowlink[v_id]);
                if (lowlink[v_id] == index[v_id]) {
                    while (true) {
                        const std::int32_t w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        result.comp[static_cast<std::size_t>(w)] = result.count;
                        if (w == v_id) break;
                    }
                    ++result.count;
                }
            }
        }
    }
    return result;
}

// Deduplicated cross-component edges of the condensation.
Adjacency condense(const Adjacency& adj, const SccResult& scc) {
    Adjacency cond(static_cast<std::size_t>(scc.count));
    for (std::size_t v = 0; v < adj.size(); ++v)
        for (std::int32_t w : adj[v]) {
            const std::int32_t cv = scc.comp[v], cw = scc.comp[static_cast<std::size_t>(w)];
            if (cv != cw) cond[static_cast<std::size_t>(cv)].push_back(cw);
        }
    for (auto& out : cond) {
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    return cond;
}

// Node bitset of everything each component reaches, itself included.
// Components are processed sinks-first, so successors are already complete.
BitMatrix descendant_bits(const Adjacency& adj, const SccResult& scc) {
    const Adjacency cond = condense(adj, scc);
    BitMatrix desc(static_cast<std::size_t>(scc.count), adj.size());
    for (std::size_t v = 0; v < adj.size(); ++v)
        desc.set(static_cast<std::size_t>(scc.comp[v]), v);
    for (std::int32_t c = 0; c < scc.count; ++c)
        for (std::int32_t child : cond[static_cast<std::size_t>(c)])
            desc.or_row(static_cast<std::size_t>(c), static_cast<std::size_t>(child));
    return desc;
}

// cover(c) = union of desc(w) over all components w that reach c (w = c
// included): the set of nodes sharing a common ancestor with anything in c.
// Processes sources-first (reverse emission order).
BitMatrix cover_bits(const Adjacency& adj, const SccResult& scc, const BitMatrix& desc) {
    const Adjacency cond = condense(adj, scc);
    BitMatrix cover = desc;
    for (std::int32_t c = scc.count - 1; c >= 0; --c)
        for (std::int32_t child : cond[static_cast<std::size_t>(c)])
            cover.or_row(static_cast<std::size_t>(child), static_cast<std::size_t>(c));
    return cover;
}

struct ReachCounts {
    std::uint64_t one_way = 0;  // ordered reachable pairs across components
    std::uint64_t total = 0;    // all ordered reachable pairs (u != v)
};

ReachCounts reachable_pairs(const SccResult& scc, const BitMatrix& desc) {
    std::vector<std::uint64_t> comp_size(static_cast<std::size_t>(scc.count), 0);
    for (std::int32_t c : scc.comp) ++comp_size[static_cast<std::size_t>(c)];
    ReachCounts counts;
    for (std::int32_t c = 0; c < scc.count; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const std::uint64_t below = desc.popcount_row(ci) - comp_size[ci];
        counts.one_way += comp_size[ci] * below;
        counts.total += comp_size[ci] * (comp_size[ci] - 1);
    }
    counts.total += counts.one_way;
    return counts;
}

double hierarchy_value(const ReachCounts& counts) {
    if (counts.total == 0) return 0.0;
    return static_cast<double>(counts.one_way) / static_cast<double>(counts.total);
}

std::uint64_t undirected_pair_count(std::size_t n, const std::vector<std::pair<int32_t, int32_t>>& edges) {
    std::vector<std::int32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::int32_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (const auto& [a, b] : edges) {
        const std::int32_t ra = find(a), rb = find(b);
        if (ra != rb) parent[static_cast<std::size_t>(ra)] = rb;
    }
    std::vector<std::uint64_t> size(n, 0);
    for (std::size_t v = 0; v < n; ++v) ++size[static_cast<std::size_t>(find(static_cast<std::int32_t>(v)))];
    std::uint64_t pairs = 0;
    for (std::uint64_t s : size) pairs += s * (s - 1) / 2;
    return pairs;
}

double efficiency_value(std::size_t n, std::uint64_t distinct_edges) {
    if (n < 2) return 1.0;
    const double spare = static_cast<double>(distinct_edges) - static_cast<double>(n - 1);
    if (spare <= 0.0) return 1.0;
    if (n == 2) return 0.0;  // any redundancy with a zero-capacity denominator
    const double capacity = static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0;
    return std::clamp(1.0 - kEfficiencyAlpha * spare / capacity, 0.0, 1.0);
}

}  // namespace

KrackhardtScores krackhardt(const TripleStore& store, Split split,
                            const std::vector<std::int32_t>& lub_relations) {
    const std::size_t n = store.entity_count();
    if (n < 2) throw DataError("krackhardt: need at least two entities");
    const std::vector<Triple>& triples = store.split(split);

    Adjacency adj(n);
    std::unordered_set<std::uint64_t> edge_set;
    std::vector<std::pair<std::int32_t, std::int32_t>> undirected;
    for (const Triple& t : triples) {
        if (t.h == t.t) continue;
        const std::uint64_t key =
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.h)) << 32) |
            static_cast<std::uint32_t>(t.t);
        if (!edge_set.insert(key).second) continue;
        adj[static_cast<std::size_t>(t.h)].push_back(t.t);
        undirected.emplace_back(t.h, t.t);
    }

    KrackhardtScores scores;
    scores.connectedness = static_cast<double>(undirected_pair_count(n, undirected)) /
                           (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
    const SccResult scc = tarjan(adj);
    scores.hierarchy = hierarchy_value(reachable_pairs(scc, descendant_bits(adj, scc)));
    scores.efficiency = efficiency_value(n, edge_set.size());

    if (n > kMaxLubNodes)
        throw DataError("krackhardt: graph too large for pairwise ancestor coverage");
    std::vector<std::int32_t> relations = lub_relations;
    if (relations.empty())
        for (std::size_t r = 0; r < store.relation_count(); ++r)
            relations.push_back(static_cast<std::int32_t>(r));
    BitMatrix covered(n, n);
    for (std::int32_t r : relations) {
        Adjacency rel_adj(n);
        for (const Triple& t : triples)
            if (t.r == r && t.h != t.t) rel_adj[static_cast<std::size_t>(t.h)].push_back(t.t);
        const SccResult rel_scc = tarjan(rel_adj);
        const BitMatrix cover = cover_bits(rel_adj, rel_scc, descendant_bits(rel_adj, rel_scc));
        for (std::size_t v = 0; v < n; ++v) {
            const std::uint64_t* src =
                cover.row(static_cast<std::size_t>(rel_scc.comp[v]));
            std::uint64_t* dst = covered.row(v);
            for (std::size_t w = 0; w < covered.stride; ++w) dst[w] |= src[w];
        }
    }
    std::uint64_t lub_pairs = 0;
    for (std::size_t v = 0; v < n; ++v) lub_pairs += covered.popcount_row(v) - 1;
    scores.lubedness = static_cast<double>(lub_pairs) /
                       (static_cast<double>(n) * static_cast<double>(n - 1));

    scores.connectedness = std::clamp(scores.connectedness, 0.0, 1.0);
    scores.hierarchy = std::clamp(scores.hierarchy, 0.0, 1.0);
    scores.lubedness = std::clamp(scores.lubedness, 0.0, 1.0);
    return scores;
}

namespace {

// Q/P on the induced subgraph: Q counts ordered pairs sharing a reflexive
// common ancestor, P counts ordered pairs connected ignoring direction.
double lub_prime(const Adjacency& adj, std::uint64_t undirected_ordered_pairs) {
    if (undirected_ordered_pairs == 0) return 0.0;
    const SccResult scc = tarjan(adj);
    const BitMatrix cover = cover_bits(adj, scc, descendant_bits(adj, scc));
    std::uint64_t q = 0;
    for (std::size_t v = 0; v < adj.size(); ++v)
        q += cover.popcount_row(static_cast<std::size_t>(scc.comp[v])) - 1;
    return static_cast<double>(q) / static_cast<double>(undirected_ordered_pairs);
}

}  // namespace

HierarchicalnessScores relation_scores(const TripleStore& store, std::int32_t relation,
                                       double threshold, Split split) {
    if (relation < 0 || static_cast<std::size_t>(relation) >= store.relation_count())
        throw DataError("relation_scores: relation id out of range");
    // Induced subgraph over nodes incident to the relation, edges as given.
    std::vector<std::int32_t> node_of;
    std::vector<std::int32_t> local(store.entity_count(), -1);
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;
    std::size_t edge_count = 0;
    auto local_id = [&](std::int32_t v) {
        if (local[static_cast<std::size_t>(v)] < 0) {
            local[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(node_of.size());
            node_of.push_back(v);
        }
        return local[static_cast<std::size_t>(v)];
    };
    for (const Triple& t : store.split(split)) {
        if (t.r != relation) continue;
        ++edge_count;
        const std::int32_t h = local_id(t.h), tt = local_id(t.t);
        if (h != tt) edges.emplace_back(h, tt);
    }
    if (edge_count == 0) throw DataError("relation_scores: relation '" +
                                         store.relation_names[static_cast<std::size_t>(relation)] +
                                         "' has no edges in the split");

    const std::size_t n = node_of.size();
    Adjacency fwd(n), rev(n);
    std::vector<std::size_t> in_deg(n, 0), out_deg(n, 0);
    for (const auto& [h, t] : edges) {
        fwd[static_cast<std::size_t>(h)].push_back(t);
        rev[static_cast<std::size_t>(t)].push_back(h);
        ++out_deg[static_cast<std::size_t>(h)];
        ++in_deg[static_cast<std::size_t>(t)];
    }

    HierarchicalnessScores out;
    out.relation = store.relation_names[static_cast<std::size_t>(relation)];
    out.nodes = n;
    out.edges = edge_count;

    const SccResult scc = tarjan(fwd);
    out.asymmetry = hierarchy_value(reachable_pairs(scc, descendant_bits(fwd, scc)));

    const std::uint64_t p = 2 * undirected_pair_count(n, edges);
    const double lub_fwd = lub_prime(fwd, p);
    const double lub_rev = lub_prime(rev, p);

    std::size_t both = 0, any = 0;
    for (std::size_t v = 0; v < n; ++v) {
        if (in_deg[v] > 0 || out_deg[v] > 0) ++any;
        if (in_deg[v] > 0 && out_deg[v] > 0) ++both;
    }
    // Depthless relations have no node with both an in- and an out-edge; the
    // squared substitute keeps the punishment large but finite.
    double decay;
    if (both == 0) {
        const double s = static_cast<double>(any) + 1.0;
        decay = 1.0 / (s * s);
    } else {
        decay = static_cast<double>(both) / static_cast<double>(any);
    }
    const double log_decay = std::log10(decay);
    out.tree_likeness = (lub_fwd - lub_rev) / std::max(1.0, log_decay * log_decay);
    out.total = out.asymmetry + std::abs(out.tree_likeness);

    out.kind = RelationKind::kNone;
    if (out.total >= threshold && out.tree_likeness > 0.0) out.kind = RelationKind::kHyponym;
    if (out.total >= threshold && out.tree_likeness < 0.0) out.kind = RelationKind::kHypernym;
    return out;
}

std::vector<HierarchicalnessScores> classify_all(const TripleStore& store, double threshold,
                                                 Split split) {
    std::vector<HierarchicalnessScores> out;
    out.reserve(store.relation_count());
    for (std::size_t r = 0; r < store.relation_count(); ++r) {
        bool has_edge = false;
        for (const Triple& t : store.split(split))
            if (t.r == static_cast<std::int32_t>(r)) {
                has_edge = true;
                break;
            }
        if (!has_edge) {
            HierarchicalnessScores empty;
            empty.relation = store.relation_names[r];
            out.push_back(empty);
            continue;
        }
        out.push_back(relation_scores(store, static_cast<std::int32_t>(r), threshold, split));
    }
    return out;
}

}  // namespace conekg
