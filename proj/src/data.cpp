#include "conekg/data.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_set>

namespace conekg {

namespace {

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t k = static_cast<std::uint32_t>(t.h);
        k = k * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(t.r);
        k = k * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(t.t);
        return static_cast<std::size_t>(k ^ (k >> 32));
    }
};

std::uint64_t pair_key(std::int32_t a, std::int32_t b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

// Splits a TSV line into exactly `n` fields; returns false on any other shape.
bool split_tsv(const std::string& line, int n, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    if (static_cast<int>(out.size()) != n) return false;
    for (const auto& f : out)
        if (f.empty()) return false;
    return true;
}

}  // namespace

std::int32_t TripleStore::intern_entity(const std::string& name) {
    auto [it, inserted] = entity_ids_.try_emplace(name, static_cast<std::int32_t>(entity_names.size()));
    if (inserted) entity_names.push_back(name);
    return it->second;
}

std::int32_t TripleStore::intern_relation(const std::string& name) {
    auto [it, inserted] =
        relation_ids_.try_emplace(name, static_cast<std::int32_t>(relation_names.size()));
    if (inserted) {
        relation_names.push_back(name);
        relation_kinds.push_back(RelationKind::kNone);
    }
    return it->second;
}

std::vector<Triple> TripleStore::augmented_train() const {
    const auto r_count = static_cast<std::int32_t>(relation_count());
    std::vector<Triple> out;
    out.reserve(2 * train.size());
    for (const Triple& t : train) out.push_back(t);
    for (const Triple& t : train) out.push_back({t.t, t.r + r_count, t.h});
    return out;
}

FilterIndex::FilterIndex(const TripleStore& store) {
    const auto r_count = static_cast<std::int32_t>(store.relation_count());
    for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
        for (const Triple& t : store.split(s)) {
            index_[pair_key(t.h, t.r)].push_back(t.t);
            index_[pair_key(t.t, t.r + r_count)].push_back(t.h);
        }
    }
    for (auto& [key, tails] : index_) {
        std::sort(tails.begin(), tails.end());
        tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
    }
}

const std::vector<std::int32_t>& FilterIndex::tails(std::int32_t h, std::int32_t r2) const {
    auto it = index_.find(pair_key(h, r2));
    return it == index_.end() ? empty_ : it->second;
}

bool FilterIndex::is_true(std::int32_t h, std::int32_t r2, std::int32_t t) const {
    const auto& v = tails(h, r2);
    return std::binary_search(v.begin(), v.end(), t);
}

std::vector<std::pair<std::string, RelationKind>> load_relation_meta(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open relation metadata: " + path);
    std::vector<std::pair<std::string, RelationKind>> out;
    std::string line;
    std::vector<std::string> fields;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (!split_tsv(line, 2, fields))
            throw DataError(path + ":" + std::to_string(lineno) + ": expected name<TAB>kind");
        try {
            out.emplace_back(fields[0], relation_kind_from_string(fields[1]));
        } catch (const std::invalid_argument& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_relation_meta(const std::string& path, const std::vector<std::string>& names,
                         const std::vector<RelationKind>& kinds) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write relation metadata: " + path);
    for (std::size_t i = 0; i < names.size(); ++i)
        out << names[i] << '\t' << to_string(kinds[i]) << '\n';
}

void load_triples_file(TripleStore& store, const std::string& path, Split split) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open triples file: " + path);
    auto& triples = store.split_mut(split);
    std::unordered_set<Triple, TripleHash> seen;
    seen.reserve(triples.size() * 2 + 64);
    for (const Triple& t : triples) seen.insert(t);
    std::string line;
    std::vector<std::string> fields;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (!split_tsv(line, 3, fields))
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected head<TAB>relation<TAB>tail");
        const Triple t{store.intern_entity(fields[0]), store.intern_relation(fields[1]),
                       store.intern_entity(fields[2])};
        if (!seen.insert(t).second) {
            ++store.duplicates_dropped;
            continue;
        }
        triples.push_back(t);
    }
}

TripleStore load_dir(const std::string& dir, const std::optional<std::string>& meta_path) {
    namespace fs = std::filesystem;
    TripleStore store;
    const fs::path base(dir);
    const fs::path train_path = base / "train.txt";
    if (!fs::exists(train_path)) throw DataError("missing train split: " + train_path.string());
    load_triples_file(store, train_path.string(), Split::kTrain);
    if (fs::exists(base / "valid.txt"))
        load_triples_file(store, (base / "valid.txt").string(), Split::kValid);
    if (fs::exists(base / "test.txt"))
        load_triples_file(store, (base / "test.txt").string(), Split::kTest);

    std::optional<std::string> meta = meta_path;
    if (!meta && fs::exists(base / "relation_kinds.tsv"))
        meta = (base / "relation_kinds.tsv").string();
    if (meta) {
        for (const auto& [name, kind] : load_relation_meta(*meta)) {
            if (auto id = store.relation_id(name))
                store.relation_kinds[static_cast<std::size_t>(*id)] = kind;
            else
                std::cerr << "warning: relation metadata names unknown relation '" << name
                          << "'\n";
        }
    }
    return store;
}

void write_split_file(const TripleStore& store, const std::vector<Triple>& triples,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write triples file: " + path);
    for (const Triple& t : triples)
        out << store.entity_names[static_cast<std::size_t>(t.h)] << '\t'
            << store.relation_names[static_cast<std::size_t>(t.r)] << '\t'
            << store.entity_names[static_cast<std::size_t>(t.t)] << '\n';
}

void write_store_dir(const TripleStore& store, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_split_file(store, store.train, (fs::path(dir) / "train.txt").string());
    write_split_file(store, store.valid, (fs::path(dir) / "valid.txt").string());
    write_split_file(store, store.test, (fs::path(dir) / "test.txt").string());
    write_relation_meta((fs::path(dir) / "relation_kinds.tsv").string(), store.relation_names,
                        store.relation_kinds);
}

TripleStore align_to_dictionaries(const TripleStore& src,
                                  const std::vector<std::string>& entity_names,
                                  const std::vector<std::string>& relation_names,
                                  const std::vector<RelationKind>& relation_kinds) {
    TripleStore out;
    for (const auto& name : entity_names) out.intern_entity(name);
    for (const auto& name : relation_names) out.intern_relation(name);
    out.relation_kinds = relation_kinds;
    auto remap = [&](const std::vector<Triple>& triples, std::vector<Triple>& dst) {
        for (const Triple& t : triples) {
            const auto h = out.entity_id(src.entity_names[static_cast<std::size_t>(t.h)]);
            const auto r = out.relation_id(src.relation_names[static_cast<std::size_t>(t.r)]);
            const auto tt = out.entity_id(src.entity_names[static_cast<std::size_t>(t.t)]);
            if (!h || !r || !tt) {
                ++out.unknown_skipped;
                continue;
            }
            dst.push_back({*h, *r, *tt});
        }
    };
    remap(src.train, out.train);
    remap(src.valid, out.valid);
    remap(src.test, out.test);
    if (out.unknown_skipped > 0)
        std::cerr << "warning: skipped " << out.unknown_skipped
                  << " triples naming entities/relations absent from the model dictionaries\n";
    return out;
}

// ---------------------------------------------------------------------------

std::size_t Closure::pair_count() const {
    std::size_t n = 0;
    for (const auto& row : down) n += row.size();
    return n;
}

std::int32_t Closure::gap(std::int32_t anc, std::int32_t desc) const {
    if (anc == desc) return 0;
    if (anc < 0 || static_cast<std::size_t>(anc) >= down.size()) return -1;
    const auto& row = down[static_cast<std::size_t>(anc)];
    auto it = std::lower_bound(row.begin(), row.end(), desc,
                               [](const auto& p, std::int32_t d) { return p.first < d; });
    if (it == row.end() || it->first != desc) return -1;
    return it->second;
}

Closure transitive_closure(const TripleStore& store, std::int32_t relation_id, bool train_only) {
    const RelationKind kind = store.relation_kinds[static_cast<std::size_t>(relation_id)];
    if (!is_hierarchical(kind))
        throw std::logic_error("transitive_closure: relation '" +
                               store.relation_names[static_cast<std::size_t>(relation_id)] +
                               "' is not hierarchical");
    const std::size_t n = store.entity_count();
    std::vector<std::vector<std::int32_t>> children(n);
    auto add_edges = [&](const std::vector<Triple>& triples) {
        for (const Triple& t : triples) {
            if (t.r != relation_id || t.h == t.t) continue;
            // Hyponym edges already run parent -> child; hypernym edges are
            // child -> parent and get reversed here.
            const std::int32_t parent = kind == RelationKind::kHypernym ? t.t : t.h;
            const std::int32_t child = kind == RelationKind::kHypernym ? t.h : t.t;
            children[static_cast<std::size_t>(parent)].push_back(child);
        }
    };
    add_edges(store.train);
    if (!train_only) {
        add_edges(store.valid);
        add_edges(store.test);
    }
    for (auto& row : children) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }

    Closure closure;
    closure.down.resize(n);
    std::vector<std::int32_t> dist(n, -1);
    std::vector<std::int32_t> touched;
    std::deque<std::int32_t> queue;
    for (std::size_t src = 0; src < n; ++src) {
        if (children[src].empty()) continue;
        touched.clear();
        queue.clear();
        dist[src] = 0;
        touched.push_back(static_cast<std::int32_t>(src));
        queue.push_back(static_cast<std::int32_t>(src));
        while (!queue.empty()) {
            const std::int32_t u = queue.front();
            queue.pop_front();
            for (std::int32_t v : children[static_cast<std::size_t>(u)]) {
                if (dist[static_cast<std::size_t>(v)] >= 0) continue;
                dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                touched.push_back(v);
                queue.push_back(v);
            }
        }
        auto& row = closure.down[src];
        row.reserve(touched.size() - 1);
        for (std::int32_t v : touched) {
            if (static_cast<std::size_t>(v) != src)
                row.emplace_back(v, dist[static_cast<std::size_t>(v)]);
        }
        std::sort(row.begin(), row.end());
        for (std::int32_t v : touched) dist[static_cast<std::size_t>(v)] = -1;
    }
    return closure;
}

// ---------------------------------------------------------------------------

namespace {

struct PoolEntry {
    std::int32_t anc, desc, gap, rel;
};

// Uniform draw from the union of per-relation pools is proportional to pool
// sizes; partial Fisher-Yates gives without-replacement sampling.
std::vector<PoolEntry> draw(std::vector<PoolEntry>& pool, std::size_t want, Rng& rng,
                            const char* what) {
    std::vector<PoolEntry> out;
    if (want == 0) return out;
    if (pool.empty())
        throw DataError(std::string("ancestor-descendant sampling: need ") + std::to_string(want) +
                        " " + what + " pairs but the pool is empty");
    out.reserve(want);
    if (pool.size() >= want) {
        for (std::size_t i = 0; i < want; ++i) {
            const std::size_t j = i + rng.uniform_int(pool.size() - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
    } else {
        std::cerr << "warning: only " << pool.size() << " " << what << " pairs available for "
                  << want << " requested; sampling with replacement\n";
        for (std::size_t i = 0; i < want; ++i) out.push_back(pool[rng.uniform_int(pool.size())]);
    }
    return out;
}

}  // namespace

std::vector<AdPair> build_ad_testset(const TripleStore& store,
                                     const std::vector<Closure>& closure_train,
                                     const std::vector<Closure>& closure_all,
                                     double inferred_fraction, std::size_t pairs, Rng& rng) {
    if (inferred_fraction < 0.0 || inferred_fraction > 1.0)
        throw std::invalid_argument("inferred fraction must lie in [0, 1]");
    std::vector<PoolEntry> train_pool, inferred_pool;
    for (std::size_t r = 0; r < store.relation_count(); ++r) {
        if (!is_hierarchical(store.relation_kinds[r])) continue;
        const auto rel = static_cast<std::int32_t>(r);
        for (std::size_t anc = 0; anc < closure_train[r].down.size(); ++anc)
            for (const auto& [desc, gap] : closure_train[r].down[anc])
                train_pool.push_back({static_cast<std::int32_t>(anc), desc, gap, rel});
        for (std::size_t anc = 0; anc < closure_all[r].down.size(); ++anc)
            for (const auto& [desc, gap] : closure_all[r].down[anc])
                if (!closure_train[r].contains(static_cast<std::int32_t>(anc), desc))
                    inferred_pool.push_back({static_cast<std::int32_t>(anc), desc, gap, rel});
    }
    const auto want_inferred = static_cast<std::size_t>(
        std::llround(inferred_fraction * static_cast<double>(pairs)));
    const std::size_t want_train = pairs - want_inferred;

    std::vector<AdPair> out;
    out.reserve(2 * pairs);
    const auto n_entities = store.entity_count();
    if (n_entities < 2) throw DataError("ancestor-descendant sampling needs at least 2 entities");
    auto emit = [&](const PoolEntry& p, bool inferred) {
        out.push_back({p.anc, p.desc, p.rel, true, inferred, p.gap});
        const auto& closure = closure_all[static_cast<std::size_t>(p.rel)];
        // Corrupt the descendant, keeping the ancestor; rejection sampling
        // first, exhaustive scan second.
        auto valid_desc = [&](std::int32_t x) { return x != p.anc && !closure.contains(p.anc, x); };
        auto valid_anc = [&](std::int32_t x) { return x != p.desc && !closure.contains(x, p.desc); };
        std::int32_t corrupted = -1;
        bool descendant_side = true;
        for (int attempt = 0; attempt < 1000 && corrupted < 0; ++attempt) {
            const auto x = static_cast<std::int32_t>(rng.uniform_int(n_entities));
            if (valid_desc(x)) corrupted = x;
        }
        for (std::size_t x = 0; x < n_entities && corrupted < 0; ++x)
            if (valid_desc(static_cast<std::int32_t>(x))) corrupted = static_cast<std::int32_t>(x);
        if (corrupted < 0) {
            // Every other entity descends from this ancestor (e.g. the root of
            // a spanning tree); corrupt the ancestor side instead.
            descendant_side = false;
            for (int attempt = 0; attempt < 1000 && corrupted < 0; ++attempt) {
                const auto x = static_cast<std::int32_t>(rng.uniform_int(n_entities));
                if (valid_anc(x)) corrupted = x;
            }
            for (std::size_t x = 0; x < n_entities && corrupted < 0; ++x)
                if (valid_anc(static_cast<std::int32_t>(x)))
                    corrupted = static_cast<std::int32_t>(x);
        }
        if (corrupted < 0)
            throw DataError("ancestor-descendant sampling: no valid corrupted pair exists");
        if (descendant_side)
            out.push_back({p.anc, corrupted, p.rel, false, inferred, -1});
        else
            out.push_back({corrupted, p.desc, p.rel, false, inferred, -1});
    };
    for (const PoolEntry& p : draw(train_pool, want_train, rng, "train-closure"))
        emit(p, false);
    for (const PoolEntry& p : draw(inferred_pool, want_inferred, rng, "inferred"))
        emit(p, true);
    return out;
}

void write_ad_pairs(const std::string& path, const TripleStore& store,
                    const std::vector<AdPair>& pairs) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write ancestor-descendant pairs: " + path);
    out << "ancestor\tdescendant\trelation\tlabel\tinferred\tgap\n";
    for (const AdPair& p : pairs) {
        out << store.entity_names[static_cast<std::size_t>(p.ancestor)] << '\t'
            << store.entity_names[static_cast<std::size_t>(p.descendant)] << '\t'
            << store.relation_names[static_cast<std::size_t>(p.relation)] << '\t'
            << (p.positive ? "positive" : "negative") << '\t' << (p.inferred ? 1 : 0) << '\t';
        if (p.gap >= 0)
            out << p.gap << '\n';
        else
            out << "inf\n";
    }
}

// ---------------------------------------------------------------------------

void SynthSpec::validate() const {
    if (entities < 1) throw std::invalid_argument("synthetic spec: need at least one entity");
    if (hierarchies < 1) throw std::invalid_argument("synthetic spec: need at least one hierarchy");
    if (depth < 1 || branching < 1)
        throw std::invalid_argument("synthetic spec: depth and branching must be >= 1");
    if (withheld_fraction < 0.0 || withheld_fraction >= 1.0)
        throw std::invalid_argument("synthetic spec: withheld fraction must lie in [0, 1)");
    // Tree capacity: 1 + b + b^2 + ... + b^depth nodes.
    double capacity = 1.0, power = 1.0;
    for (int l = 0; l < depth; ++l) {
        power *= branching;
        capacity += power;
        if (capacity >= static_cast<double>(entities)) return;
    }
    if (capacity < static_cast<double>(entities))
        throw DataError("synthetic spec infeasible: a depth-" + std::to_string(depth) +
                        " branching-" + std::to_string(branching) + " tree holds at most " +
                        std::to_string(static_cast<std::size_t>(capacity)) + " entities");
}

TripleStore synthetic_kg(const SynthSpec& spec, Rng& rng) {
    spec.validate();
    TripleStore store;
    int width = 4;
    for (std::size_t v = spec.entities; v >= 10000; v /= 10) ++width;
    for (std::size_t e = 0; e < spec.entities; ++e) {
        std::string name = std::to_string(e);
        name.insert(0, static_cast<std::size_t>(width) - std::min<std::size_t>(width, name.size()),
                    '0');
        store.intern_entity("n" + name);
    }

    std::vector<std::pair<std::int32_t, std::int32_t>> first_tree_edges;
    for (int hier = 0; hier < spec.hierarchies; ++hier) {
        const std::string rel_name = "hypo_" + std::string(1, static_cast<char>('a' + hier));
        const std::int32_t rel = store.intern_relation(rel_name);
        store.relation_kinds[static_cast<std::size_t>(rel)] = RelationKind::kHyponym;

        std::vector<std::int32_t> order(spec.entities);
        for (std::size_t i = 0; i < spec.entities; ++i) order[i] = static_cast<std::int32_t>(i);
        rng.shuffle(order);
        std::vector<int> depth_of(spec.entities, 0), child_count(spec.entities, 0);
        std::vector<std::int32_t> open{order[0]};
        std::vector<std::pair<std::int32_t, std::int32_t>> edges;
        for (std::size_t i = 1; i < spec.entities; ++i) {
            const std::size_t slot = rng.uniform_int(open.size());
            const std::int32_t parent = open[slot];
            const std::int32_t child = order[i];
            edges.emplace_back(parent, child);
            depth_of[static_cast<std::size_t>(child)] =
                depth_of[static_cast<std::size_t>(parent)] + 1;
            if (++child_count[static_cast<std::size_t>(parent)] >= spec.branching) {
                open[slot] = open.back();
                open.pop_back();
            }
            if (depth_of[static_cast<std::size_t>(child)] < spec.depth) open.push_back(child);
        }
        if (hier == 0) first_tree_edges = edges;

        rng.shuffle(edges);
        const auto withheld =
            static_cast<std::size_t>(spec.withheld_fraction * static_cast<double>(edges.size()));
        for (std::size_t i = 0; i < edges.size(); ++i) {
            const Triple t{edges[i].first, rel, edges[i].second};
            if (i < withheld)
                (i % 2 == 0 ? store.valid : store.test).push_back(t);
            else
                store.train.push_back(t);
        }
    }

    if (spec.sibling_links > 0) {
        const std::int32_t rel = store.intern_relation("sibling");
        std::vector<std::vector<std::int32_t>> kids(spec.entities);
        for (const auto& [parent, child] : first_tree_edges)
            kids[static_cast<std::size_t>(parent)].push_back(child);
        std::vector<std::pair<std::int32_t, std::int32_t>> sibling_pairs;
        for (const auto& group : kids)
            for (std::size_t i = 0; i < group.size(); ++i)
                for (std::size_t j = i + 1; j < group.size(); ++j)
                    sibling_pairs.emplace_back(group[i], group[j]);
        rng.shuffle(sibling_pairs);
        if (sibling_pairs.size() < spec.sibling_links)
            std::cerr << "warning: only " << sibling_pairs.size() << " sibling pairs exist; "
                      << spec.sibling_links << " requested\n";
        const std::size_t take = std::min(sibling_pairs.size(), spec.sibling_links);
        for (std::size_t i = 0; i < take; ++i) {
            store.train.push_back({sibling_pairs[i].first, rel, sibling_pairs[i].second});
            store.train.push_back({sibling_pairs[i].second, rel, sibling_pairs[i].first});
        }
    }
    return store;
}

}  // namespace conekg
