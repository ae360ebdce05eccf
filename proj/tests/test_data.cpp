#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "conekg/data.hpp"
#include "conekg/errors.hpp"
#include "oracles.hpp"

using namespace conekg;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("conekg_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Complete binary tree on 15 nodes, edges oriented parent -> child.
TripleStore binary_tree_store(RelationKind kind) {
    TripleStore store;
    for (int v = 0; v < 15; ++v) store.intern_entity("n" + std::to_string(v));
    const std::int32_t r = store.intern_relation("edge");
    store.relation_kinds[static_cast<std::size_t>(r)] = kind;
    for (std::int32_t parent = 0; parent < 7; ++parent) {
        for (std::int32_t child : {2 * parent + 1, 2 * parent + 2}) {
            if (kind == RelationKind::kHypernym)
                store.train.push_back({child, r, parent});
            else
                store.train.push_back({parent, r, child});
        }
    }
    return store;
}

std::vector<std::pair<std::int32_t, std::int32_t>> binary_tree_edges() {
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;
    for (std::int32_t parent = 0; parent < 7; ++parent) {
        edges.emplace_back(parent, 2 * parent + 1);
        edges.emplace_back(parent, 2 * parent + 2);
    }
    return edges;
}

}  // namespace

TEST_CASE("store directory round trip preserves triples and kinds") {
    TripleStore store;
    store.intern_entity("cat");
    store.intern_entity("mammal");
    store.intern_entity("animal");
    const std::int32_t is_a = store.intern_relation("is_a");
    const std::int32_t likes = store.intern_relation("likes");
    store.relation_kinds[static_cast<std::size_t>(is_a)] = RelationKind::kHypernym;
    store.train = {{0, is_a, 1}, {1, is_a, 2}, {0, likes, 2}};
    store.valid = {{0, is_a, 2}};
    store.test = {{2, likes, 0}};

    const fs::path dir = fresh_dir("roundtrip");
    write_store_dir(store, dir.string());
    const TripleStore back = load_dir(dir.string());
    REQUIRE(back.entity_count() == 3);
    REQUIRE(back.relation_count() == 2);
    CHECK(back.relation_kinds[static_cast<std::size_t>(*back.relation_id("is_a"))] ==
          RelationKind::kHypernym);
    CHECK(back.relation_kinds[static_cast<std::size_t>(*back.relation_id("likes"))] ==
          RelationKind::kNone);
    auto same = [&](const std::vector<Triple>& a, const std::vector<Triple>& b) {
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(store.entity_names[static_cast<std::size_t>(a[i].h)] ==
                  back.entity_names[static_cast<std::size_t>(b[i].h)]);
            CHECK(store.relation_names[static_cast<std::size_t>(a[i].r)] ==
                  back.relation_names[static_cast<std::size_t>(b[i].r)]);
            CHECK(store.entity_names[static_cast<std::size_t>(a[i].t)] ==
                  back.entity_names[static_cast<std::size_t>(b[i].t)]);
        }
    };
    same(store.train, back.train);
    same(store.valid, back.valid);
    same(store.test, back.test);
}

TEST_CASE("triple files drop duplicates and reject malformed lines") {
    const fs::path dir = fresh_dir("parsing");
    {
        std::ofstream out(dir / "train.txt");
        out << "a\tr\tb\n"
            << "b\tr\tc\n"
            << "a\tr\tb\n";  // exact duplicate
    }
    TripleStore store;
    load_triples_file(store, (dir / "train.txt").string(), Split::kTrain);
    CHECK(store.train.size() == 2);
    CHECK(store.duplicates_dropped == 1);

    {
        std::ofstream out(dir / "bad.txt");
        out << "a\tr\tb\n"
            << "a\tr\n";  // two fields
    }
    TripleStore fresh;
    CHECK_THROWS_AS(load_triples_file(fresh, (dir / "bad.txt").string(), Split::kTrain),
                    DataError);
    {
        std::ofstream out(dir / "empty_field.txt");
        out << "a\t\tb\n";
    }
    TripleStore fresh2;
    CHECK_THROWS_AS(load_triples_file(fresh2, (dir / "empty_field.txt").string(), Split::kTrain),
                    DataError);
    CHECK_THROWS_AS(load_dir((dir / "nonexistent").string()), DataError);
}

TEST_CASE("relation metadata file round trips and rejects unknown kinds") {
    const fs::path dir = fresh_dir("meta");
    write_relation_meta((dir / "kinds.tsv").string(), {"up", "down", "flat"},
                        {RelationKind::kHypernym, RelationKind::kHyponym, RelationKind::kNone});
    const auto meta = load_relation_meta((dir / "kinds.tsv").string());
    REQUIRE(meta.size() == 3);
    CHECK(meta[0] == std::pair<std::string, RelationKind>{"up", RelationKind::kHypernym});
    CHECK(meta[1].second == RelationKind::kHyponym);
    CHECK(meta[2].second == RelationKind::kNone);
    {
        std::ofstream out(dir / "bad.tsv");
        out << "up\tsideways\n";
    }
    CHECK_THROWS_AS(load_relation_meta((dir / "bad.tsv").string()), DataError);
}

TEST_CASE("transitive closure of a binary tree matches shortest paths") {
    const TripleStore store = binary_tree_store(RelationKind::kHyponym);
    const Closure closure = transitive_closure(store, 0, true);
    CHECK(closure.pair_count() == 34);
    const auto dist = oracles::shortest_paths(15, binary_tree_edges());
    for (std::int32_t u = 0; u < 15; ++u) {
        for (std::int32_t v = 0; v < 15; ++v) {
            const int expect = dist[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
            if (u == v) {
                CHECK(closure.gap(u, v) == 0);
                CHECK_FALSE(closure.contains(u, v));
            } else if (expect < oracles::kUnreachable) {
                CHECK(closure.gap(u, v) == expect);
                CHECK(closure.contains(u, v));
            } else {
                CHECK(closure.gap(u, v) == -1);
                CHECK_FALSE(closure.contains(u, v));
            }
        }
    }
}

TEST_CASE("hypernym edges close to the same ancestor-descendant pairs") {
    const TripleStore down = binary_tree_store(RelationKind::kHyponym);
    const TripleStore up = binary_tree_store(RelationKind::kHypernym);
    const Closure a = transitive_closure(down, 0, true);
    const Closure b = transitive_closure(up, 0, true);
    REQUIRE(a.pair_count() == b.pair_count());
    for (std::int32_t u = 0; u < 15; ++u)
        for (std::int32_t v = 0; v < 15; ++v) CHECK(a.gap(u, v) == b.gap(u, v));
    // Closing a non-hierarchical relation is caller misuse, not bad data.
    TripleStore flat = binary_tree_store(RelationKind::kNone);
    CHECK_THROWS_AS(transitive_closure(flat, 0, true), std::logic_error);
}

TEST_CASE("closure respects the train-only switch") {
    TripleStore store = binary_tree_store(RelationKind::kHyponym);
    // Withhold the edge 0 -> 2 into the test split: 2's subtree stays
    // reachable from 0 only when the full graph is closed.
    auto& train = store.train;
    const Triple held{0, 0, 2};
    train.erase(std::find(train.begin(), train.end(), held));
    store.test.push_back(held);
    const Closure train_only = transitive_closure(store, 0, true);
    const Closure all = transitive_closure(store, 0, false);
    CHECK_FALSE(train_only.contains(0, 2));
    CHECK_FALSE(train_only.contains(0, 5));
    CHECK(all.contains(0, 2));
    CHECK(all.gap(0, 5) == 2);
    CHECK(all.pair_count() == 34);
    CHECK(train_only.pair_count() == 34 - 7);  // 2's subtree of 7 lost from 0
}

TEST_CASE("augmented training set appends reciprocal mirrors") {
    TripleStore store;
    store.intern_entity("a");
    store.intern_entity("b");
    store.intern_entity("c");
    store.intern_relation("r0");
    store.intern_relation("r1");
    store.train = {{0, 0, 1}, {1, 1, 2}};
    const auto aug = store.augmented_train();
    REQUIRE(aug.size() == 4);
    CHECK(aug[0] == Triple{0, 0, 1});
    CHECK(aug[1] == Triple{1, 1, 2});
    CHECK(aug[2] == Triple{1, 2, 0});
    CHECK(aug[3] == Triple{2, 3, 1});
}

TEST_CASE("filter index answers both query directions across splits") {
    TripleStore store;
    for (const char* n : {"a", "b", "c", "d"}) store.intern_entity(n);
    store.intern_relation("r");
    store.train = {{0, 0, 1}, {0, 0, 2}};
    store.valid = {{0, 0, 3}};
    store.test = {{1, 0, 2}};
    const FilterIndex filter(store);
    CHECK(filter.tails(0, 0) == std::vector<std::int32_t>{1, 2, 3});
    CHECK(filter.tails(2, 1) == std::vector<std::int32_t>{0, 1});  // heads via reciprocal
    CHECK(filter.is_true(0, 0, 3));
    CHECK_FALSE(filter.is_true(0, 0, 0));
    CHECK(filter.tails(3, 0).empty());
}

TEST_CASE("dictionary alignment skips names the model never saw") {
    TripleStore src;
    for (const char* n : {"a", "b", "c"}) src.intern_entity(n);
    src.intern_relation("keep");
    src.intern_relation("drop");
    src.train = {{0, 0, 1}, {0, 1, 1}, {2, 0, 0}};
    src.test = {{1, 0, 2}};
    const TripleStore out = align_to_dictionaries(src, {"b", "a"}, {"keep"},
                                                  {RelationKind::kHyponym});
    CHECK(out.entity_count() == 2);
    CHECK(out.relation_count() == 1);
    CHECK(out.relation_kinds[0] == RelationKind::kHyponym);
    REQUIRE(out.train.size() == 1);  // the "drop" triple and both "c" triples vanish
    CHECK(out.train[0] == Triple{1, 0, 0});
    CHECK(out.test.empty());
    CHECK(out.unknown_skipped == 3);
}

TEST_CASE("synthetic graphs are spanning trees plus symmetric siblings") {
    SynthSpec spec;
    spec.entities = 120;
    spec.hierarchies = 2;
    spec.depth = 5;
    spec.branching = 4;
    spec.sibling_links = 20;
    spec.withheld_fraction = 0.1;
    Rng rng(7);
    const TripleStore store = synthetic_kg(spec, rng);
    REQUIRE(store.entity_count() == 120);
    REQUIRE(store.relation_count() == 3);
    CHECK(store.relation_names[0] == "hypo_a");
    CHECK(store.relation_names[1] == "hypo_b");
    CHECK(store.relation_names[2] == "sibling");
    CHECK(store.relation_kinds[0] == RelationKind::kHyponym);
    CHECK(store.relation_kinds[1] == RelationKind::kHyponym);
    CHECK(store.relation_kinds[2] == RelationKind::kNone);

    for (std::int32_t r : {0, 1}) {
        std::vector<int> parents(120, 0);
        std::size_t edges = 0;
        std::size_t withheld = 0;
        for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
            for (const Triple& t : store.split(s)) {
                if (t.r != r) continue;
                ++edges;
                if (s != Split::kTrain) ++withheld;
                ++parents[static_cast<std::size_t>(t.t)];
            }
        }
        CHECK(edges == 119);  // spanning tree over the shared entity set
        CHECK(withheld > 0);
        int roots = 0;
        for (int p : parents) {
            CHECK(p <= 1);
            if (p == 0) ++roots;
        }
        CHECK(roots == 1);
        const Closure all = transitive_closure(store, r, false);
        std::size_t reach_sum = 0;
        for (const auto& row : all.down) reach_sum += row.size();
        CHECK(reach_sum >= 119);
        // Exactly one node reaches everything.
        int full = 0;
        for (const auto& row : all.down)
            if (row.size() == 119) ++full;
        CHECK(full == 1);
    }

    std::vector<Triple> sib;
    for (const Triple& t : store.train)
        if (t.r == 2) sib.push_back(t);
    CHECK(sib.size() == 40);  // both directions of 20 links
    for (const Triple& t : sib) {
        CHECK(std::find(sib.begin(), sib.end(), Triple{t.t, t.r, t.h}) != sib.end());
        CHECK(t.h != t.t);
    }
    for (Split s : {Split::kValid, Split::kTest})
        for (const Triple& t : store.split(s)) CHECK(t.r != 2);
}

TEST_CASE("synthetic spec validation and capacity checks") {
    SynthSpec spec;
    spec.hierarchies = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = SynthSpec{};
    spec.entities = 300;
    spec.depth = 1;
    spec.branching = 1;
    Rng rng(7);
    CHECK_THROWS_AS(synthetic_kg(spec, rng), DataError);
}

TEST_CASE("ancestor-descendant sampling hits the inferred fraction exactly") {
    SynthSpec spec;
    spec.entities = 150;
    spec.withheld_fraction = 0.15;
    Rng gen(7);
    const TripleStore store = synthetic_kg(spec, gen);
    std::vector<Closure> train_cl, all_cl;
    for (std::size_t r = 0; r < store.relation_count(); ++r) {
        if (is_hierarchical(store.relation_kinds[r])) {
            train_cl.push_back(transitive_closure(store, static_cast<std::int32_t>(r), true));
            all_cl.push_back(transitive_closure(store, static_cast<std::int32_t>(r), false));
        } else {
            train_cl.emplace_back();
            all_cl.emplace_back();
        }
    }

    Rng rng(11);
    const std::size_t pairs = 150;
    const auto out = build_ad_testset(store, train_cl, all_cl, 0.4, pairs, rng);
    REQUIRE(out.size() == 2 * pairs);
    std::size_t inferred = 0;
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const AdPair& pos = out[i];
        const AdPair& neg = out[i + 1];
        const auto rel = static_cast<std::size_t>(pos.relation);
        CHECK(pos.positive);
        CHECK(all_cl[rel].contains(pos.ancestor, pos.descendant));
        CHECK(pos.gap == all_cl[rel].gap(pos.ancestor, pos.descendant));
        CHECK(pos.inferred == !train_cl[rel].contains(pos.ancestor, pos.descendant));
        if (pos.inferred) ++inferred;

        CHECK_FALSE(neg.positive);
        CHECK(neg.gap == -1);
        CHECK(neg.relation == pos.relation);
        CHECK(neg.inferred == pos.inferred);
        CHECK(neg.ancestor != neg.descendant);
        CHECK_FALSE(all_cl[rel].contains(neg.ancestor, neg.descendant));
        const bool kept_anc = neg.ancestor == pos.ancestor;
        const bool kept_desc = neg.descendant == pos.descendant;
        CHECK((kept_anc || kept_desc));
    }
    CHECK(inferred == 60);

    Rng rng2(11);
    for (const AdPair& p : build_ad_testset(store, train_cl, all_cl, 0.0, 50, rng2))
        CHECK_FALSE(p.inferred);
    Rng rng3(11);
    for (const AdPair& p : build_ad_testset(store, train_cl, all_cl, 1.0, 50, rng3))
        CHECK(p.inferred);
    Rng rng4(11);
    CHECK_THROWS_AS(build_ad_testset(store, train_cl, all_cl, 1.5, 50, rng4),
                    std::invalid_argument);
}

TEST_CASE("ancestor-descendant pair files carry names, labels, and gaps") {
    TripleStore store = binary_tree_store(RelationKind::kHyponym);
    std::vector<Closure> cl{transitive_closure(store, 0, true)};
    Rng rng(3);
    const auto pairs = build_ad_testset(store, cl, cl, 0.0, 10, rng);
    const fs::path dir = fresh_dir("adpairs");
    write_ad_pairs((dir / "pairs.tsv").string(), store, pairs);
    std::ifstream in(dir / "pairs.tsv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "ancestor\tdescendant\trelation\tlabel\tinferred\tgap");
    std::size_t rows = 0, positives = 0, infs = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (line.find("\tpositive\t") != std::string::npos) ++positives;
        if (line.size() >= 3 && line.substr(line.size() - 3) == "inf") ++infs;
    }
    CHECK(rows == 20);
    CHECK(positives == 10);
    CHECK(infs == 10);  // negatives have no gap
}
