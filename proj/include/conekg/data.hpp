#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "conekg/errors.hpp"
#include "conekg/model.hpp"
#include "conekg/rng.hpp"

namespace conekg {

struct Triple {
    std::int32_t h = 0;
    std::int32_t r = 0;  // base relation id in [0, R)
    std::int32_t t = 0;
    friend bool operator==(const Triple&, const Triple&) = default;
};

enum class Split { kTrain = 0, kValid = 1, kTest = 2 };

// Dictionaries plus the three triple splits. Entity/relation ids are dense and
// cover every name seen in any split; valid/test triples are stored as parsed.
class TripleStore {
  public:
    std::vector<std::string> entity_names;
    std::vector<std::string> relation_names;      // base relations
    std::vector<RelationKind> relation_kinds;     // base relations
    std::vector<Triple> train, valid, test;
    std::size_t duplicates_dropped = 0;
    std::size_t unknown_skipped = 0;  // only nonzero when joining against fixed dictionaries

    std::size_t entity_count() const { return entity_names.size(); }
    std::size_t relation_count() const { return relation_names.size(); }
    const std::vector<Triple>& split(Split s) const {
        switch (s) {
            case Split::kTrain: return train;
            case Split::kValid: return valid;
            default: return test;
        }
    }
    std::vector<Triple>& split_mut(Split s) {
        return const_cast<std::vector<Triple>&>(static_cast<const TripleStore&>(*this).split(s));
    }

    std::optional<std::int32_t> entity_id(const std::string& name) const {
        auto it = entity_ids_.find(name);
        if (it == entity_ids_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<std::int32_t> relation_id(const std::string& name) const {
        auto it = relation_ids_.find(name);
        if (it == relation_ids_.end()) return std::nullopt;
        return it->second;
    }

    std::int32_t intern_entity(const std::string& name);
    std::int32_t intern_relation(const std::string& name);

    // Training positives with reciprocal mirrors appended: (h, r, t) plus
    // (t, r + R, h) for every train triple.
    std::vector<Triple> augmented_train() const;

  private:
    std::unordered_map<std::string, std::int32_t> entity_ids_;
    std::unordered_map<std::string, std::int32_t> relation_ids_;
};

// True-tail sets for filtered ranking, over all three splits and both
// directions: relation ids in [0, R) filter tail queries, [R, 2R) head
// queries (head prediction phrased as tail prediction under the reciprocal).
class FilterIndex {
  public:
    explicit FilterIndex(const TripleStore& store);
    // Sorted list of true tails for (h, r2); empty if none.
    const std::vector<std::int32_t>& tails(std::int32_t h, std::int32_t r2) const;
    bool is_true(std::int32_t h, std::int32_t r2, std::int32_t t) const;

  private:
    std::unordered_map<std::uint64_t, std::vector<std::int32_t>> index_;
    std::vector<std::int32_t> empty_;
};

// Relation metadata TSV: `name<TAB>kind`, kind in {hyponym, hypernym, none}.
std::vector<std::pair<std::string, RelationKind>> load_relation_meta(const std::string& path);
void write_relation_meta(const std::string& path,
                         const std::vector<std::string>& names,
                         const std::vector<RelationKind>& kinds);

// Parses `head<TAB>relation<TAB>tail` lines from one file into the store,
// interning new names. Malformed lines raise DataError with the line number;
// duplicate triples within the split are dropped with a count.
void load_triples_file(TripleStore& store, const std::string& path, Split split);

// Loads <dir>/{train,valid,test}.txt. Relation kinds come from `meta_path`
// when given, else <dir>/relation_kinds.tsv when present, else every kind is
// kNone (callers may run relation classification afterwards).
TripleStore load_dir(const std::string& dir, const std::optional<std::string>& meta_path = {});

void write_split_file(const TripleStore& store, const std::vector<Triple>& triples,
                      const std::string& path);
void write_store_dir(const TripleStore& store, const std::string& dir);

// Re-expresses `src` in fixed dictionaries (e.g. a checkpoint's); triples
// mentioning names absent from them are skipped and counted.
TripleStore align_to_dictionaries(const TripleStore& src,
                                  const std::vector<std::string>& entity_names,
                                  const std::vector<std::string>& relation_names,
                                  const std::vector<RelationKind>& relation_kinds);

// ---------------------------------------------------------------------------
// Transitive closures and ancestor-descendant pairs.

// Ordered reachable pairs of one relation with minimal path lengths, oriented
// parent -> descendant (hypernym edges are traversed in reverse). Self pairs
// are excluded; cycles simply never produce a (u, u) entry.
class Closure {
  public:
    // down[anc] = (descendant, gap) sorted by descendant id.
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> down;

    std::size_t pair_count() const;
    // 0 when anc == desc (reflexive), -1 when unreachable.
    std::int32_t gap(std::int32_t anc, std::int32_t desc) const;
    bool contains(std::int32_t anc, std::int32_t desc) const { return gap(anc, desc) > 0; }
};

Closure transitive_closure(const TripleStore& store, std::int32_t relation_id, bool train_only);

struct AdPair {
    std::int32_t ancestor = 0;
    std::int32_t descendant = 0;
    std::int32_t relation = 0;
    bool positive = false;
    bool inferred = false;
    std::int32_t gap = -1;  // >= 1 for positives; -1 means none (negatives)
};

// Samples `pairs` positives with the requested inferred fraction (stratified
// across hierarchical relations proportionally to closure size) plus one
// negative per positive: same ancestor, corrupted descendant, never a true
// pair under closure(all) and never the ancestor itself.
std::vector<AdPair> build_ad_testset(const TripleStore& store,
                                     const std::vector<Closure>& closure_train,
                                     const std::vector<Closure>& closure_all,
                                     double inferred_fraction, std::size_t pairs, Rng& rng);

void write_ad_pairs(const std::string& path, const TripleStore& store,
                    const std::vector<AdPair>& pairs);

// ---------------------------------------------------------------------------
// Synthetic fixture: shared entity set, `hierarchies` random-attachment trees
// (each a hyponym relation), plus a symmetric sibling relation drawn from the
// first tree. A fraction of tree edges is withheld from train and split
// evenly between valid and test, creating inferred ancestor-descendant pairs.

struct SynthSpec {
    std::size_t entities = 300;
    int hierarchies = 2;
    int depth = 4;      // max edges from root to leaf
    int branching = 4;  // max children per node
    std::size_t sibling_links = 100;
    double withheld_fraction = 0.1;

    void validate() const;
};

TripleStore synthetic_kg(const SynthSpec& spec, Rng& rng);

}  // namespace conekg
