#include "doctest.h"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "conekg/errors.hpp"
#include "conekg/training.hpp"

using namespace conekg;

namespace {

TripleStore small_synth(std::size_t entities = 150) {
    SynthSpec spec;
    spec.entities = entities;
    spec.sibling_links = 30;
    Rng rng(7);
    return synthetic_kg(spec, rng);
}

double mean_train_violation(const Model& m, const TripleStore& store) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const Triple& t : store.train) {
        if (!angle_active(m, t.r)) continue;
        acc += m.angle_violation(static_cast<std::size_t>(t.h), static_cast<std::size_t>(t.r),
                                 static_cast<std::size_t>(t.t));
        ++n;
    }
    return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

}  // namespace

TEST_CASE("subspace allocation draws d_s planes per hierarchical relation") {
    const std::vector<RelationKind> kinds{RelationKind::kHyponym, RelationKind::kNone,
                                          RelationKind::kHypernym};
    const int d = 10, d_s = 4;
    const auto masks = allocate_subspaces(kinds, d, d_s, 42);
    REQUIRE(masks.size() == 6 * 10);
    auto popcount = [&](std::size_t r) {
        int c = 0;
        for (int i = 0; i < d; ++i) c += masks[r * 10 + static_cast<std::size_t>(i)];
        return c;
    };
    CHECK(popcount(0) == 4);
    CHECK(popcount(1) == 0);
    CHECK(popcount(2) == 4);
    for (std::size_t base = 0; base < 3; ++base)
        for (int i = 0; i < d; ++i)
            CHECK(masks[base * 10 + static_cast<std::size_t>(i)] ==
                  masks[(3 + base) * 10 + static_cast<std::size_t>(i)]);
    for (std::uint8_t b : masks) CHECK(b <= 1);

    for (std::uint8_t b : allocate_subspaces(kinds, d, 0, 42)) CHECK(b == 0);
    CHECK_THROWS_AS(allocate_subspaces(kinds, d, 11, 42), std::invalid_argument);
    CHECK_THROWS_AS(allocate_subspaces(kinds, d, -1, 42), std::invalid_argument);
}

TEST_CASE("orthogonal allocation tiles disjoint blocks until capacity") {
    std::vector<RelationKind> kinds;
    for (int r = 0; r < 7; ++r) {
        kinds.push_back(RelationKind::kHyponym);
        kinds.push_back(RelationKind::kNone);  // never consumes a block
    }
    const int d = 70, d_s = 10;
    const auto masks = allocate_subspaces(kinds, d, d_s, 1, /*orthogonal=*/true);
    std::vector<int> owners(static_cast<std::size_t>(d), 0);
    for (std::size_t r = 0; r < kinds.size(); ++r)
        for (int i = 0; i < d; ++i)
            owners[static_cast<std::size_t>(i)] +=
                masks[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
    for (int ownership : owners) CHECK(ownership == 1);  // 7 x 10 planes, no overlap

    kinds.push_back(RelationKind::kHyponym);  // 8 x 10 > 70
    CHECK_THROWS_AS(allocate_subspaces(kinds, d, d_s, 1, true), std::invalid_argument);
}

TEST_CASE("adam follows the reference update rule") {
    Rng rng(55);
    std::vector<double> params{0.5, -1.2, 3.0};
    std::vector<double> ref = params;
    std::vector<double> m(3, 0.0), v(3, 0.0);
    const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Adam adam(3, lr);
    for (int t = 1; t <= 5; ++t) {
        std::vector<double> grad(3);
        for (double& g : grad) g = rng.uniform_real(-2.0, 2.0);
        adam.step(params, grad);
        for (std::size_t i = 0; i < 3; ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
            const double mhat = m[i] / (1.0 - std::pow(b1, t));
            const double vhat = v[i] / (1.0 - std::pow(b2, t));
            ref[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            CHECK(params[i] == doctest::Approx(ref[i]).epsilon(1e-12));
        }
    }
    std::vector<double> bad(2, 0.0);
    CHECK_THROWS_AS(adam.step(bad, bad), std::invalid_argument);

    // Reset restores the cold-start trajectory.
    std::vector<double> a{1.0}, b{1.0};
    const std::vector<double> g{0.3};
    Adam one(1, 0.05);
    one.step(a, g);
    one.reset();
    one.step(b, g);
    CHECK(a[0] == b[0]);
}

TEST_CASE("negative sampling avoids the true tail") {
    Rng rng(66);
    const Triple t{0, 0, 3};
    std::vector<bool> seen(10, false);
    for (int trial = 0; trial < 200; ++trial) {
        const auto negs = sample_negatives(t, 10, 5, rng);
        REQUIRE(negs.size() == 5);
        for (std::int32_t e : negs) {
            CHECK(e != 3);
            CHECK(e >= 0);
            CHECK(e < 10);
            seen[static_cast<std::size_t>(e)] = true;
        }
    }
    for (int e = 0; e < 10; ++e) CHECK(seen[static_cast<std::size_t>(e)] == (e != 3));
    CHECK_THROWS_AS(sample_negatives(t, 1, 5, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_negatives(t, 10, 0, rng), std::invalid_argument);
}

TEST_CASE("schedule validation bounds every knob") {
    TrainSchedule s;
    s.epochs = -1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = TrainSchedule{};
    s.batch_size = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = TrainSchedule{};
    s.lr = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = TrainSchedule{};
    s.pretrain_recover_factor = 1.5;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = TrainSchedule{};
    s.threads = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = TrainSchedule{};
    s.validation_every = -2;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = TrainSchedule{};
    s.epochs = 100;
    CHECK(s.resolved_pretrain_epochs() == 30);
    s.pretrain_epochs = 5;
    CHECK(s.resolved_pretrain_epochs() == 5);
}

TEST_CASE("zero-epoch training reproduces the documented initialization") {
    const TripleStore store = small_synth(80);
    ModelConfig cfg;
    cfg.dim = 4;
    cfg.subspace_dim = 2;
    TrainSchedule sched;
    sched.epochs = 0;
    sched.pretrain_epochs = 0;
    sched.seed = 123;
    const Model trained = train(store, cfg, sched);

    Model expected(cfg, store.entity_names, store.relation_names, store.relation_kinds);
    Rng rng(123);
    Rng init_rng = rng.fork(1);
    expected.init_params(init_rng);
    expected.masks() = allocate_subspaces(store.relation_kinds, cfg.dim, cfg.subspace_dim, 123);

    REQUIRE(trained.params().size() == expected.params().size());
    CHECK(std::memcmp(trained.params().data(), expected.params().data(),
                      trained.params().size() * sizeof(double)) == 0);
    CHECK(trained.masks() == expected.masks());
}

TEST_CASE("pretraining shrinks entities by the recovery factor") {
    const TripleStore store = small_synth(80);
    ModelConfig cfg;
    cfg.dim = 3;
    cfg.subspace_dim = 1;
    cfg.negatives = 2;
    TrainSchedule sched;
    sched.epochs = 0;
    sched.pretrain_epochs = 1;
    sched.seed = 9;
    sched.lr = 1e-12;  // pretraining moves parameters negligibly
    sched.batch_size = 4096;
    const Model after = train(store, cfg, sched);

    Model init(cfg, store.entity_names, store.relation_names, store.relation_kinds);
    Rng rng(9);
    Rng init_rng = rng.fork(1);
    init.init_params(init_rng);

    for (std::size_t e = 0; e < init.entity_count(); ++e) {
        for (int i = 0; i < cfg.dim; ++i) {
            CHECK(after.entity_plane(e, i).x ==
                  doctest::Approx(0.5 * init.entity_plane(e, i).x).epsilon(1e-6));
            CHECK(after.entity_plane(e, i).y ==
                  doctest::Approx(0.5 * init.entity_plane(e, i).y).epsilon(1e-6));
        }
    }
    // Masks were zeroed for the phase and restored afterwards.
    CHECK(after.masks() ==
          allocate_subspaces(store.relation_kinds, cfg.dim, cfg.subspace_dim, 9));
}

TEST_CASE("training is reproducible for a fixed seed and diverges across seeds") {
    const TripleStore store = small_synth(60);
    ModelConfig cfg;
    cfg.dim = 2;
    cfg.subspace_dim = 1;
    cfg.negatives = 3;
    TrainSchedule sched;
    sched.epochs = 3;
    sched.pretrain_epochs = 1;
    sched.seed = 31;
    sched.batch_size = 128;
    sched.validation_every = 2;
    const Model a = train(store, cfg, sched);
    const Model b = train(store, cfg, sched);
    CHECK(std::memcmp(a.params().data(), b.params().data(),
                      a.params().size() * sizeof(double)) == 0);
    sched.seed = 32;
    const Model c = train(store, cfg, sched);
    CHECK(std::memcmp(a.params().data(), c.params().data(),
                      a.params().size() * sizeof(double)) != 0);
}

TEST_CASE("the angle penalty tightens cones relative to an unpenalized run") {
    const TripleStore store = small_synth(120);
    ModelConfig cfg;
    cfg.dim = 4;
    cfg.subspace_dim = 2;
    cfg.negatives = 5;
    TrainSchedule sched;
    sched.epochs = 40;
    sched.pretrain_epochs = 0;
    sched.seed = 77;
    sched.lr = 0.01;
    sched.batch_size = 128;
    sched.validation_every = 0;

    ModelConfig no_angle = cfg;
    no_angle.angle_weight = 0.0;
    const Model loose = train(store, no_angle, sched);

    ModelConfig with_angle = cfg;
    with_angle.angle_weight = 2.0;
    TrainHistory history;
    const Model tight = train(store, with_angle, sched, &history);

    const double v_loose = mean_train_violation(loose, store);
    const double v_tight = mean_train_violation(tight, store);
    CHECK(v_tight < v_loose);
    // The penalized run also has to beat its own starting point.
    REQUIRE(!history.epochs.empty());
    CHECK(history.epochs.back().angle < history.epochs.front().angle);
}

TEST_CASE("validation tracking restores the best epoch") {
    const TripleStore store = small_synth(60);
    ModelConfig cfg;
    cfg.dim = 2;
    cfg.subspace_dim = 1;
    cfg.negatives = 3;
    TrainSchedule sched;
    sched.epochs = 6;
    sched.pretrain_epochs = 2;
    sched.seed = 13;
    sched.batch_size = 256;
    sched.validation_every = 2;
    TrainHistory history;
    const Model m = train(store, cfg, sched, &history);

    REQUIRE(history.epochs.size() == 8);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(history.epochs[i].pretraining);
        CHECK(history.epochs[i].val_mrr == -1.0);
    }
    double best = -1.0;
    int best_epoch = -1;
    for (const EpochStats& e : history.epochs) {
        if (e.pretraining) continue;
        CHECK((e.val_mrr >= 0.0) == (e.epoch % 2 == 0 || e.epoch == 6));
        if (e.val_mrr > best) {
            best = e.val_mrr;
            best_epoch = e.epoch;
        }
    }
    CHECK(history.best_val_mrr == best);
    CHECK(history.best_epoch == best_epoch);
    CHECK(best >= 0.0);
    CHECK(m.all_finite());
}

TEST_CASE("training rejects stores it cannot learn from") {
    TripleStore empty;
    empty.intern_entity("a");
    empty.intern_entity("b");
    empty.intern_relation("r");
    ModelConfig cfg;
    cfg.dim = 2;
    cfg.subspace_dim = 1;
    TrainSchedule sched;
    sched.epochs = 1;
    CHECK_THROWS_AS(train(empty, cfg, sched), DataError);

    TripleStore one;
    one.intern_entity("a");
    one.intern_relation("r");
    one.train = {{0, 0, 0}};
    CHECK_THROWS_AS(train(one, cfg, sched), DataError);
}
