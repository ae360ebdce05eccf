#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conekg/data.hpp"
#include "conekg/loss.hpp"
#include "conekg/model.hpp"

namespace conekg {

struct TrainSchedule {
    int epochs = 500;
    int batch_size = 1024;
    std::uint64_t seed = 0;
    int pretrain_epochs = -1;              // -1 resolves to 0.3 * epochs
    double pretrain_recover_factor = 0.5;  // entity shrink after pretraining
    double lr = 0.001;
    int threads = 1;
    bool deterministic = false;  // forces single-threaded gradient accumulation
    int validation_every = 10;   // epochs between validation MRR checks; 0 disables
    bool orthogonal_subspaces = false;

    int resolved_pretrain_epochs() const {
        if (pretrain_epochs >= 0) return pretrain_epochs;
        return static_cast<int>(0.3 * epochs);
    }
    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based within its phase
    bool pretraining = false;
    double distance = 0.0, angle = 0.0, total = 0.0;
    double val_mrr = -1.0;  // -1 when no validation ran this epoch
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    double best_val_mrr = -1.0;
    int best_epoch = -1;  // main-phase epoch whose parameters were kept
};

// Plain Adam over the flat parameter vector (dense moments).
class Adam {
  public:
    Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad);
    void reset();

  private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    std::int64_t t_ = 0;
};

// Masks for all 2R relations: each hierarchical base relation draws d_s of d
// planes (uniformly, or disjointly in orthogonal mode); reciprocals share
// their base mask; non-hierarchical masks stay zero.
std::vector<std::uint8_t> allocate_subspaces(const std::vector<RelationKind>& base_kinds, int d,
                                             int d_s, std::uint64_t seed, bool orthogonal = false);

// k uniform corrupted tails, resampling collisions with the true tail.
std::vector<std::int32_t> sample_negatives(const Triple& triple, std::size_t entity_count, int k,
                                           Rng& rng);

// RotC pretraining followed by the main phase. Deterministic for a fixed
// seed/config/thread-mode; throws DivergenceError on non-finite loss or
// parameters. With a nonempty valid split, the best-validation-MRR parameters
// are restored at the end.
Model train(const TripleStore& store, const ModelConfig& cfg, const TrainSchedule& sched,
            TrainHistory* history = nullptr);

}  // namespace conekg
