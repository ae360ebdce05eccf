#pragma once

#include <cstdint>
#include <vector>

#include "conekg/data.hpp"
#include "conekg/model.hpp"

namespace conekg {

// One optimizer step's worth of positives plus their corrupted tails.
// negatives is row-major: the j-th corruption of positive p sits at p*k + j.
// All corruptions replace the tail (head prediction is trained through the
// reciprocal relations already present in the positives).
struct TrainingBatch {
    std::vector<Triple> positives;  // relation ids in [0, 2R)
    std::vector<std::int32_t> negatives;
    int k = 0;

    void validate(const Model& model) const;
};

struct LossBreakdown {
    double total = 0.0;
    double distance = 0.0;
    double angle = 0.0;
    std::size_t hierarchical_positives = 0;
};

// Detached self-adversarial weights: per positive, softmax over its negatives
// of alpha * psi(negative). Row-major like TrainingBatch::negatives; each row
// sums to 1. These are constants in the loss gradient.
std::vector<double> adversarial_weights(const Model& model, const TrainingBatch& batch);

// Mean over positives of -log sigma(psi_pos) - sum_j w_j log sigma(-psi_j).
// `frozen_weights` bypasses the weight computation (the finite-difference
// oracle needs the weights held fixed while parameters move).
double distance_loss(const Model& model, const TrainingBatch& batch,
                     const std::vector<double>* frozen_weights = nullptr);

// Mean angle violation over positives whose relation is hierarchical with a
// nonempty mask; 0 when the batch has none. Negatives never contribute.
double angle_loss(const Model& model, const TrainingBatch& batch);

LossBreakdown total_loss(const Model& model, const TrainingBatch& batch,
                         const std::vector<double>* frozen_weights = nullptr);

// Same value as total_loss, with d(total)/d(param) accumulated into `grad`
// (resized and zeroed by the caller to model.params().size()).
LossBreakdown total_loss_grad(const Model& model, const TrainingBatch& batch,
                              std::vector<double>& grad,
                              const std::vector<double>* frozen_weights = nullptr);

// Gradient of a batch slice with externally fixed denominators, so data-
// parallel workers over slices of one batch sum to exactly the full-batch
// gradient: inv_batch = 1/|B|, angle_denom = count of angle-active positives
// in the full batch (0 disables the angle term).
LossBreakdown scaled_loss_grad(const Model& model, const TrainingBatch& slice,
                               std::vector<double>& grad, double inv_batch,
                               std::size_t angle_denom,
                               const std::vector<double>* frozen_weights = nullptr);

// True when a positive's relation contributes to the angle loss (hierarchical
// kind and nonempty mask).
bool angle_active(const Model& model, std::int32_t relation);

}  // namespace conekg
