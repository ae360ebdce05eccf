#include "conekg/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conekg {

// A positive's relation joins the angle loss only when it is hierarchical and
// its mask selects at least one plane (pretraining zeroes all masks, which
// switches the angle loss off without special cases).
bool angle_active(const Model& model, std::int32_t r) {
    return is_hierarchical(model.kind(static_cast<std::size_t>(r))) &&
           model.mask_popcount(static_cast<std::size_t>(r)) > 0;
}

namespace {

std::size_t count_angle_positives(const Model& model, const TrainingBatch& batch) {
    std::size_t n = 0;
    for (const Triple& p : batch.positives)
        if (angle_active(model, p.r)) ++n;
    return n;
}

}  // namespace

void TrainingBatch::validate(const Model& model) const {
    if (positives.empty()) throw std::invalid_argument("training batch has no positives");
    if (k < 1) throw std::invalid_argument("training batch needs at least one negative per positive");
    if (negatives.size() != positives.size() * static_cast<std::size_t>(k))
        throw std::invalid_argument("training batch negative count mismatch");
    for (const Triple& p : positives) {
        if (static_cast<std::size_t>(p.r) >= model.relation_count())
            throw std::invalid_argument("training batch references unknown relation");
    }
}

std::vector<double> adversarial_weights(const Model& model, const TrainingBatch& batch) {
    batch.validate(model);
    const double alpha = model.config().adv_temperature;
    const auto k = static_cast<std::size_t>(batch.k);
    std::vector<double> weights(batch.negatives.size());
    std::vector<double> logits(k);
    for (std::size_t p = 0; p < batch.positives.size(); ++p) {
        const Triple& pos = batch.positives[p];
        double hi = -1e300;
        for (std::size_t j = 0; j < k; ++j) {
            logits[j] = alpha * model.score(static_cast<std::size_t>(pos.h),
                                            static_cast<std::size_t>(pos.r),
                                            static_cast<std::size_t>(batch.negatives[p * k + j]));
            hi = std::max(hi, logits[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(logits[j] - hi);
        for (std::size_t j = 0; j < k; ++j)
            weights[p * k + j] = std::exp(logits[j] - hi) / z;
    }
    return weights;
}

double distance_loss(const Model& model, const TrainingBatch& batch,
                     const std::vector<double>* frozen_weights) {
    batch.validate(model);
    const std::vector<double> weights =
        frozen_weights ? *frozen_weights : adversarial_weights(model, batch);
    const auto k = static_cast<std::size_t>(batch.k);
    double acc = 0.0;
    for (std::size_t p = 0; p < batch.positives.size(); ++p) {
        const Triple& pos = batch.positives[p];
        acc -= ad::log_sigmoid(model.score(static_cast<std::size_t>(pos.h),
                                           static_cast<std::size_t>(pos.r),
                                           static_cast<std::size_t>(pos.t)));
        for (std::size_t j = 0; j < k; ++j) {
            const double psi = model.score(static_cast<std::size_t>(pos.h),
                                           static_cast<std::size_t>(pos.r),
                                           static_cast<std::size_t>(batch.negatives[p * k + j]));
            acc -= weights[p * k + j] * ad::log_sigmoid(-psi);
        }
    }
    return acc / static_cast<double>(batch.positives.size());
}

double angle_loss(const Model& model, const TrainingBatch& batch) {
    const std::size_t n_hier = count_angle_positives(model, batch);
    if (n_hier == 0) return 0.0;
    double acc = 0.0;
    for (const Triple& p : batch.positives) {
        if (!angle_active(model, p.r)) continue;
        acc += model.angle_violation(static_cast<std::size_t>(p.h), static_cast<std::size_t>(p.r),
                                     static_cast<std::size_t>(p.t));
    }
    return acc / static_cast<double>(n_hier);
}

LossBreakdown total_loss(const Model& model, const TrainingBatch& batch,
                         const std::vector<double>* frozen_weights) {
    LossBreakdown out;
    out.distance = distance_loss(model, batch, frozen_weights);
    out.hierarchical_positives = count_angle_positives(model, batch);
    out.angle = angle_loss(model, batch);
    out.total = out.distance + model.config().angle_weight * out.angle;
    return out;
}

// ---------------------------------------------------------------------------
// Gradient path. Every positive gets its own tape pass: leaves for the head,
// tail, relation, and each corrupted tail are materialized, the loss
// contribution (1/|B|) L_p + (w/|B_hier|) A_p is built from the same templated
// kernels as the value path, and the reverse sweep's leaf adjoints scatter
// into the dense gradient.

namespace {

struct LeafMap {
    std::vector<std::pair<std::int32_t, std::size_t>> entries;  // (node, param index)
    void clear() { entries.clear(); }
    ad::Var leaf(ad::Tape& tape, const Model& model, std::size_t param_idx) {
        const ad::Var v = ad::leaf(tape, model.params()[param_idx]);
        entries.emplace_back(v.idx, param_idx);
        return v;
    }
};

struct EntityVars {
    std::vector<geom::Vec2<ad::Var>> planes;
    ad::Var bias;
};

EntityVars entity_vars(ad::Tape& tape, const Model& model, std::size_t e, LeafMap& map) {
    EntityVars out;
    const int d = model.config().dim;
    out.planes.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        out.planes.push_back({map.leaf(tape, model, model.entity_offset(e) + 2 * i),
                              map.leaf(tape, model, model.entity_offset(e) + 2 * i + 1)});
    }
    out.bias = map.leaf(tape, model, model.bias_offset(e));
    return out;
}

struct RelationVars {
    std::vector<ad::Var> scale;  // effective s_i, only meaningful on masked planes
    std::vector<ad::Var> theta;  // wrapped angle
};

RelationVars relation_vars(ad::Tape& tape, const Model& model, std::size_t r, LeafMap& map) {
    RelationVars out;
    const int d = model.config().dim;
    out.scale.reserve(static_cast<std::size_t>(d));
    out.theta.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        if (model.masked(r, i)) {
            out.scale.push_back(ad::softplus(map.leaf(tape, model, model.scale_offset(r, i))));
        } else {
            out.scale.push_back(ad::constant(tape, 0.0));  // f1 ignores scaling
        }
        out.theta.push_back(ad::wrap_pi(map.leaf(tape, model, model.angle_offset(r, i))));
    }
    return out;
}

std::vector<TriplePlane<ad::Var>> assemble(const Model& model, std::size_t r,
                                           const EntityVars& h, const EntityVars& t,
                                           const RelationVars& rel) {
    const int d = model.config().dim;
    std::vector<TriplePlane<ad::Var>> planes(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        planes[idx] = {h.planes[idx], t.planes[idx], rel.scale[idx], rel.theta[idx],
                       model.masked(r, i)};
    }
    return planes;
}

}  // namespace

LossBreakdown scaled_loss_grad(const Model& model, const TrainingBatch& batch,
                               std::vector<double>& grad, double inv_batch,
                               std::size_t angle_denom,
                               const std::vector<double>* frozen_weights) {
    batch.validate(model);
    if (grad.size() != model.params().size())
        throw std::invalid_argument("gradient buffer size mismatch");
    const std::vector<double> weights =
        frozen_weights ? *frozen_weights : adversarial_weights(model, batch);
    const auto k = static_cast<std::size_t>(batch.k);
    const std::size_t n_hier = angle_denom;
    const double angle_coeff =
        n_hier > 0 ? model.config().angle_weight / static_cast<double>(n_hier) : 0.0;
    const double cone_k = model.config().cone_k;

    ad::Tape tape;
    LeafMap map;
    LossBreakdown out;
    out.hierarchical_positives = count_angle_positives(model, batch);
    for (std::size_t p = 0; p < batch.positives.size(); ++p) {
        const Triple& pos = batch.positives[p];
        const auto h_id = static_cast<std::size_t>(pos.h);
        const auto r_id = static_cast<std::size_t>(pos.r);
        const auto t_id = static_cast<std::size_t>(pos.t);
        const RelationKind kind = model.kind(r_id);

        tape.clear();
        map.clear();
        const EntityVars h = entity_vars(tape, model, h_id, map);
        const RelationVars rel = relation_vars(tape, model, r_id, map);
        const EntityVars t = entity_vars(tape, model, t_id, map);

        const ad::Var psi_pos =
            score_triple(assemble(model, r_id, h, t, rel), h.bias, t.bias, kind, cone_k);
        ad::Var loss_p = -1.0 * ad::log_sigmoid(psi_pos);
        for (std::size_t j = 0; j < k; ++j) {
            const auto neg_id = static_cast<std::size_t>(batch.negatives[p * k + j]);
            const EntityVars tn = entity_vars(tape, model, neg_id, map);
            const ad::Var psi_neg =
                score_triple(assemble(model, r_id, h, tn, rel), h.bias, tn.bias, kind, cone_k);
            loss_p = loss_p - weights[p * k + j] * ad::log_sigmoid(-1.0 * psi_neg);
        }

        ad::Var contribution = inv_batch * loss_p;
        double angle_val = 0.0;
        if (angle_coeff > 0.0 && angle_active(model, pos.r)) {
            const ad::Var viol =
                angle_violation_triple(assemble(model, r_id, h, t, rel), kind, cone_k);
            angle_val = viol.val;
            contribution = contribution + angle_coeff * viol;
        } else if (n_hier > 0 && angle_active(model, pos.r)) {
            // angle_weight == 0: still report the violation value.
            angle_val = model.angle_violation(h_id, r_id, t_id);
        }

        tape.backward(contribution.idx);
        for (const auto& [node, param] : map.entries) grad[param] += tape.adjoint(node);

        out.distance += inv_batch * loss_p.val;
        if (n_hier > 0 && angle_active(model, pos.r))
            out.angle += angle_val / static_cast<double>(n_hier);
    }
    out.total = out.distance + model.config().angle_weight * out.angle;
    return out;
}

LossBreakdown total_loss_grad(const Model& model, const TrainingBatch& batch,
                              std::vector<double>& grad,
                              const std::vector<double>* frozen_weights) {
    batch.validate(model);
    return scaled_loss_grad(model, batch, grad,
                            1.0 / static_cast<double>(batch.positives.size()),
                            count_angle_positives(model, batch), frozen_weights);
}

}  // namespace conekg
