#include "conekg/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <thread>

#include "conekg/errors.hpp"
#include "conekg/eval.hpp"

namespace conekg {

void TrainSchedule::validate() const {
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (pretrain_recover_factor <= 0.0 || pretrain_recover_factor > 1.0)
        throw std::invalid_argument("pretrain recover factor must lie in (0, 1]");
    if (threads < 1) throw std::invalid_argument("thread count must be >= 1");
    if (validation_every < 0) throw std::invalid_argument("validation cadence must be >= 0");
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw std::invalid_argument("Adam buffer size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
    }
}

void Adam::reset() {
    std::fill(m_.begin(), m_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
    t_ = 0;
}

std::vector<std::uint8_t> allocate_subspaces(const std::vector<RelationKind>& base_kinds, int d,
                                             int d_s, std::uint64_t seed, bool orthogonal) {
    if (d_s < 0 || d_s > d)
        throw std::invalid_argument("subspace dimension must satisfy 0 <= d_s <= d");
    const std::size_t n_base = base_kinds.size();
    std::vector<std::uint8_t> masks(2 * n_base * static_cast<std::size_t>(d), 0);
    Rng rng(seed);
    std::vector<std::int32_t> planes(static_cast<std::size_t>(d));
    std::iota(planes.begin(), planes.end(), 0);
    std::size_t next_block = 0;
    for (std::size_t r = 0; r < n_base; ++r) {
        if (!is_hierarchical(base_kinds[r])) continue;
        if (orthogonal) {
            if (next_block + static_cast<std::size_t>(d_s) > static_cast<std::size_t>(d))
                throw std::invalid_argument(
                    "orthogonal subspaces exceed capacity: need more than d planes");
            for (int i = 0; i < d_s; ++i)
                masks[r * static_cast<std::size_t>(d) + next_block + static_cast<std::size_t>(i)] = 1;
            next_block += static_cast<std::size_t>(d_s);
        } else {
            // Partial Fisher-Yates: first d_s entries become the drawn planes.
            for (int i = 0; i < d_s; ++i) {
                const std::size_t j =
                    static_cast<std::size_t>(i) +
                    rng.uniform_int(static_cast<std::size_t>(d - i));
                std::swap(planes[static_cast<std::size_t>(i)], planes[j]);
                masks[r * static_cast<std::size_t>(d) +
                      static_cast<std::size_t>(planes[static_cast<std::size_t>(i)])] = 1;
            }
        }
    }
    // Reciprocals share the base mask.
    for (std::size_t r = 0; r < n_base; ++r)
        std::copy_n(masks.begin() + static_cast<std::ptrdiff_t>(r * static_cast<std::size_t>(d)),
                    d, masks.begin() + static_cast<std::ptrdiff_t>((n_base + r) * static_cast<std::size_t>(d)));
    return masks;
}

std::vector<std::int32_t> sample_negatives(const Triple& triple, std::size_t entity_count, int k,
                                           Rng& rng) {
    if (entity_count < 2)
        throw std::invalid_argument("negative sampling needs at least two entities");
    if (k < 1) throw std::invalid_argument("need at least one negative");
    std::vector<std::int32_t> out;
    out.reserve(static_cast<std::size_t>(k));
    while (out.size() < static_cast<std::size_t>(k)) {
        const auto e = static_cast<std::int32_t>(rng.uniform_int(entity_count));
        if (e == triple.t) continue;
        out.push_back(e);
    }
    return out;
}

namespace {

struct EpochAccumulator {
    double distance_sum = 0.0;  // sum over positives of per-positive distance loss
    double angle_sum = 0.0;     // sum over angle-active positives of violations
    std::size_t positives = 0;
    std::size_t angle_positives = 0;

    void add(const LossBreakdown& b, std::size_t batch_positives, std::size_t batch_angle) {
        // scaled_loss_grad reports batch means; undo to keep exact sums.
        distance_sum += b.distance * static_cast<double>(batch_positives);
        if (batch_angle > 0) angle_sum += b.angle * static_cast<double>(batch_angle);
        positives += batch_positives;
        angle_positives += batch_angle;
    }
    double distance() const {
        return positives == 0 ? 0.0 : distance_sum / static_cast<double>(positives);
    }
    double angle() const {
        return angle_positives == 0 ? 0.0 : angle_sum / static_cast<double>(angle_positives);
    }
};

std::size_t count_angle_active(const Model& model, const std::vector<Triple>& positives,
                               std::size_t begin, std::size_t end) {
    std::size_t n = 0;
    for (std::size_t i = begin; i < end; ++i)
        if (angle_active(model, positives[i].r)) ++n;
    return n;
}

// One gradient step over positives[begin, end). Negatives are drawn serially
// first (so the rng stream is thread-count independent); the gradient is then
// accumulated either inline or by contiguous per-thread slices merged in
// slice order.
LossBreakdown batch_step(Model& model, Adam& adam, const std::vector<Triple>& positives,
                         std::size_t begin, std::size_t end, int k, Rng& rng, int threads,
                         std::vector<double>& grad) {
    TrainingBatch batch;
    batch.k = k;
    batch.positives.assign(positives.begin() + static_cast<std::ptrdiff_t>(begin),
                           positives.begin() + static_cast<std::ptrdiff_t>(end));
    batch.negatives.reserve(batch.positives.size() * static_cast<std::size_t>(k));
    for (const Triple& p : batch.positives)
        for (std::int32_t neg : sample_negatives(p, model.entity_count(), k, rng))
            batch.negatives.push_back(neg);

    std::fill(grad.begin(), grad.end(), 0.0);
    const double inv_batch = 1.0 / static_cast<double>(batch.positives.size());
    const std::size_t angle_denom = count_angle_active(model, batch.positives, 0,
                                                       batch.positives.size());

    LossBreakdown total;
    const std::size_t n = batch.positives.size();
    const auto want = static_cast<std::size_t>(threads);
    if (want <= 1 || n < 2 * want) {
        total = scaled_loss_grad(model, batch, grad, inv_batch, angle_denom);
    } else {
        const std::size_t chunk = (n + want - 1) / want;
        std::vector<TrainingBatch> slices;
        for (std::size_t s = 0; s < n; s += chunk) {
            const std::size_t e = std::min(n, s + chunk);
            TrainingBatch slice;
            slice.k = k;
            slice.positives.assign(batch.positives.begin() + static_cast<std::ptrdiff_t>(s),
                                   batch.positives.begin() + static_cast<std::ptrdiff_t>(e));
            slice.negatives.assign(
                batch.negatives.begin() + static_cast<std::ptrdiff_t>(s * static_cast<std::size_t>(k)),
                batch.negatives.begin() + static_cast<std::ptrdiff_t>(e * static_cast<std::size_t>(k)));
            slices.push_back(std::move(slice));
        }
        std::vector<std::vector<double>> grads(slices.size(),
                                               std::vector<double>(grad.size(), 0.0));
        std::vector<LossBreakdown> parts(slices.size());
        std::vector<std::thread> workers;
        workers.reserve(slices.size());
        for (std::size_t s = 0; s < slices.size(); ++s) {
            workers.emplace_back([&, s] {
                parts[s] = scaled_loss_grad(model, slices[s], grads[s], inv_batch, angle_denom);
            });
        }
        for (auto& w : workers) w.join();
        for (std::size_t s = 0; s < slices.size(); ++s) {
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += grads[s][i];
            total.distance += parts[s].distance;
            total.angle += parts[s].angle;
            total.hierarchical_positives += parts[s].hierarchical_positives;
        }
        total.total = total.distance + model.config().angle_weight * total.angle;
    }
    if (!std::isfinite(total.total))
        throw DivergenceError("training diverged: non-finite loss");
    adam.step(model.params(), grad);
    model.project_entities();
    return total;
}

// Runs `epochs` epochs over the augmented positives; returns per-epoch stats.
void run_phase(Model& model, const std::vector<Triple>& all_positives, const ModelConfig& cfg,
               const TrainSchedule& sched, int epochs, bool pretraining, Rng& rng,
               const TripleStore& store, const FilterIndex* filter, TrainHistory* history,
               std::vector<double>* best_params, double* best_mrr, int* best_epoch) {
    const int threads = sched.deterministic ? 1 : sched.threads;
    Adam adam(model.params().size(), sched.lr);
    std::vector<double> grad(model.params().size(), 0.0);
    std::vector<Triple> positives = all_positives;
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        rng.shuffle(positives);
        EpochAccumulator acc;
        for (std::size_t begin = 0; begin < positives.size();
             begin += static_cast<std::size_t>(sched.batch_size)) {
            const std::size_t end =
                std::min(positives.size(), begin + static_cast<std::size_t>(sched.batch_size));
            const std::size_t angle_n = count_angle_active(model, positives, begin, end);
            const LossBreakdown b = batch_step(model, adam, positives, begin, end, cfg.negatives,
                                               rng, threads, grad);
            acc.add(b, end - begin, angle_n);
        }
        if (!model.all_finite())
            throw DivergenceError("training diverged: non-finite parameter");

        EpochStats stats;
        stats.epoch = epoch;
        stats.pretraining = pretraining;
        stats.distance = acc.distance();
        stats.angle = acc.angle();
        stats.total = stats.distance + cfg.angle_weight * stats.angle;

        const bool validate = !pretraining && filter != nullptr && sched.validation_every > 0 &&
                              !store.valid.empty() &&
                              (epoch % sched.validation_every == 0 || epoch == epochs);
        if (validate) {
            const RankingReport report = kg_completion(model, store, Split::kValid, *filter);
            stats.val_mrr = report.overall.mrr;
            if (best_params != nullptr && report.overall.mrr > *best_mrr) {
                *best_mrr = report.overall.mrr;
                *best_epoch = epoch;
                *best_params = model.params();
            }
        }
        if (history != nullptr) history->epochs.push_back(stats);
    }
}

}  // namespace

Model train(const TripleStore& store, const ModelConfig& cfg, const TrainSchedule& sched,
            TrainHistory* history) {
    cfg.validate();
    sched.validate();
    if (store.train.empty()) throw DataError("training requires a nonempty train split");
    if (store.entity_count() < 2) throw DataError("training requires at least two entities");

    Model model(cfg, store.entity_names, store.relation_names, store.relation_kinds);
    Rng rng(sched.seed);
    Rng init_rng = rng.fork(1);
    model.init_params(init_rng);
    const std::vector<std::uint8_t> masks = allocate_subspaces(
        store.relation_kinds, cfg.dim, cfg.subspace_dim, sched.seed, sched.orthogonal_subspaces);
    model.masks() = masks;

    const std::vector<Triple> positives = store.augmented_train();
    const FilterIndex filter(store);

    const int pretrain_epochs = sched.resolved_pretrain_epochs();
    if (pretrain_epochs > 0) {
        // RotC phase: zero masks turn off the restricted rotation and the
        // angle loss; only plain rotations and biases train.
        std::fill(model.masks().begin(), model.masks().end(), 0);
        Rng phase_rng = rng.fork(2);
        run_phase(model, positives, cfg, sched, pretrain_epochs, /*pretraining=*/true, phase_rng,
                  store, nullptr, history, nullptr, nullptr, nullptr);
        model.masks() = masks;
        for (std::size_t e = 0; e < model.entity_count(); ++e) {
            for (int i = 0; i < cfg.dim; ++i) {
                model.params()[model.entity_offset(e) + 2 * i] *= sched.pretrain_recover_factor;
                model.params()[model.entity_offset(e) + 2 * i + 1] *= sched.pretrain_recover_factor;
            }
        }
        model.project_entities();
    }

    double best_mrr = -1.0;
    int best_epoch = -1;
    std::vector<double> best_params;
    Rng main_rng = rng.fork(3);
    run_phase(model, positives, cfg, sched, sched.epochs, /*pretraining=*/false, main_rng, store,
              &filter, history, &best_params, &best_mrr, &best_epoch);
    if (!best_params.empty()) {
        model.params() = best_params;
        if (history != nullptr) {
            history->best_val_mrr = best_mrr;
            history->best_epoch = best_epoch;
        }
    }
    return model;
}

}  // namespace conekg
