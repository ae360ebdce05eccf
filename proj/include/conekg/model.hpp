#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "conekg/autodiff.hpp"
#include "conekg/geometry.hpp"
#include "conekg/rng.hpp"

namespace conekg {

// Direction of a hierarchical relation: hyponym edges run parent -> child
// (head owns the cone), hypernym edges run child -> parent (tail owns it).
enum class RelationKind : std::uint8_t { kHyponym = 0, kHypernym = 1, kNone = 2 };

inline const char* to_string(RelationKind k) {
    switch (k) {
        case RelationKind::kHyponym: return "hyponym";
        case RelationKind::kHypernym: return "hypernym";
        case RelationKind::kNone: return "none";
    }
    return "none";
}

inline RelationKind relation_kind_from_string(const std::string& s) {
    if (s == "hyponym") return RelationKind::kHyponym;
    if (s == "hypernym") return RelationKind::kHypernym;
    if (s == "none" || s == "non_hierarchical") return RelationKind::kNone;
    throw std::invalid_argument("unknown relation kind: " + s);
}

inline RelationKind flip(RelationKind k) {
    if (k == RelationKind::kHyponym) return RelationKind::kHypernym;
    if (k == RelationKind::kHypernym) return RelationKind::kHyponym;
    return RelationKind::kNone;
}

inline bool is_hierarchical(RelationKind k) { return k != RelationKind::kNone; }

struct ModelConfig {
    int dim = 500;               // number of hyperbolic planes d
    int subspace_dim = 100;      // planes per hierarchical relation d_s
    double cone_k = 0.1;         // aperture constant K
    double angle_weight = 0.5;   // w in L = L_d + w * L_a
    double adv_temperature = 0.5;  // alpha for self-adversarial weights
    int negatives = 50;          // corrupted tails per positive

    void validate() const {
        if (dim <= 0) throw std::invalid_argument("dim must be positive");
        if (subspace_dim < 0 || subspace_dim > dim)
            throw std::invalid_argument("subspace_dim must satisfy 0 <= d_s <= d");
        if (cone_k <= 0.0) throw std::invalid_argument("cone K must be positive");
        if (angle_weight < 0.0) throw std::invalid_argument("angle weight must be >= 0");
        if (adv_temperature < 0.0)
            throw std::invalid_argument("adversarial temperature must be >= 0");
        if (negatives < 1) throw std::invalid_argument("need at least one negative per positive");
    }
};

// ---------------------------------------------------------------------------
// Per-plane transformation kernels, shared verbatim between the double-valued
// evaluation path and the tape-valued gradient path.

// Rotation about the origin; equals exp_o(G(theta) log_o(h)) exactly because
// the origin maps are radial and G preserves norms.
template <class T, class S>
geom::Vec2<T> f1_plane(const geom::Vec2<T>& h, const S& theta) {
    return geom::givens_rotate(theta, h);
}

// Restricted rotation: walk distance-parameter s from h along the outward
// radial direction rotated by theta * aperture / pi. The realized angle at h
// is |theta| * phi_h / pi < phi_h, so the image stays inside h's cone.
template <class T, class S>
geom::Vec2<T> f2_plane(const geom::Vec2<T>& h, const S& s, const S& theta, double cone_k) {
    using std::sqrt;
    using ad::sqrt;
    const T r = geom::norm(h);
    const geom::Vec2<T> outward{h.x / r, h.y / r};
    const T aperture = geom::half_aperture(h, geom::ConeParams{cone_k});
    const geom::Vec2<T> dir = geom::givens_rotate(theta * aperture * (1.0 / geom::kPi), outward);
    const geom::Vec2<T> tangent{s * dir.x, s * dir.y};
    return geom::exp_map(h, tangent);
}

// One plane of a triple plus its relation parameters, in effective form
// (s already positive, theta already wrapped into [-pi, pi)).
template <class T>
struct TriplePlane {
    geom::Vec2<T> h;
    geom::Vec2<T> t;
    T scale;
    T theta;
    bool masked = false;
};

// psi(h, r, t): negated mean plane distance plus both biases. Masked planes
// use the restricted rotation (from t when the relation is hypernym-kind,
// from h otherwise); unmasked planes use the plain rotation h -> t.
template <class T>
T score_triple(const std::vector<TriplePlane<T>>& planes, const T& bias_h, const T& bias_t,
               RelationKind kind, double cone_k) {
    T acc = bias_h * 0.0;
    for (const auto& p : planes) {
        if (p.masked) {
            if (kind == RelationKind::kHypernym) {
                acc = acc + geom::distance(f2_plane(p.t, p.scale, p.theta, cone_k), p.h);
            } else {
                acc = acc + geom::distance(f2_plane(p.h, p.scale, p.theta, cone_k), p.t);
            }
        } else {
            acc = acc + geom::distance(f1_plane(p.h, p.theta), p.t);
        }
    }
    return (-1.0 / static_cast<double>(planes.size())) * acc + bias_h + bias_t;
}

// Sum over masked planes of the hinge between the parent->child angle and the
// parent's half aperture. Parent is h for hyponym-kind, t for hypernym-kind.
template <class T>
T angle_violation_triple(const std::vector<TriplePlane<T>>& planes, RelationKind kind,
                         double cone_k) {
    using ad::max0;
    if (kind == RelationKind::kNone)
        throw std::logic_error("angle_violation: relation is not hierarchical");
    T acc{};
    bool first = true;
    for (const auto& p : planes) {
        if (!p.masked) continue;
        const geom::Vec2<T>& parent = (kind == RelationKind::kHypernym) ? p.t : p.h;
        const geom::Vec2<T>& child = (kind == RelationKind::kHypernym) ? p.h : p.t;
        const T gap = geom::angle_at(parent, child) - geom::half_aperture(parent, geom::ConeParams{cone_k});
        if (first) {
            acc = max0(gap);
            first = false;
        } else {
            acc = acc + max0(gap);
        }
    }
    if (first) throw std::logic_error("angle_violation: relation mask is empty");
    return acc;
}

// ---------------------------------------------------------------------------
// Model: flat parameter block plus relation masks and kinds.
//
// Layout (documented order, also the checkpoint order):
//   entity e at offset e*(2d+1): d pairs (x_i, y_i), then the bias;
//   relation r at offset E*(2d+1) + r*2d: d raw scales, then d raw angles.
// Relations [0, R) are the base relations; [R, 2R) their reciprocal mirrors
// (flipped kind, shared mask, independently trained parameters).

class Model {
  public:
    Model(ModelConfig cfg, std::vector<std::string> entity_names,
          std::vector<std::string> relation_names, std::vector<RelationKind> base_kinds)
        : cfg_(cfg),
          entity_names_(std::move(entity_names)),
          relation_names_(std::move(relation_names)) {
        cfg_.validate();
        if (relation_names_.size() != base_kinds.size())
            throw std::invalid_argument("relation name/kind count mismatch");
        n_entities_ = entity_names_.size();
        n_base_relations_ = relation_names_.size();
        kinds_.reserve(2 * n_base_relations_);
        for (RelationKind k : base_kinds) kinds_.push_back(k);
        for (RelationKind k : base_kinds) kinds_.push_back(flip(k));
        masks_.assign(2 * n_base_relations_ * cfg_.dim, 0);
        params_.assign(param_count(), 0.0);
    }

    // Uniform direction, radius in [0.2, 0.8] (aperture defined, gradients
    // healthy); biases zero; raw scales at softplus^{-1}(1); angles uniform.
    void init_params(Rng& rng) {
        const double two_pi = 2.0 * geom::kPi;
        for (std::size_t e = 0; e < n_entities_; ++e) {
            for (int i = 0; i < cfg_.dim; ++i) {
                const double phi = rng.uniform_real(0.0, two_pi);
                const double r = rng.uniform_real(0.2, 0.8);
                params_[entity_offset(e) + 2 * i] = r * std::cos(phi);
                params_[entity_offset(e) + 2 * i + 1] = r * std::sin(phi);
            }
            params_[bias_offset(e)] = 0.0;
        }
        const double raw_unit_scale = std::log(std::exp(1.0) - 1.0);  // softplus -> 1
        for (std::size_t r = 0; r < relation_count(); ++r) {
            for (int i = 0; i < cfg_.dim; ++i) {
                params_[scale_offset(r, i)] = raw_unit_scale;
                params_[angle_offset(r, i)] = rng.uniform_real(-geom::kPi, geom::kPi);
            }
        }
    }

    const ModelConfig& config() const { return cfg_; }
    std::size_t entity_count() const { return n_entities_; }
    std::size_t base_relation_count() const { return n_base_relations_; }
    std::size_t relation_count() const { return 2 * n_base_relations_; }
    std::size_t reciprocal_of(std::size_t r) const {
        return r < n_base_relations_ ? r + n_base_relations_ : r - n_base_relations_;
    }

    std::size_t param_count() const {
        return n_entities_ * entity_stride() + relation_count() * relation_stride();
    }
    std::size_t entity_stride() const { return 2 * static_cast<std::size_t>(cfg_.dim) + 1; }
    std::size_t relation_stride() const { return 2 * static_cast<std::size_t>(cfg_.dim); }
    std::size_t entity_offset(std::size_t e) const { return e * entity_stride(); }
    std::size_t bias_offset(std::size_t e) const { return entity_offset(e) + 2 * cfg_.dim; }
    std::size_t relation_offset(std::size_t r) const {
        return n_entities_ * entity_stride() + r * relation_stride();
    }
    std::size_t scale_offset(std::size_t r, int plane) const { return relation_offset(r) + plane; }
    std::size_t angle_offset(std::size_t r, int plane) const {
        return relation_offset(r) + cfg_.dim + plane;
    }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::vector<std::uint8_t>& masks() { return masks_; }
    const std::vector<std::uint8_t>& masks() const { return masks_; }
    const std::vector<RelationKind>& kinds() const { return kinds_; }
    std::vector<RelationKind>& kinds() { return kinds_; }
    const std::vector<std::string>& entity_names() const { return entity_names_; }
    const std::vector<std::string>& relation_names() const { return relation_names_; }

    geom::PlanePoint entity_plane(std::size_t e, int i) const {
        return {params_[entity_offset(e) + 2 * i], params_[entity_offset(e) + 2 * i + 1]};
    }
    double entity_bias(std::size_t e) const { return params_[bias_offset(e)]; }
    bool masked(std::size_t r, int i) const { return masks_[r * cfg_.dim + i] != 0; }
    RelationKind kind(std::size_t r) const { return kinds_[r]; }
    double effective_scale(std::size_t r, int i) const {
        return ad::softplus(params_[scale_offset(r, i)]);
    }
    double effective_angle(std::size_t r, int i) const {
        return ad::wrap_pi(params_[angle_offset(r, i)]);
    }
    int mask_popcount(std::size_t r) const {
        int c = 0;
        for (int i = 0; i < cfg_.dim; ++i) c += masked(r, i) ? 1 : 0;
        return c;
    }

    std::vector<TriplePlane<double>> gather(std::size_t h, std::size_t r, std::size_t t) const {
        std::vector<TriplePlane<double>> planes(cfg_.dim);
        for (int i = 0; i < cfg_.dim; ++i) {
            planes[i] = {entity_plane(h, i), entity_plane(t, i), effective_scale(r, i),
                         effective_angle(r, i), masked(r, i)};
        }
        return planes;
    }

    double score(std::size_t h, std::size_t r, std::size_t t) const {
        return score_triple(gather(h, r, t), entity_bias(h), entity_bias(t), kinds_[r],
                            cfg_.cone_k);
    }

    double angle_violation(std::size_t h, std::size_t r, std::size_t t) const {
        return angle_violation_triple(gather(h, r, t), kinds_[r], cfg_.cone_k);
    }

    // Cone-violation score with the parent/child roles fixed by the caller
    // (closures orient ancestor -> descendant regardless of relation kind).
    double pair_violation(std::size_t parent, std::size_t child, std::size_t r) const {
        if (!is_hierarchical(kinds_[r]))
            throw std::logic_error("pair_violation: relation is not hierarchical");
        const geom::ConeParams cone{cfg_.cone_k};
        double acc = 0.0;
        for (int i = 0; i < cfg_.dim; ++i) {
            if (!masked(r, i)) continue;
            const geom::PlanePoint p = entity_plane(parent, i);
            acc += ad::max0(geom::angle_at(p, entity_plane(child, i)) -
                            geom::half_aperture(p, cone));
        }
        return acc;
    }

    // LCA candidate score: masked-plane sum of (2 phi(w_i) - angle to u - angle
    // to v); coincident w == u contributes angle 0 through angle_at.
    double lca_score(std::size_t w, std::size_t u, std::size_t v, std::size_t r) const {
        if (!is_hierarchical(kinds_[r]))
            throw std::logic_error("lca_score: relation is not hierarchical");
        const geom::ConeParams cone{cfg_.cone_k};
        double acc = 0.0;
        for (int i = 0; i < cfg_.dim; ++i) {
            if (!masked(r, i)) continue;
            const geom::PlanePoint wp = entity_plane(w, i);
            acc += 2.0 * geom::half_aperture(wp, cone) - geom::angle_at(wp, entity_plane(u, i)) -
                   geom::angle_at(wp, entity_plane(v, i));
        }
        return acc;
    }

    bool in_cone(std::size_t parent, std::size_t child, std::size_t r) const {
        const geom::ConeParams cone{cfg_.cone_k};
        for (int i = 0; i < cfg_.dim; ++i) {
            if (!masked(r, i)) continue;
            const geom::PlanePoint p = entity_plane(parent, i);
            if (geom::angle_at(p, entity_plane(child, i)) > geom::half_aperture(p, cone))
                return false;
        }
        return true;
    }

    // Clamps every entity plane into the closed annulus; call after each
    // optimizer step so apertures and tangent directions stay defined.
    void project_entities() {
        for (std::size_t e = 0; e < n_entities_; ++e) {
            for (int i = 0; i < cfg_.dim; ++i) {
                const geom::PlanePoint p = geom::project_to_ball(entity_plane(e, i));
                params_[entity_offset(e) + 2 * i] = p.x;
                params_[entity_offset(e) + 2 * i + 1] = p.y;
            }
        }
    }

    bool all_finite() const {
        for (double v : params_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    ModelConfig cfg_;
    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;  // base relations only
    std::vector<RelationKind> kinds_;          // size 2R: base then reciprocals
    std::vector<std::uint8_t> masks_;          // size 2R * d
    std::vector<double> params_;
    std::size_t n_entities_ = 0;
    std::size_t n_base_relations_ = 0;
};

}  // namespace conekg
