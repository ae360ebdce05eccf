#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "conekg/autodiff.hpp"

namespace conekg::geom {

// One hyperbolic plane is the open unit disk with curvature -1 and conformal
// factor lambda_x = 2 / (1 - |x|^2). All kernels are templated on the scalar
// type so the same expressions run on plain doubles (evaluation) and on tape
// variables (training gradients).

template <class T>
struct Vec2 {
    T x{};
    T y{};
};

using PlanePoint = Vec2<double>;
using TangentVector = Vec2<double>;

struct ConeParams {
    double k = 0.1;  // aperture constant; larger K widens every cone
};

inline constexpr double kBallEps = 1e-5;  // radial clearance kept around 0 and 1
inline constexpr double kPi = 3.14159265358979323846;

namespace detail {
// Near-zero thresholds for squared norms; below these the direction of a
// vector is meaningless and the degenerate closed form is used instead.
inline constexpr double kSqTiny = 1e-30;
// atanh argument ceiling; keeps distances finite against roundoff at the rim.
inline constexpr double kAtanhMax = 1.0 - 1e-16;
}  // namespace detail

template <class T>
T dot(const Vec2<T>& a, const Vec2<T>& b) {
    return a.x * b.x + a.y * b.y;
}

template <class T>
T sqnorm(const Vec2<T>& a) {
    return a.x * a.x + a.y * a.y;
}

template <class T>
T norm(const Vec2<T>& a) {
    using std::sqrt;
    using ad::sqrt;
    return sqrt(sqnorm(a));
}

inline bool in_disk(const PlanePoint& p) { return sqnorm(p) < 1.0; }

inline void require_in_disk(const PlanePoint& p, const char* who) {
    if (!in_disk(p)) throw std::domain_error(std::string(who) + ": point outside the open unit disk");
}

template <class T>
Vec2<T> mobius_add(const Vec2<T>& a, const Vec2<T>& b) {
    using ad::value;
    const T ab = dot(a, b);
    const T aa = sqnorm(a);
    const T bb = sqnorm(b);
    const T ca = 1.0 + 2.0 * ab + bb;
    const T cb = 1.0 - aa;
    const T den = 1.0 / (1.0 + 2.0 * ab + aa * bb);
    return {(ca * a.x + cb * b.x) * den, (ca * a.y + cb * b.y) * den};
}

// exp_x(v) = x (+) tanh(|v| / (1 - |x|^2)) * v/|v|. Inverse of log_map.
template <class T>
Vec2<T> exp_map(const Vec2<T>& base, const Vec2<T>& v) {
    using std::sqrt;
    using std::tanh;
    using ad::sqrt;
    using ad::tanh;
    using ad::value;
    const T vv = sqnorm(v);
    if (value(vv) < detail::kSqTiny) return base;
    const T vn = sqrt(vv);
    const T scale = tanh(vn / (1.0 - sqnorm(base))) / vn;
    const Vec2<T> w{v.x * scale, v.y * scale};
    return mobius_add(base, w);
}

// log_x(y) = (1 - |x|^2) * atanh(|w|) * w/|w| with w = (-x) (+) y.
template <class T>
Vec2<T> log_map(const Vec2<T>& base, const Vec2<T>& y) {
    using std::sqrt;
    using std::atanh;
    using ad::sqrt;
    using ad::atanh;
    using ad::clamp_max;
    using ad::value;
    const Vec2<T> neg{-1.0 * base.x, -1.0 * base.y};
    const Vec2<T> w = mobius_add(neg, y);
    const T ww = sqnorm(w);
    if (value(ww) < detail::kSqTiny) return {w.x * 0.0, w.y * 0.0};
    const T wn = clamp_max(sqrt(ww), detail::kAtanhMax);
    const T scale = (1.0 - sqnorm(base)) * atanh(wn) / wn;
    return {w.x * scale, w.y * scale};
}

// d(x, y) = 2 atanh(|(-x) (+) y|); symmetric, zero iff x == y.
template <class T>
T distance(const Vec2<T>& x, const Vec2<T>& y) {
    using std::sqrt;
    using std::atanh;
    using ad::sqrt;
    using ad::atanh;
    using ad::clamp_max;
    using ad::value;
    const Vec2<T> neg{-1.0 * x.x, -1.0 * x.y};
    const Vec2<T> w = mobius_add(neg, y);
    const T ww = sqnorm(w);
    if (value(ww) < detail::kSqTiny) return ww * 0.0;
    return 2.0 * atanh(clamp_max(sqrt(ww), detail::kAtanhMax));
}

// Angle at x between the outward half-line through x and the geodesic from x
// to y. Returns a value in [0, pi]; the acos argument is clamped into [-1, 1]
// so collinear configurations cannot produce NaN. Coincident y == x yields 0
// (the half-line toward y degenerates onto the axis).
template <class T>
T angle_at(const Vec2<T>& x, const Vec2<T>& y) {
    using std::sqrt;
    using std::acos;
    using ad::sqrt;
    using ad::acos;
    using ad::clamp;
    using ad::value;
    const T xx = sqnorm(x);
    if (value(xx) == 0.0) throw std::domain_error("angle_at: apex at the origin has no axis");
    const Vec2<T> diff{x.x - y.x, x.y - y.y};
    const T dd = sqnorm(diff);
    if (value(dd) < detail::kSqTiny) return dd * 0.0;
    const T yy = sqnorm(y);
    const T xy = dot(x, y);
    const T num = xy * (1.0 + xx) - xx * (1.0 + yy);
    const T den = sqrt(xx) * sqrt(dd) * sqrt(1.0 + xx * yy - 2.0 * xy);
    return acos(clamp(num / den, -1.0, 1.0));
}

// Half aperture of the cone at apex x: asin of K (1 - |x|^2) / |x|, clamped
// so apexes inside the critical radius saturate at pi/2.
template <class T>
T half_aperture(const Vec2<T>& x, const ConeParams& params) {
    using std::sqrt;
    using std::asin;
    using ad::sqrt;
    using ad::asin;
    using ad::clamp_max;
    using ad::value;
    const T xx = sqnorm(x);
    if (value(xx) == 0.0) throw std::domain_error("half_aperture: undefined at the origin");
    const T r = sqrt(xx);
    return asin(clamp_max(params.k * (1.0 - xx) / r, 1.0));
}

template <class T, class S>
Vec2<T> givens_rotate(const S& theta, const Vec2<T>& v) {
    using std::sin;
    using std::cos;
    using ad::sin;
    using ad::cos;
    const S c = cos(theta);
    const S s = sin(theta);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Clamps a candidate point into the closed annulus [eps, 1 - eps] without
// changing its direction; the origin (which has none) maps to (eps, 0).
inline PlanePoint project_to_ball(const PlanePoint& p, double eps = kBallEps) {
    const double r = std::sqrt(sqnorm(p));
    if (r == 0.0) return {eps, 0.0};
    if (r < eps) {
        const double s = eps / r;
        return {p.x * s, p.y * s};
    }
    if (r > 1.0 - eps) {
        const double s = (1.0 - eps) / r;
        return {p.x * s, p.y * s};
    }
    return p;
}

// Smallest apex norm with a well-defined aperture: at this radius the asin
// argument reaches 1 and the aperture is exactly pi/2.
inline double critical_radius(const ConeParams& params) {
    const double k = params.k;
    return (-1.0 + std::sqrt(1.0 + 4.0 * k * k)) / (2.0 * k);
}

}  // namespace conekg::geom
