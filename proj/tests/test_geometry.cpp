#include "doctest.h"

#include <cmath>

#include "conekg/geometry.hpp"
#include "conekg/rng.hpp"

using namespace conekg;
using geom::PlanePoint;
using geom::TangentVector;

namespace {

PlanePoint random_point(Rng& rng, double max_norm) {
    const double phi = rng.uniform_real(0.0, 2.0 * geom::kPi);
    const double r = rng.uniform_real(1e-3, max_norm);
    return {r * std::cos(phi), r * std::sin(phi)};
}

double norm(const PlanePoint& p) { return std::sqrt(p.x * p.x + p.y * p.y); }

}  // namespace

TEST_CASE("mobius addition identities") {
    Rng rng(11);
    for (int i = 0; i < 100000; ++i) {
        const PlanePoint x = random_point(rng, 0.95);
        const PlanePoint zero{0.0, 0.0};
        const PlanePoint right = geom::mobius_add(x, zero);
        CHECK(right.x == doctest::Approx(x.x).epsilon(1e-12));
        CHECK(right.y == doctest::Approx(x.y).epsilon(1e-12));
        const PlanePoint left = geom::mobius_add(zero, x);
        CHECK(left.x == doctest::Approx(x.x).epsilon(1e-12));
        CHECK(left.y == doctest::Approx(x.y).epsilon(1e-12));
        const PlanePoint inv = geom::mobius_add({-x.x, -x.y}, x);
        CHECK(std::abs(inv.x) < 1e-12);
        CHECK(std::abs(inv.y) < 1e-12);
    }
}

TEST_CASE("mobius addition stays in the disk") {
    Rng rng(12);
    for (int i = 0; i < 100000; ++i) {
        const PlanePoint x = random_point(rng, 0.999);
        const PlanePoint y = random_point(rng, 0.999);
        CHECK(norm(geom::mobius_add(x, y)) < 1.0);
    }
}

TEST_CASE("exp and log maps invert each other") {
    Rng rng(13);
    for (int i = 0; i < 100000; ++i) {
        const PlanePoint x = random_point(rng, 0.9);
        // log(exp(v)) == v
        const double phi = rng.uniform_real(0.0, 2.0 * geom::kPi);
        const double len = rng.uniform_real(0.0, 1.0);
        const TangentVector v{len * std::cos(phi), len * std::sin(phi)};
        const TangentVector back = geom::log_map(x, geom::exp_map(x, v));
        CHECK(back.x == doctest::Approx(v.x).epsilon(1e-9));
        CHECK(back.y == doctest::Approx(v.y).epsilon(1e-9));
        // exp(log(y)) == y
        const PlanePoint y = random_point(rng, 0.9);
        const PlanePoint there = geom::exp_map(x, geom::log_map(x, y));
        CHECK(there.x == doctest::Approx(y.x).epsilon(1e-9));
        CHECK(there.y == doctest::Approx(y.y).epsilon(1e-9));
    }
}

TEST_CASE("distance: symmetry, origin closed form, acosh closed form") {
    Rng rng(14);
    for (int i = 0; i < 100000; ++i) {
        const PlanePoint x = random_point(rng, 0.95);
        const PlanePoint y = random_point(rng, 0.95);
        const double dxy = geom::distance(x, y);
        CHECK(dxy == doctest::Approx(geom::distance(y, x)).epsilon(1e-12));
        // d(o, x) = 2 atanh(|x|)
        CHECK(geom::distance(PlanePoint{0.0, 0.0}, x) ==
              doctest::Approx(2.0 * std::atanh(norm(x))).epsilon(1e-12));
        // Independent closed form via acosh.
        const double dx2 = (x.x - y.x) * (x.x - y.x) + (x.y - y.y) * (x.y - y.y);
        const double denom = (1.0 - norm(x) * norm(x)) * (1.0 - norm(y) * norm(y));
        const double ref = std::acosh(1.0 + 2.0 * dx2 / denom);
        CHECK(dxy == doctest::Approx(ref).epsilon(1e-9));
    }
    CHECK(geom::distance(PlanePoint{0.3, 0.4}, PlanePoint{0.3, 0.4}) == 0.0);
}

TEST_CASE("angle agrees with the conformal tangent-space angle") {
    Rng rng(15);
    int checked = 0;
    while (checked < 100000) {
        const PlanePoint x = random_point(rng, 0.9);
        const PlanePoint y = random_point(rng, 0.9);
        const double dx = x.x - y.x, dy = x.y - y.y;
        if (dx * dx + dy * dy < 1e-6) continue;  // angle undefined in the limit
        ++checked;
        const TangentVector v = geom::log_map(x, y);
        const double vn = std::sqrt(v.x * v.x + v.y * v.y);
        const double xn = norm(x);
        const double cosang = (x.x * v.x + x.y * v.y) / (vn * xn);
        const double ref = std::acos(std::clamp(cosang, -1.0, 1.0));
        CHECK(geom::angle_at(x, y) == doctest::Approx(ref).epsilon(1e-9));
    }
}

TEST_CASE("angle edge cases") {
    CHECK(geom::angle_at(PlanePoint{0.5, 0.0}, PlanePoint{0.5, 0.0}) == 0.0);
    CHECK_THROWS_AS(geom::angle_at(PlanePoint{0.0, 0.0}, PlanePoint{0.5, 0.0}), std::domain_error);
    // Antipodal point sits exactly opposite: angle pi.
    CHECK(geom::angle_at(PlanePoint{0.5, 0.0}, PlanePoint{-0.5, 0.0}) == doctest::Approx(geom::kPi).epsilon(1e-12));
}

TEST_CASE("half aperture: clamp inside critical radius, decreasing outside") {
    const geom::ConeParams cone{0.1};
    const double crit = geom::critical_radius(cone);
    // K(1 - r^2)/r = 1 exactly at the critical radius.
    CHECK(cone.k * (1.0 - crit * crit) / crit == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(crit == doctest::Approx(0.09901951359278449).epsilon(1e-12));

    Rng rng(16);
    for (int i = 0; i < 100000; ++i) {
        const double r = rng.uniform_real(1e-4, crit);
        const PlanePoint x{r, 0.0};
        CHECK(geom::half_aperture(x, cone) == doctest::Approx(geom::kPi / 2).epsilon(1e-12));
    }
    double prev = geom::kPi;
    for (double r = crit + 1e-3; r < 1.0; r += 0.01) {
        const double phi = geom::half_aperture(PlanePoint{0.0, r}, cone);
        CHECK(phi < prev);
        prev = phi;
    }
    CHECK(geom::half_aperture(PlanePoint{0.5, 0.0}, cone) ==
          doctest::Approx(std::asin(0.15)).epsilon(1e-12));
    CHECK_THROWS_AS(geom::half_aperture(PlanePoint{0.0, 0.0}, cone), std::domain_error);
}

TEST_CASE("givens rotation preserves norm and composes additively") {
    Rng rng(17);
    for (int i = 0; i < 100000; ++i) {
        const PlanePoint x = random_point(rng, 0.95);
        const double a = rng.uniform_real(-geom::kPi, geom::kPi);
        const double b = rng.uniform_real(-geom::kPi, geom::kPi);
        const PlanePoint rx = geom::givens_rotate(a, x);
        CHECK(norm(rx) == doctest::Approx(norm(x)).epsilon(1e-12));
        const PlanePoint once = geom::givens_rotate(a + b, x);
        const PlanePoint twice = geom::givens_rotate(b, rx);
        CHECK(once.x == doctest::Approx(twice.x).epsilon(1e-9));
        CHECK(once.y == doctest::Approx(twice.y).epsilon(1e-9));
    }
}

TEST_CASE("projection keeps points strictly inside the ball") {
    Rng rng(18);
    for (int i = 0; i < 10000; ++i) {
        const double phi = rng.uniform_real(0.0, 2.0 * geom::kPi);
        const double r = rng.uniform_real(0.0, 2.0);
        PlanePoint p{r * std::cos(phi), r * std::sin(phi)};
        p = geom::project_to_ball(p);
        CHECK(norm(p) >= geom::kBallEps - 1e-15);
        CHECK(norm(p) <= 1.0 - geom::kBallEps + 1e-15);
        // Interior points are untouched.
        const PlanePoint q{0.3, -0.2};
        const PlanePoint qp = geom::project_to_ball(q);
        CHECK(qp.x == q.x);
        CHECK(qp.y == q.y);
    }
    const PlanePoint origin = geom::project_to_ball({0.0, 0.0});
    CHECK(norm(origin) == doctest::Approx(geom::kBallEps));
}
