#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace conekg::ad {

// Minimal reverse-mode tape over scalar doubles.
//
// Every Var owns one tape node holding up to two parent indices and the
// local partial derivatives with respect to those parents. Nodes are created
// in topological order, so one reverse sweep from the loss node accumulates
// d(loss)/d(node) for every node. Leaves are parentless nodes; their adjoint
// is read back after backward().
//
// Design constraints served here: operations are branch-free record/replay
// (no expression templates), the tape is reusable across evaluations via
// clear(), and non-smooth primitives (clamps, hinges) record a zero partial
// on their flat side so gradients never turn NaN at domain edges.
class Tape {
public:
    struct Node {
        int32_t a;
        int32_t b;
        double da;
        double db;
    };

    int32_t push0() { return push(-1, 0.0, -1, 0.0); }

    int32_t push1(int32_t a, double da) { return push(a, da, -1, 0.0); }

    int32_t push(int32_t a, double da, int32_t b, double db) {
        nodes_.push_back({a, b, da, db});
        return static_cast<int32_t>(nodes_.size()) - 1;
    }

    void clear() { nodes_.clear(); }

    size_t size() const { return nodes_.size(); }

    // Seeds d(seed)/d(seed) = 1 and sweeps backwards. adjoint(i) is valid
    // until the next backward() or clear().
    void backward(int32_t seed) {
        adjoint_.assign(nodes_.size(), 0.0);
        adjoint_[static_cast<size_t>(seed)] = 1.0;
        for (int32_t i = seed; i >= 0; --i) {
            const double g = adjoint_[static_cast<size_t>(i)];
            if (g == 0.0) continue;
            const Node& n = nodes_[static_cast<size_t>(i)];
            if (n.a >= 0) adjoint_[static_cast<size_t>(n.a)] += n.da * g;
            if (n.b >= 0) adjoint_[static_cast<size_t>(n.b)] += n.db * g;
        }
    }

    double adjoint(int32_t idx) const { return adjoint_[static_cast<size_t>(idx)]; }

private:
    std::vector<Node> nodes_;
    std::vector<double> adjoint_;
};

struct Var {
    Tape* tape;
    int32_t idx;
    double val;
};

inline Var leaf(Tape& t, double v) { return {&t, t.push0(), v}; }
inline Var constant(Tape& t, double v) { return {&t, t.push0(), v}; }

inline double value(double x) { return x; }
inline double value(const Var& x) { return x.val; }

// --- arithmetic ---------------------------------------------------------

inline Var operator+(Var a, Var b) { return {a.tape, a.tape->push(a.idx, 1.0, b.idx, 1.0), a.val + b.val}; }
inline Var operator+(Var a, double b) { return {a.tape, a.tape->push1(a.idx, 1.0), a.val + b}; }
inline Var operator+(double a, Var b) { return b + a; }

inline Var operator-(Var a, Var b) { return {a.tape, a.tape->push(a.idx, 1.0, b.idx, -1.0), a.val - b.val}; }
inline Var operator-(Var a, double b) { return {a.tape, a.tape->push1(a.idx, 1.0), a.val - b}; }
inline Var operator-(double a, Var b) { return {b.tape, b.tape->push1(b.idx, -1.0), a - b.val}; }
inline Var operator-(Var a) { return {a.tape, a.tape->push1(a.idx, -1.0), -a.val}; }

inline Var operator*(Var a, Var b) { return {a.tape, a.tape->push(a.idx, b.val, b.idx, a.val), a.val * b.val}; }
inline Var operator*(Var a, double b) { return {a.tape, a.tape->push1(a.idx, b), a.val * b}; }
inline Var operator*(double a, Var b) { return b * a; }

inline Var operator/(Var a, Var b) {
    const double inv = 1.0 / b.val;
    return {a.tape, a.tape->push(a.idx, inv, b.idx, -a.val * inv * inv), a.val * inv};
}
inline Var operator/(Var a, double b) { return a * (1.0 / b); }
inline Var operator/(double a, Var b) {
    const double inv = 1.0 / b.val;
    return {b.tape, b.tape->push1(b.idx, -a * inv * inv), a * inv};
}

// --- elementary functions ------------------------------------------------

inline Var sqrt(Var a) {
    const double r = std::sqrt(a.val);
    return {a.tape, a.tape->push1(a.idx, 0.5 / r), r};
}

inline Var exp(Var a) {
    const double e = std::exp(a.val);
    return {a.tape, a.tape->push1(a.idx, e), e};
}

inline Var log(Var a) { return {a.tape, a.tape->push1(a.idx, 1.0 / a.val), std::log(a.val)}; }

inline Var tanh(Var a) {
    const double t = std::tanh(a.val);
    return {a.tape, a.tape->push1(a.idx, 1.0 - t * t), t};
}

inline Var atanh(Var a) {
    return {a.tape, a.tape->push1(a.idx, 1.0 / (1.0 - a.val * a.val)), std::atanh(a.val)};
}

inline Var sin(Var a) { return {a.tape, a.tape->push1(a.idx, std::cos(a.val)), std::sin(a.val)}; }
inline Var cos(Var a) { return {a.tape, a.tape->push1(a.idx, -std::sin(a.val)), std::cos(a.val)}; }

// asin/acos derivatives blow up at |x| = 1. Callers clamp arguments into
// [-1, 1] beforehand (the clamp cuts the gradient outside), but an argument
// can still land within roundoff of the edge; the denominator floor keeps
// the recorded partial finite there.
inline Var asin(Var a) {
    const double den = std::sqrt(std::max(1.0 - a.val * a.val, 1e-12));
    return {a.tape, a.tape->push1(a.idx, 1.0 / den), std::asin(a.val)};
}

inline Var acos(Var a) {
    const double den = std::sqrt(std::max(1.0 - a.val * a.val, 1e-12));
    return {a.tape, a.tape->push1(a.idx, -1.0 / den), std::acos(a.val)};
}

// --- piecewise primitives (flat side records zero partial) ---------------

inline double max0(double x) { return x > 0.0 ? x : 0.0; }
inline Var max0(Var a) {
    return {a.tape, a.tape->push1(a.idx, a.val > 0.0 ? 1.0 : 0.0), max0(a.val)};
}

inline double clamp_max(double x, double hi) { return x < hi ? x : hi; }
inline Var clamp_max(Var a, double hi) {
    const bool inside = a.val < hi;
    return {a.tape, a.tape->push1(a.idx, inside ? 1.0 : 0.0), inside ? a.val : hi};
}

inline double clamp(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }
inline Var clamp(Var a, double lo, double hi) {
    const bool inside = a.val > lo && a.val < hi;
    return {a.tape, a.tape->push1(a.idx, inside ? 1.0 : 0.0), clamp(a.val, lo, hi)};
}

// --- smooth composites recorded as single nodes ---------------------------

inline double softplus(double x) {
    return max0(x) + std::log1p(std::exp(-std::abs(x)));
}
inline Var softplus(Var a) {
    const double sig = 1.0 / (1.0 + std::exp(-a.val));
    return {a.tape, a.tape->push1(a.idx, sig), softplus(a.val)};
}

// log(sigmoid(x)) = -softplus(-x); derivative is sigmoid(-x).
inline double log_sigmoid(double x) { return -softplus(-x); }
inline Var log_sigmoid(Var a) {
    const double sig_neg = 1.0 / (1.0 + std::exp(a.val));
    return {a.tape, a.tape->push1(a.idx, sig_neg), log_sigmoid(a.val)};
}

// Wraps an unconstrained angle into [-pi, pi). Piecewise-linear with unit
// slope, so the gradient passes straight through to the raw parameter.
inline double wrap_pi(double theta) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    return theta - two_pi * std::floor((theta + two_pi / 2.0) / two_pi);
}
inline Var wrap_pi(Var a) { return {a.tape, a.tape->push1(a.idx, 1.0), wrap_pi(a.val)}; }

}  // namespace conekg::ad
