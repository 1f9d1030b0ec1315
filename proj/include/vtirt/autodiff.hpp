#pragma once

// Minimal reverse-mode scalar tape.
//
// Every differentiable operation appends one node holding at most two parent
// indices and the local partial derivatives. A Var with id < 0 is a constant
// and never reaches the tape. Operations record onto the thread's active
// tape, installed by TapeScope.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "vtirt/core.hpp"

namespace vtirt::ad {

class Tape {
public:
    int leaf() { return push(-1, 0.0, -1, 0.0); }

    int push(int a, double da, int b, double db) {
        nodes_.push_back(Node{a, b, da, db});
        return static_cast<int>(nodes_.size()) - 1;
    }

    void clear() { nodes_.clear(); }
    std::size_t size() const { return nodes_.size(); }

    // Adjoints of every node with respect to `output`.
    std::vector<double> adjoints(int output) const;

private:
    struct Node {
        int a;
        int b;
        double da;
        double db;
    };
    std::vector<Node> nodes_;
};

Tape*& active_tape();

class TapeScope {
public:
    explicit TapeScope(Tape& tape) : previous_(active_tape()) { active_tape() = &tape; }
    ~TapeScope() { active_tape() = previous_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

struct Var {
    double val = 0.0;
    int id = -1;

    Var() = default;
    Var(double v) : val(v) {}  // NOLINT: constants convert implicitly
    Var(double v, int i) : val(v), id(i) {}

    bool is_constant() const { return id < 0; }

    Var& operator+=(const Var& o);
    Var& operator-=(const Var& o);
    Var& operator*=(const Var& o);
    Var& operator/=(const Var& o);
};

// Fresh independent variable on the active tape.
inline Var variable(double v) { return Var(v, active_tape()->leaf()); }

namespace detail {
inline Var unary(double v, const Var& x, double dx) {
    if (x.is_constant()) {
        return Var(v);
    }
    return Var(v, active_tape()->push(x.id, dx, -1, 0.0));
}
inline Var binary(double v, const Var& x, double dx, const Var& y, double dy) {
    if (x.is_constant()) {
        return unary(v, y, dy);
    }
    if (y.is_constant()) {
        return unary(v, x, dx);
    }
    return Var(v, active_tape()->push(x.id, dx, y.id, dy));
}
}  // namespace detail

inline Var operator+(const Var& x, const Var& y) {
    return detail::binary(x.val + y.val, x, 1.0, y, 1.0);
}
inline Var operator-(const Var& x, const Var& y) {
    return detail::binary(x.val - y.val, x, 1.0, y, -1.0);
}
inline Var operator*(const Var& x, const Var& y) {
    return detail::binary(x.val * y.val, x, y.val, y, x.val);
}
inline Var operator/(const Var& x, const Var& y) {
    const double q = x.val / y.val;
    return detail::binary(q, x, 1.0 / y.val, y, -q / y.val);
}
inline Var operator-(const Var& x) { return detail::unary(-x.val, x, -1.0); }

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

inline double value_of(const Var& x) { return x.val; }

inline Var exp(const Var& x) {
    const double e = std::exp(x.val);
    return detail::unary(e, x, e);
}
inline Var log(const Var& x) { return detail::unary(std::log(x.val), x, 1.0 / x.val); }
inline Var log1p(const Var& x) {
    return detail::unary(std::log1p(x.val), x, 1.0 / (1.0 + x.val));
}
inline Var sqrt(const Var& x) {
    const double s = std::sqrt(x.val);
    return detail::unary(s, x, 0.5 / s);
}
inline Var sigmoid(const Var& x) {
    const double s = vtirt::sigmoid(x.val);
    return detail::unary(s, x, s * (1.0 - s));
}
inline Var log_sigmoid(const Var& x) {
    return detail::unary(vtirt::log_sigmoid(x.val), x, vtirt::sigmoid(-x.val));
}
inline Var gelu(const Var& x) {
    const double cdf = 0.5 * (1.0 + std::erf(x.val * std::numbers::sqrt2 / 2.0));
    const double pdf = std::exp(-0.5 * x.val * x.val) / std::sqrt(2.0 * std::numbers::pi);
    return detail::unary(x.val * cdf, x, cdf + x.val * pdf);
}
// Saturates to a constant outside [lo, hi]; the gradient there is zero.
inline Var clamp_value(const Var& x, double lo, double hi) {
    if (x.val < lo) {
        return Var(lo);
    }
    if (x.val > hi) {
        return Var(hi);
    }
    return x;
}

}  // namespace vtirt::ad
