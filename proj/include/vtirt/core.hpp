#pragma once

// Domain types shared by every module, the 2PL response model and the
// Wiener ability prior.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vtirt {

// Error categories. The CLI maps them onto exit codes 2/3/4.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    double sigma_theta = 0.25;  // Wiener step std
    double sigma_a = 1.0;       // a_q ~ N(1, sigma_a^2)
    double sigma_d = 1.0;       // d_q ~ N(0, sigma_d^2)

    double lambda_theta() const { return 1.0 / (sigma_theta * sigma_theta); }

    // Throws UsageError unless all three scales are strictly positive and
    // the ability precision is finite.
    void validate() const;
};

struct ItemParams {
    std::string item_id;
    double a = 1.0;
    double d = 0.0;
};

struct InteractionRecord {
    std::string learner_id;
    std::string item_id;
    int correct = 0;
    std::int64_t step = 0;
    std::vector<std::string> kcs;
};

struct Trajectory {
    std::string learner_id;
    std::vector<double> theta;
};

inline constexpr double kLog2Pi = 1.8378770664093454836;

// Scalar primitives. The templated code in the kernel and the recognition
// net calls these unqualified so that the autodiff overloads in vtirt::ad
// are picked up through ADL.
inline double value_of(double x) { return x; }

inline double sigmoid(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double log_sigmoid(double x) {
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
}

inline double clamp_value(double x, double lo, double hi) {
    return x < lo ? lo : (x > hi ? hi : x);
}

// Linking function f(a(theta - d)).
template <class S, class P>
S irt2pl_logit(const S& theta, const P& a, const P& d) {
    return a * (theta - d);
}

double irt2pl_prob(double theta, const ItemParams& item);

// log p(correct | theta, item) with log f(x) = log_sigmoid(x) and
// log(1 - f(x)) = log_sigmoid(-x).
template <class S>
S bernoulli_loglik_of_logit(int correct, const S& logit) {
    return correct ? log_sigmoid(logit) : log_sigmoid(-logit);
}

double bernoulli_loglik(int correct, double theta, const ItemParams& item);

// log N(x; mean, sd^2)
inline double normal_logpdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * kLog2Pi - std::log(sd) - 0.5 * z * z;
}

// Sum of log N(theta_t; theta_{t-1}, sigma_theta^2) with theta_0 = 0.
double wiener_logpdf(std::span<const double> theta, const ModelConfig& cfg);
double wiener_logpdf(const Trajectory& traj, const ModelConfig& cfg);

}  // namespace vtirt
