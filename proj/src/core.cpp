#include "vtirt/core.hpp"

namespace vtirt {

void ModelConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(sigma_theta) || !positive(sigma_a) || !positive(sigma_d)) {
        throw UsageError("model scales sigma_theta, sigma_a, sigma_d must be finite and > 0");
    }
    if (!std::isfinite(lambda_theta())) {
        throw UsageError("sigma_theta too small: ability precision overflows");
    }
}

double irt2pl_prob(double theta, const ItemParams& item) {
    return sigmoid(irt2pl_logit(theta, item.a, item.d));
}

double bernoulli_loglik(int correct, double theta, const ItemParams& item) {
    return bernoulli_loglik_of_logit(correct, irt2pl_logit(theta, item.a, item.d));
}

double wiener_logpdf(std::span<const double> theta, const ModelConfig& cfg) {
    double total = 0.0;
    double prev = 0.0;
    for (double t : theta) {
        total += normal_logpdf(t, prev, cfg.sigma_theta);
        prev = t;
    }
    return total;
}

double wiener_logpdf(const Trajectory& traj, const ModelConfig& cfg) {
    return wiener_logpdf(std::span<const double>(traj.theta), cfg);
}

}  // namespace vtirt
