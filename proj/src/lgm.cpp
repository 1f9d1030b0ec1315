#include "vtirt/lgm.hpp"

#include <string>

namespace vtirt {

namespace {

void split_potentials(std::span<const AbilityPotential> potentials, std::vector<double>& mu,
                      std::vector<double>& lambda) {
    mu.resize(potentials.size());
    lambda.resize(potentials.size());
    for (std::size_t t = 0; t < potentials.size(); ++t) {
        const AbilityPotential& p = potentials[t];
        if (!std::isfinite(p.mu) || std::isnan(p.sigma) || !(p.sigma > 0.0)) {
            throw NumericalError("invalid ability potential at step " + std::to_string(t + 1) +
                                 ": mu=" + std::to_string(p.mu) +
                                 " sigma=" + std::to_string(p.sigma));
        }
        mu[t] = p.mu;
        lambda[t] = p.lambda();
    }
}

void check_step(std::size_t t, std::size_t T) {
    if (t < 1 || t > T) {
        throw std::out_of_range("step index " + std::to_string(t) + " outside 1.." +
                                std::to_string(T));
    }
}

}  // namespace

BackwardAggregate backward_pass(std::span<const AbilityPotential> potentials, const ModelConfig& cfg) {
    std::vector<double> mu;
    std::vector<double> lambda;
    split_potentials(potentials, mu, lambda);
    return backward_recursion<double>(mu, lambda, cfg.lambda_theta());
}

LgmPosterior::LgmPosterior(ModelConfig cfg, std::vector<AbilityPotential> potentials)
    : cfg_(cfg), potentials_(std::move(potentials)), agg_(backward_pass(potentials_, cfg_)) {}

StepConditional step_conditional(double theta_prev, std::size_t t, const LgmPosterior& post) {
    check_step(t, post.size());
    const auto& agg = post.aggregate();
    const std::size_t i = t - 1;
    return {agg.alpha[i] * theta_prev + agg.beta[i],
            post.config().sigma_theta * std::sqrt(agg.alpha[i])};
}

Marginals rollout_marginals(const LgmPosterior& post) {
    const auto& agg = post.aggregate();
    const double var_theta = post.config().sigma_theta * post.config().sigma_theta;
    Marginals out;
    out.mean.resize(post.size());
    out.variance.resize(post.size());
    double m = 0.0;
    double v = 0.0;
    for (std::size_t t = 0; t < post.size(); ++t) {
        m = agg.alpha[t] * m + agg.beta[t];
        v = agg.alpha[t] * agg.alpha[t] * v + var_theta * agg.alpha[t];
        out.mean[t] = m;
        out.variance[t] = v;
    }
    return out;
}

Trajectory sample_trajectory(const LgmPosterior& post, std::span<const double> noise) {
    if (noise.size() != post.size()) {
        throw std::invalid_argument("noise length " + std::to_string(noise.size()) +
                                    " does not match trajectory length " +
                                    std::to_string(post.size()));
    }
    return {"", sample_chain(post.aggregate(), post.config().sigma_theta, noise)};
}

double lgm_logpdf(std::span<const double> theta, const LgmPosterior& post) {
    if (theta.size() != post.size()) {
        throw std::invalid_argument("trajectory length does not match posterior length");
    }
    double total = 0.0;
    double prev = 0.0;
    for (std::size_t t = 1; t <= theta.size(); ++t) {
        const StepConditional c = step_conditional(prev, t, post);
        total += normal_logpdf(theta[t - 1], c.mu_tilde, c.sigma_tilde);
        prev = theta[t - 1];
    }
    return total;
}

double lgm_logpdf(const Trajectory& traj, const LgmPosterior& post) {
    return lgm_logpdf(std::span<const double>(traj.theta), post);
}

double step_kl(double theta_prev, std::size_t t, const LgmPosterior& post, const ModelConfig& cfg) {
    const StepConditional c = step_conditional(theta_prev, t, post);
    return gaussian_kl(c.mu_tilde, c.sigma_tilde * c.sigma_tilde, theta_prev,
                       cfg.sigma_theta * cfg.sigma_theta);
}

std::vector<double> filtered_predictive_means(std::span<const double> mu,
                                              std::span<const double> lambda, double lambda_theta) {
    const double var_theta = 1.0 / lambda_theta;
    std::vector<double> pred(mu.size());
    double m = 0.0;
    double v = 0.0;
    for (std::size_t t = 0; t < mu.size(); ++t) {
        const double v_pred = v + var_theta;
        pred[t] = m;
        // Update with potential t; precision form keeps lambda = 0 exact.
        const double prec = 1.0 / v_pred + lambda[t];
        m = (m / v_pred + lambda[t] * mu[t]) / prec;
        v = 1.0 / prec;
    }
    return pred;
}

DenseGaussian dense_oracle(std::span<const AbilityPotential> potentials, const ModelConfig& cfg) {
    const std::size_t T = potentials.size();
    if (T > kDenseOracleMaxSteps) {
        throw std::invalid_argument("dense oracle limited to " +
                                    std::to_string(kDenseOracleMaxSteps) + " steps, got " +
                                    std::to_string(T));
    }
    std::vector<double> mu;
    std::vector<double> lambda;
    split_potentials(potentials, mu, lambda);
    const double lt = cfg.lambda_theta();
    const auto n = static_cast<Eigen::Index>(T);
    Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd info(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const auto i = static_cast<std::size_t>(t);
        precision(t, t) = lt * (t + 1 < n ? 2.0 : 1.0) + lambda[i];
        if (t + 1 < n) {
            precision(t, t + 1) = -lt;
            precision(t + 1, t) = -lt;
        }
        info(t) = lambda[i] * mu[i];
    }
    DenseGaussian out;
    if (T == 0) {
        return out;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    out.covariance = llt.solve(Eigen::MatrixXd::Identity(n, n));
    out.mean = llt.solve(info);
    return out;
}

}  // namespace vtirt
