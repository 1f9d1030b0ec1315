#pragma once

// Aggregation of Gaussian ability potentials under a Wiener prior into a
// linear Gaussian chain
//
//   theta_t | theta_{t-1} ~ N(alpha_t theta_{t-1} + beta_t, sigma_theta^2 alpha_t),
//   theta_0 = 0,
//
// computed by one backward sweep over the potentials. alpha_t = 1 - rho_t
// and beta_t = rho_t tau_t; alpha and beta are carried explicitly because
// they stay well conditioned when rho_t is close to 1 or tau_t is 0/0.
//
// The recursions are templated on the scalar so the same code runs on
// doubles (inference) and on ad::Var (training).

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vtirt/core.hpp"

namespace vtirt {

// Gaussian belief N(mu, sigma^2) about the ability at one step. sigma may be
// +infinity, in which case the potential carries no information.
struct AbilityPotential {
    double mu = 0.0;
    double sigma = std::numeric_limits<double>::infinity();

    double lambda() const { return std::isinf(sigma) ? 0.0 : 1.0 / (sigma * sigma); }

    static AbilityPotential vacuous() { return {}; }
    static AbilityPotential from_logvar(double mu, double logvar) {
        return {mu, std::exp(0.5 * logvar)};
    }
};

template <class S>
struct BackwardAggregateT {
    std::vector<S> rho;
    std::vector<S> tau;
    std::vector<S> alpha;  // 1 - rho
    std::vector<S> beta;   // rho * tau

    std::size_t size() const { return rho.size(); }
};

using BackwardAggregate = BackwardAggregateT<double>;

// Backward sweep t = T..1 with rho_{T+1} = tau_{T+1} = 0. `lambda` holds the
// potential precisions; a zero precision marks a vacuous potential. When the
// tau denominator vanishes (vacuous suffix) tau_t is set to 0.
template <class S>
BackwardAggregateT<S> backward_recursion(std::span<const S> mu, std::span<const S> lambda,
                                         double lambda_theta) {
    const std::size_t T = mu.size();
    BackwardAggregateT<S> agg;
    agg.rho.resize(T);
    agg.tau.resize(T);
    agg.alpha.resize(T);
    agg.beta.resize(T);
    S rho_next = S(0.0);
    S tau_next = S(0.0);
    for (std::size_t i = T; i-- > 0;) {
        const S future = rho_next * lambda_theta;        // effective precision from t+1..T
        const S info = lambda[i] * mu[i] + future * tau_next;
        const S local = lambda[i] + future;
        const S denom = lambda_theta + local;
        agg.rho[i] = local / denom;
        agg.alpha[i] = lambda_theta / denom;
        agg.beta[i] = info / denom;
        agg.tau[i] = value_of(local) == 0.0 ? S(0.0) : info / local;
        rho_next = agg.rho[i];
        tau_next = agg.tau[i];
    }
    return agg;
}

// Reparameterized draw theta_t = alpha_t theta_{t-1} + beta_t + sigma_theta sqrt(alpha_t) eps_t.
template <class S>
std::vector<S> sample_chain(const BackwardAggregateT<S>& agg, double sigma_theta,
                            std::span<const double> noise) {
    using std::sqrt;
    std::vector<S> theta(agg.size());
    S prev = S(0.0);
    for (std::size_t t = 0; t < agg.size(); ++t) {
        prev = agg.alpha[t] * prev + agg.beta[t] + sigma_theta * sqrt(agg.alpha[t]) * noise[t];
        theta[t] = prev;
    }
    return theta;
}

// KL( N(mean_q, var_q) || N(mean_p, var_p) ) for scalars.
template <class S, class P, class V>
S gaussian_kl(const S& mean_q, const S& var_q, const P& mean_p, const V& var_p) {
    using std::log;
    const S diff = mean_q - mean_p;
    return 0.5 * (log(var_p) - log(var_q)) + (var_q + diff * diff) / (2.0 * var_p) - 0.5;
}

// Sum over t of KL(q(theta_t | theta_{t-1}) || p(theta_t | theta_{t-1})) along
// a trajectory, with both conditionals Gaussian.
template <class S>
S chain_step_kl_sum(const BackwardAggregateT<S>& agg, std::span<const S> theta,
                    double sigma_theta) {
    using std::log;
    const double var_p = sigma_theta * sigma_theta;
    S total = S(0.0);
    S prev = S(0.0);
    for (std::size_t t = 0; t < agg.size(); ++t) {
        // KL(N(m, var_p alpha) || N(prev, var_p)) = -log(alpha)/2 + (alpha - 1)/2 + (m - prev)^2 / (2 var_p)
        const S shift = agg.alpha[t] * prev + agg.beta[t] - prev;
        total += -0.5 * log(agg.alpha[t]) + 0.5 * (agg.alpha[t] - 1.0) + shift * shift / (2.0 * var_p);
        prev = theta[t];
    }
    return total;
}

// The variational ability trajectory: prior config, the potentials and their
// backward aggregate.
class LgmPosterior {
public:
    LgmPosterior(ModelConfig cfg, std::vector<AbilityPotential> potentials);

    const ModelConfig& config() const { return cfg_; }
    const std::vector<AbilityPotential>& potentials() const { return potentials_; }
    const BackwardAggregate& aggregate() const { return agg_; }
    std::size_t size() const { return potentials_.size(); }

private:
    ModelConfig cfg_;
    std::vector<AbilityPotential> potentials_;
    BackwardAggregate agg_;
};

// Rejects non-finite means or non-positive / NaN scales.
BackwardAggregate backward_pass(std::span<const AbilityPotential> potentials, const ModelConfig& cfg);

struct StepConditional {
    double mu_tilde;
    double sigma_tilde;
};

// Conditional of theta_t given theta_{t-1}; t is 1-based.
StepConditional step_conditional(double theta_prev, std::size_t t, const LgmPosterior& post);

struct Marginals {
    std::vector<double> mean;
    std::vector<double> variance;
};

Marginals rollout_marginals(const LgmPosterior& post);

Trajectory sample_trajectory(const LgmPosterior& post, std::span<const double> noise);

double lgm_logpdf(std::span<const double> theta, const LgmPosterior& post);
double lgm_logpdf(const Trajectory& traj, const LgmPosterior& post);

// KL(q(theta_t | theta_prev) || N(theta_prev, sigma_theta^2)); t is 1-based.
double step_kl(double theta_prev, std::size_t t, const LgmPosterior& post, const ModelConfig& cfg);

// Means of theta_t given the potentials strictly before t, for t = 1..T.
// Kalman filter in moment form; equivalent to the last smoothed mean of the
// prefix 1..t-1 extended by one vacuous step.
std::vector<double> filtered_predictive_means(std::span<const double> mu,
                                              std::span<const double> lambda, double lambda_theta);

inline constexpr std::size_t kDenseOracleMaxSteps = 64;

struct DenseGaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

// Joint Gaussian from the tridiagonal precision of prior times potentials,
// solved directly. T is limited to kDenseOracleMaxSteps.
DenseGaussian dense_oracle(std::span<const AbilityPotential> potentials, const ModelConfig& cfg);

}  // namespace vtirt
