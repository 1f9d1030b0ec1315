// Acceptance checks on synthetic data. One PASS/FAIL line per criterion;
// exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vtirt/evaluation.hpp"
#include "vtirt/lgm.hpp"
#include "vtirt/recognition.hpp"
#include "vtirt/synthgen.hpp"
#include "vtirt/training.hpp"

using namespace vtirt;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) {
        ++failures;
    }
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

constexpr double kSigmaTheta = 0.25;
constexpr int kFolds = 5;

TrainConfig train_config(Variant v, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.variant = v;
    cfg.seed = seed;
    cfg.epochs = 100;
    cfg.batch_size = 32;
    cfg.learning_rate = 3e-3;
    cfg.model = ModelConfig{kSigmaTheta, 1.0, 1.0};
    return cfg;
}

SynthDataset synthetic(std::uint64_t seed) {
    SynthConfig s;
    s.n_learners = 1000;
    s.n_items = 50;
    s.model = ModelConfig{kSigmaTheta, 1.0, 1.0};
    s.seed = seed;
    return simulate(s);
}

void kernel_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.5);
    const double sigmas[] = {0.1, 0.25, 1.0, 4.0};
    double worst = 0.0;
    int instances = 0;
    int vacuous = 0;
    for (int k = 0; k < 400; ++k) {
        const std::size_t T = 1 + static_cast<std::size_t>(k % 10);
        const ModelConfig cfg{sigmas[(k / 10) % 4], 1.0, 1.0};
        std::vector<AbilityPotential> pots(T);
        for (auto& p : pots) {
            p.mu = n(gen);
            if (u(gen) < 0.3) {
                p.sigma = std::numeric_limits<double>::infinity();
                ++vacuous;
            } else {
                p.sigma = std::exp(2.0 * u(gen) - 1.0);
            }
        }
        const Marginals m = rollout_marginals(LgmPosterior(cfg, pots));
        const DenseGaussian g = dense_oracle(pots, cfg);
        for (std::size_t t = 0; t < T; ++t) {
            const auto i = static_cast<Eigen::Index>(t);
            auto rel = [](double x, double ref) {
                return ref == 0.0 ? std::abs(x) : std::abs(x - ref) / std::abs(ref);
            };
            worst = std::max({worst, rel(m.mean[t], g.mean(i)), rel(m.variance[t], g.covariance(i, i))});
        }
        ++instances;
    }
    const double secs = seconds_since(t0);
    report(1, "kernel-oracle equivalence", instances >= 200 && vacuous > 0 && worst <= 1e-8 && secs < 5.0,
           fmt("%d instances (%d vacuous potentials), max rel error %.2e (<= 1e-8), %.3f s (< 5 s)", instances,
               vacuous, worst, secs));
}

void gradient_fidelity() {
    const auto t0 = Clock::now();
    const std::vector<InteractionRecord> records{
        {"L0", "i0", 1, 1, {}}, {"L0", "i1", 0, 2, {}}, {"L0", "i2", 1, 3, {}},
        {"L1", "i2", 0, 1, {}}, {"L1", "i0", 1, 2, {}}, {"L1", "i1", 1, 3, {}},
    };
    double worst = 0.0;
    std::string where;
    std::size_t coords = 0;
    for (Variant v : {Variant::vtirt, Variant::dir_loc, Variant::vibo_poe}) {
        TrainedModel model = make_model(v, collect_items(records), ModelConfig{0.4, 1.0, 1.0}, 3);
        oracle::randomize(model.params, 17);
        const std::vector<Sequence> seqs = build_sequences(records, model.items);
        const Batch batch = full_batch(seqs);
        Rng rng(23);
        const ElboNoise noise = draw_noise(batch, model.items.size(), rng);
        model.params.zero_grad();
        batch_elbo_with_gradients(model, batch, noise);
        const auto gc = oracle::check_gradients(model.params, [&] { return batch_elbo(model, batch, noise); }, 1e-5);
        coords += gc.coordinates;
        if (gc.max_rel_error >= worst) {
            worst = gc.max_rel_error;
            where = to_string(v) + " " + gc.worst;
        }
    }
    const double secs = seconds_since(t0);
    report(2, "gradient fidelity", worst <= 1e-4 && secs < 30.0,
           fmt("%zu coordinates over 3 variants, max rel error %.2e (<= 1e-4) at %s, %.3f s (< 30 s)", coords, worst,
               where.c_str(), secs));
}

double or_zero(const std::optional<double>& r) { return r.value_or(0.0); }

void recovery(const TrainedModel& trained, const SynthDataset& data, double train_secs) {
    const RecoveryReport fit = recovery_report(trained, data);
    const TrainedModel control =
        make_model(Variant::vtirt, collect_items(data.records), trained.model, 0);
    const RecoveryReport base = recovery_report(control, data);
    const double ab = or_zero(fit.ability_r);
    const double di = or_zero(fit.difficulty_r);
    const double ds = or_zero(fit.discrimination_r);
    const bool ok = ab >= 0.70 && di >= 0.85 && ds >= 0.50 && ab - or_zero(base.ability_r) >= 0.3 &&
                    di - or_zero(base.difficulty_r) >= 0.3 && ds - or_zero(base.discrimination_r) >= 0.3 &&
                    train_secs <= 1800.0;
    report(3, "synthetic recovery 1000x50", ok,
           fmt("ability r %.4f (>= 0.70, control %.4f), difficulty r %.4f (>= 0.85, control %.4f), "
               "discrimination r %.4f (>= 0.50, control %.4f), training %.1f s (<= 1800 s)",
               ab, or_zero(base.ability_r), di, or_zero(base.difficulty_r), ds, or_zero(base.discrimination_r),
               train_secs));
}

struct SeedModels {
    std::vector<InteractionRecord> test;
    TrainedModel vtirt_model;
    TrainedModel dir_loc_model;
    TrainedModel vibo_model;
};

SeedModels train_split(std::uint64_t seed) {
    const SynthDataset data = synthetic(seed);
    const auto train = select_fold(data.records, kFolds, 0, seed, false);
    SeedModels out;
    out.test = select_fold(data.records, kFolds, 0, seed, true);
    out.vtirt_model = fit(train, train_config(Variant::vtirt, seed));
    out.dir_loc_model = fit(train, train_config(Variant::dir_loc, seed));
    out.vibo_model = fit(train, train_config(Variant::vibo_poe, seed));
    return out;
}

void grid_check(const TrainedModel& model) {
    const PotentialNet net = model.net();
    const GridSpec spec{0.5, 2.0, 16, -2.0, 2.0, 17};
    const PotentialGrid right = potential_grid(net, 1, spec);
    const PotentialGrid wrong = potential_grid(net, 0, spec);
    int ordered = 0;
    int points = 0;
    int monotone_rows = 0;
    for (std::size_t i = 0; i < right.d.size(); ++i) {
        bool monotone = true;
        for (std::size_t j = 0; j < right.a.size(); ++j) {
            ++points;
            ordered += right.mu[i][j] > wrong.mu[i][j];
            if (j > 0) {
                const double prev = 0.5 * (right.logvar[i][j - 1] + wrong.logvar[i][j - 1]);
                const double cur = 0.5 * (right.logvar[i][j] + wrong.logvar[i][j]);
                monotone = monotone && cur <= prev;
            }
        }
        monotone_rows += monotone;
    }
    const double frac = static_cast<double>(monotone_rows) / static_cast<double>(right.d.size());
    report(7, "potential grid interpretability", ordered == points && frac >= 0.9,
           fmt("correct mean above incorrect at %d/%d points, mean log-variance nonincreasing in a on %d/%zu "
               "difficulty rows (%.3f >= 0.9)",
               ordered, points, monotone_rows, right.d.size(), frac));
}

void speed(const TrainedModel& model) {
    const std::vector<std::size_t> lengths{50, 100};
    const auto rows = bench_inference(model, 10000, lengths, 3, 5);
    const double ratio = rows[1].seconds / rows[0].seconds;
    report(6, "amortized inference scaling", ratio <= 2.5,
           fmt("10000 trajectories: T=50 %.3f s, T=100 %.3f s, ratio %.3f (<= 2.5)", rows[0].seconds,
               rows[1].seconds, ratio));
}

void leakage(const std::vector<InteractionRecord>& records,
             const std::vector<std::pair<const TrainedModel*, Aggregation>>& models) {
    std::vector<std::string> learners;
    for (const auto& r : records) {
        if (learners.empty() || learners.back() != r.learner_id) {
            learners.push_back(r.learner_id);
        }
    }
    std::mt19937_64 gen(808);
    int pairs = 0;
    int changed = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::string& id = learners[gen() % learners.size()];
        std::vector<InteractionRecord> own;
        for (const auto& r : records) {
            if (r.learner_id == id) {
                own.push_back(r);
            }
        }
        const std::int64_t t = own[gen() % own.size()].step;
        std::vector<InteractionRecord> mutated = own;
        std::vector<int> tail;
        for (const auto& r : mutated) {
            if (r.step >= t) {
                tail.push_back(r.correct);
            }
        }
        std::shuffle(tail.begin(), tail.end(), gen);
        for (auto& x : tail) {
            if (gen() % 2) {
                x = 1 - x;
            }
        }
        std::size_t k = 0;
        std::size_t at = 0;
        for (std::size_t i = 0; i < mutated.size(); ++i) {
            if (mutated[i].step >= t) {
                if (mutated[i].step == t) {
                    at = i;
                }
                mutated[i].correct = tail[k++];
            }
        }
        ++pairs;
        for (const auto& [model, agg] : models) {
            const PredictionSet before = next_step_predictions(*model, own, agg);
            const PredictionSet after = next_step_predictions(*model, mutated, agg);
            changed += before.predictions[at].predicted != after.predictions[at].predicted;
        }
    }
    report(8, "leakage mutation", pairs == 100 && changed == 0,
           fmt("%d (learner, t) pairs x %zu models, %d predictions at t changed (== 0)", pairs, models.size(),
               changed));
}

}  // namespace

int main() {
    kernel_oracle();
    gradient_fidelity();

    const SynthDataset data = synthetic(0);
    const auto t0 = Clock::now();
    const TrainedModel full = fit(data.records, train_config(Variant::vtirt, 0));
    const double train_secs = seconds_since(t0);
    recovery(full, data, train_secs);

    std::vector<SeedModels> seeds;
    double vt = 0.0;
    double vibo = 0.0;
    double dir = 0.0;
    double transfer = 0.0;
    std::string per_seed;
    for (std::uint64_t s = 0; s < 3; ++s) {
        seeds.push_back(train_split(s));
        const SeedModels& m = seeds.back();
        const double a_vt = or_zero(prediction_auroc(next_step_predictions(m.vtirt_model, m.test)));
        const double a_dir = or_zero(prediction_auroc(next_step_predictions(m.dir_loc_model, m.test)));
        const double a_vibo = or_zero(prediction_auroc(next_step_predictions(m.vibo_model, m.test)));
        const double a_tr =
            or_zero(prediction_auroc(next_step_predictions(m.vibo_model, m.test, Aggregation::lgm)));
        per_seed += fmt(" seed %llu: vtirt %.4f vibo_poe %.4f dir_loc %.4f transfer %.4f;",
                        static_cast<unsigned long long>(s), a_vt, a_vibo, a_dir, a_tr);
        vt += a_vt / 3.0;
        vibo += a_vibo / 3.0;
        dir += a_dir / 3.0;
        transfer += a_tr / 3.0;
    }
    report(4, "next-step AUROC ordering", vt - vibo >= 0.005 && vt - dir >= 0.005,
           fmt("mean vtirt %.4f, vibo_poe %.4f (margin %.4f >= 0.005), dir_loc %.4f (margin %.4f >= 0.005);%s", vt,
               vibo, vt - vibo, dir, vt - dir, per_seed.c_str()));
    report(5, "transfer degradation", transfer < vt,
           fmt("mean transfer %.4f < vtirt %.4f (gap %.4f)", transfer, vt, vt - transfer));

    speed(full);
    grid_check(full);

    const SeedModels& s0 = seeds.front();
    leakage(s0.test, {{&s0.vtirt_model, Aggregation::native},
                      {&s0.dir_loc_model, Aggregation::native},
                      {&s0.vibo_model, Aggregation::native},
                      {&s0.vibo_model, Aggregation::lgm}});
    return failures;
}
