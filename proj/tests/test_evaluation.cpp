#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "vtirt/evaluation.hpp"
#include "vtirt/synthgen.hpp"

using namespace vtirt;

TEST_CASE("pearson") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const std::vector<double> y{1.0, 2.0, 4.0};
    const std::vector<double> neg{-1.0, -2.0, -3.0};
    CHECK(*pearson(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*pearson(x, neg) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(*pearson(x, y) == doctest::Approx(0.981980506061965685).epsilon(1e-14));
    const std::vector<double> flat{2.0, 2.0, 2.0};
    CHECK_FALSE(pearson(x, flat).has_value());
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(pearson(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("pearson is invariant under positive affine maps") {
    std::mt19937_64 gen(89);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> x(20);
        std::vector<double> y(20);
        for (std::size_t i = 0; i < 20; ++i) {
            x[i] = n(gen);
            y[i] = 0.5 * x[i] + n(gen);
        }
        const double r = *pearson(x, y);
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
        const double scale = std::exp(n(gen));
        const double shift = 5.0 * n(gen);
        std::vector<double> x2 = x;
        for (double& v : x2) {
            v = scale * v + shift;
        }
        CHECK(*pearson(x2, y) == doctest::Approx(r).epsilon(1e-12));
        CHECK(*pearson(y, x2) == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("auroc") {
    const std::vector<int> labels{1, 0, 1, 0};
    CHECK(*auroc(labels, std::vector<double>{0.9, 0.1, 0.8, 0.2}) == 1.0);
    CHECK(*auroc(labels, std::vector<double>{0.5, 0.5, 0.5, 0.5}) == 0.5);
    CHECK(*auroc(labels, std::vector<double>{0.9, 0.8, 0.7, 0.1}) == 0.75);
    CHECK_FALSE(auroc(std::vector<int>{1, 1}, std::vector<double>{0.2, 0.3}).has_value());
    CHECK_THROWS_AS(auroc(labels, std::vector<double>{0.1}), std::invalid_argument);
}

TEST_CASE("auroc matches brute force and ignores monotone transforms") {
    std::mt19937_64 gen(97);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        std::vector<int> labels(40);
        std::vector<double> scores(40);
        for (std::size_t i = 0; i < 40; ++i) {
            labels[i] = n(gen) > 0 ? 1 : 0;
            scores[i] = std::round(3.0 * (n(gen) + labels[i])) / 3.0;  // plenty of ties
        }
        double wins = 0.0;
        double pairs = 0.0;
        for (std::size_t i = 0; i < 40; ++i) {
            for (std::size_t j = 0; j < 40; ++j) {
                if (labels[i] == 1 && labels[j] == 0) {
                    pairs += 1.0;
                    wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
                }
            }
        }
        const auto a = auroc(labels, scores);
        if (pairs == 0.0) {
            CHECK_FALSE(a.has_value());
            continue;
        }
        CHECK(*a == doctest::Approx(wins / pairs).epsilon(1e-14));
        std::vector<double> t = scores;
        for (double& v : t) {
            v = std::exp(3.0 * v) + std::atan(v);
        }
        CHECK(*auroc(labels, t) == doctest::Approx(*a).epsilon(1e-14));
    }
}

TEST_CASE("k-fold learner split") {
    SynthConfig s;
    s.n_learners = 23;
    s.n_items = 2;
    const auto records = simulate(s).records;
    const auto folds = kfold_learners(records, 5, 7);
    CHECK(folds.size() == 23);
    std::vector<int> sizes(5, 0);
    for (const auto& [id, f] : folds) {
        ++sizes[static_cast<std::size_t>(f)];
    }
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);

    std::set<std::string> seen;
    std::size_t total = 0;
    for (int f = 0; f < 5; ++f) {
        const auto in = select_fold(records, 5, f, 7, true);
        const auto out = select_fold(records, 5, f, 7, false);
        CHECK(in.size() + out.size() == records.size());
        std::set<std::string> in_ids;
        for (const auto& r : in) {
            in_ids.insert(r.learner_id);
        }
        for (const auto& r : out) {
            CHECK(in_ids.count(r.learner_id) == 0);
        }
        for (const auto& id : in_ids) {
            CHECK(seen.insert(id).second);
        }
        total += in.size();
    }
    CHECK(total == records.size());
    CHECK_THROWS_AS(kfold_learners(records, 1, 0), UsageError);
    CHECK_THROWS_AS(select_fold(records, 5, 5, 0, true), UsageError);
}

namespace {

std::vector<InteractionRecord> eval_records(int learners, int items, std::uint64_t seed) {
    SynthConfig s;
    s.n_learners = learners;
    s.n_items = items;
    s.seed = seed;
    return simulate(s).records;
}

TrainedModel random_model(Variant v, const std::vector<InteractionRecord>& records, std::uint64_t seed) {
    TrainedModel m = make_model(v, collect_items(records), ModelConfig{}, seed);
    oracle::randomize(m.params, seed + 1);
    return m;
}

}  // namespace

TEST_CASE("first-step predictions use the prior ability") {
    const auto records = eval_records(6, 5, 1);
    for (Variant v : {Variant::vtirt, Variant::dir_loc, Variant::vibo_poe}) {
        const TrainedModel m = random_model(v, records, 3);
        const PredictionSet set = next_step_predictions(m, records);
        REQUIRE(set.predictions.size() == records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].step == 1) {
                const ItemParams it = m.item_posterior().mean(records[i].item_id);
                CHECK(set.predictions[i].predicted == doctest::Approx(irt2pl_prob(0.0, it)).epsilon(1e-15));
            }
            CHECK(set.predictions[i].actual == records[i].correct);
            CHECK(set.predictions[i].learner_id == records[i].learner_id);
        }
    }
}

TEST_CASE("near-vacuous recognition predicts at the prior everywhere") {
    const auto records = eval_records(4, 6, 2);
    TrainedModel m = random_model(Variant::vtirt, records, 5);
    for (auto& w : m.params.at("net.w2").value) w = 0.0;
    m.params.at("net.b2").value = {3.0, kLogvarMax};
    const PredictionSet set = next_step_predictions(m, records);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const ItemParams it = m.item_posterior().mean(records[i].item_id);
        CHECK(set.predictions[i].predicted == doctest::Approx(irt2pl_prob(0.0, it)).epsilon(1e-3));
    }
}

TEST_CASE("second-step prediction equals the propagated one-step smoothed mean") {
    const std::vector<InteractionRecord> records{{"L", "i0", 1, 1, {}}, {"L", "i1", 0, 2, {}}};
    TrainedModel m = random_model(Variant::vtirt, records, 7);
    const PredictionSet set = next_step_predictions(m, records);
    const ItemPosterior items = m.item_posterior();
    const ItemParams i0 = items.mean("i0");
    const AbilityPotential p = potential_forward(i0.a, i0.d, 1, m.net());
    const DenseGaussian g = dense_oracle(std::vector<AbilityPotential>{p, AbilityPotential::vacuous()}, m.model);
    const DenseGaussian g1 = dense_oracle(std::vector<AbilityPotential>{p}, m.model);
    CHECK(g.mean(1) == doctest::Approx(g1.mean(0)).epsilon(1e-12));
    CHECK(set.predictions[1].predicted == doctest::Approx(irt2pl_prob(g.mean(1), items.mean("i1"))).epsilon(1e-12));
}

TEST_CASE("transfer aggregation differs from product of experts") {
    const auto records = eval_records(5, 8, 3);
    const TrainedModel m = random_model(Variant::vibo_poe, records, 9);
    const PredictionSet own = next_step_predictions(m, records);
    const PredictionSet lgm = next_step_predictions(m, records, Aggregation::lgm);
    int differ = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        differ += own.predictions[i].predicted != lgm.predictions[i].predicted;
    }
    CHECK(differ > 0);
    const TrainedModel d = random_model(Variant::dir_loc, records, 9);
    CHECK_THROWS_AS(next_step_predictions(d, records, Aggregation::lgm), UsageError);
}

TEST_CASE("knowledge-component predictions average the component abilities") {
    std::vector<InteractionRecord> records{
        {"A", "x", 1, 1, {"k1"}}, {"A", "y", 0, 2, {"k2"}}, {"A", "z", 1, 3, {"k1", "k2"}},
    };
    TrainedModel m = random_model(Variant::vtirt, records, 13);
    const PredictionSet set = next_step_predictions(m, records);
    const ItemPosterior items = m.item_posterior();
    const double lt = m.model.lambda_theta();
    auto filtered_after = [&](const InteractionRecord& r) {
        const ItemParams it = items.mean(r.item_id);
        const AbilityPotential p = potential_forward(it.a, it.d, r.correct, m.net());
        const std::vector<double> mu{p.mu, 0.0};
        const std::vector<double> lam{p.lambda(), 0.0};
        return filtered_predictive_means(mu, lam, lt)[1];
    };
    const double theta = 0.5 * (filtered_after(records[0]) + filtered_after(records[1]));
    CHECK(set.predictions[2].predicted == doctest::Approx(irt2pl_prob(theta, items.mean("z"))).epsilon(1e-12));
    CHECK(set.predictions[1].predicted == doctest::Approx(irt2pl_prob(0.0, items.mean("y"))).epsilon(1e-15));
}

TEST_CASE("unknown items are flagged") {
    const auto train = eval_records(3, 4, 4);
    const TrainedModel m = random_model(Variant::vtirt, train, 2);
    std::vector<InteractionRecord> test{{"Z", "unseen", 1, 1, {}}, {"Z", train[0].item_id, 0, 2, {}}};
    const PredictionSet set = next_step_predictions(m, test);
    CHECK(set.unknown_items);
    CHECK(set.predictions[0].predicted == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("predictions never look ahead") {
    const auto records = eval_records(30, 12, 5);
    for (Variant v : {Variant::vtirt, Variant::dir_loc, Variant::vibo_poe}) {
        const TrainedModel m = random_model(v, records, 21);
        const PredictionSet base = next_step_predictions(m, records);
        std::mt19937_64 gen(101);
        for (int trial = 0; trial < 40; ++trial) {
            const std::size_t l = gen() % 30;
            const std::int64_t t = 1 + static_cast<std::int64_t>(gen() % 12);
            std::vector<InteractionRecord> mutated = records;
            std::vector<int> tail;
            for (const auto& r : mutated) {
                if (r.learner_id == records[l * 12].learner_id && r.step >= t) {
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
                auto& r = mutated[i];
                if (r.learner_id == records[l * 12].learner_id && r.step >= t) {
                    if (r.step == t) {
                        at = i;
                    }
                    r.correct = tail[k++];
                }
            }
            const PredictionSet after = next_step_predictions(m, mutated);
            CHECK(after.predictions[at].predicted == base.predictions[at].predicted);
        }
    }
}

TEST_CASE("recovery_report") {
    SynthConfig s;
    s.n_learners = 200;
    s.n_items = 20;
    s.seed = 8;
    const SynthDataset data = simulate(s);

    SUBCASE("ground-truth plug-in") {
        // Items fixed at the truth and a recognition "net" whose potentials
        // sit on the true abilities with tiny variance: emulate it through
        // the kernel directly on the true trajectories.
        std::vector<double> est;
        std::vector<double> ref;
        for (const auto& [id, traj] : data.true_abilities) {
            std::vector<AbilityPotential> pots;
            for (double th : traj.theta) {
                pots.push_back({th, 1e-4});
            }
            const Marginals m = rollout_marginals(LgmPosterior(s.model, pots));
            est.insert(est.end(), m.mean.begin(), m.mean.end());
            ref.insert(ref.end(), traj.theta.begin(), traj.theta.end());
        }
        CHECK(*pearson(est, ref) >= 0.999);
    }
    SUBCASE("untrained model") {
        const TrainedModel m = make_model(Variant::vtirt, collect_items(data.records), s.model, 0);
        const RecoveryReport r = recovery_report(m, data);
        // Untrained recognition ignores the response: constant potentials
        // give every learner the same trajectory.
        CHECK_FALSE(r.ability_r.has_value());
        CHECK_FALSE(r.discrimination_r.has_value());
        CHECK(r.inference_seconds >= 0.0);
    }
    SUBCASE("random model on the data") {
        const TrainedModel m = random_model(Variant::vtirt, data.records, 4);
        const RecoveryReport r = recovery_report(m, data);
        REQUIRE(r.ability_r.has_value());
        CHECK(std::abs(*r.ability_r) <= 1.0);
        REQUIRE(r.difficulty_r.has_value());
    }
}

TEST_CASE("bench_inference") {
    SynthConfig s;
    s.n_learners = 5;
    s.n_items = 10;
    const auto records = simulate(s).records;
    const TrainedModel m = random_model(Variant::vtirt, records, 1);
    const std::vector<std::size_t> lengths{5, 10};
    CHECK(bench_inference(m, 0, lengths).empty());
    const auto rows = bench_inference(m, 50, lengths, 3);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].length == 5);
    CHECK(rows[1].trajectories == 50);
    CHECK(rows[1].seconds > 0.0);
    CHECK(rows[1].seconds_stddev >= 0.0);
}
