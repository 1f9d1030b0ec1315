#include "vtirt/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "vtirt/rng.hpp"

namespace vtirt {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("pearson: length mismatch");
    }
    if (x.size() < 2) {
        throw std::invalid_argument("pearson: need at least two points");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return std::nullopt;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> auroc(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) {
        throw std::invalid_argument("auroc: length mismatch");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    // Mid-ranks over tie groups, then the Mann-Whitney U of the positives.
    double positive_rank_sum = 0.0;
    double n_pos = 0.0;
    double n_neg = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) {
                positive_rank_sum += mid_rank;
                n_pos += 1.0;
            } else {
                n_neg += 1.0;
            }
        }
        i = j;
    }
    if (n_pos == 0.0 || n_neg == 0.0) {
        return std::nullopt;
    }
    return (positive_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

std::vector<std::pair<std::string, int>> kfold_learners(std::span<const InteractionRecord> records,
                                                        int k, std::uint64_t seed) {
    if (k < 2) {
        throw UsageError("k-fold needs k >= 2");
    }
    std::set<std::string> ids;
    for (const auto& r : records) {
        ids.insert(r.learner_id);
    }
    std::vector<std::string> shuffled(ids.begin(), ids.end());
    Rng rng(seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
    std::vector<std::pair<std::string, int>> out;
    out.reserve(shuffled.size());
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
        out.emplace_back(shuffled[i], static_cast<int>(i % static_cast<std::size_t>(k)));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<InteractionRecord> select_fold(std::span<const InteractionRecord> records, int k, int fold,
                                           std::uint64_t seed, bool in_fold) {
    if (fold < 0 || fold >= k) {
        throw UsageError("fold index must lie in [0, k)");
    }
    std::set<std::string> members;
    for (const auto& [id, f] : kfold_learners(records, k, seed)) {
        if (f == fold) {
            members.insert(id);
        }
    }
    std::vector<InteractionRecord> out;
    for (const auto& r : records) {
        if ((members.count(r.learner_id) > 0) == in_fold) {
            out.push_back(r);
        }
    }
    return out;
}

namespace {

// Mean ability for each step given only the steps before it.
std::vector<double> predictive_means(const TrainedModel& model, const Sequence& seq,
                                     Aggregation aggregation, bool* unknown) {
    const std::size_t T = seq.steps.size();
    const bool use_lgm = aggregation == Aggregation::lgm || model.variant == Variant::vtirt;
    if (model.variant == Variant::dir_loc && !use_lgm) {
        const PotentialNet net = model.net();
        std::vector<double> pred(T);
        double m = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            pred[t] = m;
            const auto& s = seq.steps[t];
            if (s.item == kUnknownItem) {
                *unknown = true;
            }
            const ItemParams it = inference_item(model, s.item);
            const auto o = net.raw(it.a, it.d, s.correct);
            m = o[0] * m + o[1];
        }
        return pred;
    }
    const auto pots = sequence_potentials(model, seq, unknown);
    std::vector<double> mu(T);
    std::vector<double> lambda(T);
    for (std::size_t t = 0; t < T; ++t) {
        mu[t] = pots[t].mu;
        lambda[t] = pots[t].lambda();
    }
    if (use_lgm) {
        return filtered_predictive_means(mu, lambda, model.model.lambda_theta());
    }
    // Product of experts over the prefix.
    std::vector<double> pred(T);
    double precision = model.model.lambda_theta();
    double info = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        pred[t] = info / precision;
        precision += lambda[t];
        info += lambda[t] * mu[t];
    }
    return pred;
}

}  // namespace

PredictionSet next_step_predictions(const TrainedModel& model, std::span<const InteractionRecord> records,
                                    Aggregation aggregation) {
    if (aggregation == Aggregation::lgm && model.variant == Variant::dir_loc) {
        throw UsageError("dir_loc models have no potentials to aggregate");
    }
    PredictionSet out;
    const std::vector<Sequence> sequences = build_sequences(records, model.items);
    std::vector<double> ability_sum(records.size(), 0.0);
    std::vector<int> ability_count(records.size(), 0);
    for (const Sequence& seq : sequences) {
        const std::vector<double> pred = predictive_means(model, seq, aggregation, &out.unknown_items);
        for (std::size_t t = 0; t < seq.steps.size(); ++t) {
            ability_sum[seq.steps[t].record] += pred[t];
            ability_count[seq.steps[t].record] += 1;
        }
    }
    out.predictions.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const InteractionRecord& r = records[i];
        const double theta = ability_sum[i] / ability_count[i];
        const ItemParams item = inference_item(model, model.items.find(r.item_id).value_or(kUnknownItem));
        out.predictions.push_back({r.learner_id, r.step, r.item_id, irt2pl_prob(theta, item), r.correct});
    }
    return out;
}

std::optional<double> prediction_auroc(const PredictionSet& set) {
    std::vector<int> labels;
    std::vector<double> scores;
    for (const auto& p : set.predictions) {
        labels.push_back(p.actual);
        scores.push_back(p.predicted);
    }
    return auroc(labels, scores);
}

namespace {
std::optional<double> maybe_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2) {
        return std::nullopt;
    }
    return pearson(x, y);
}
}  // namespace

RecoveryReport recovery_report(const TrainedModel& model, const SynthDataset& truth, Aggregation aggregation) {
    RecoveryReport report;
    const std::vector<Sequence> sequences = build_sequences(truth.records, model.items);

    const auto started = std::chrono::steady_clock::now();
    std::vector<Marginals> marginals;
    marginals.reserve(sequences.size());
    for (const auto& seq : sequences) {
        marginals.push_back(aggregation == Aggregation::lgm ? lgm_marginals(model, seq)
                                                            : native_marginals(model, seq));
    }
    report.inference_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    std::vector<double> est;
    std::vector<double> ref;
    for (std::size_t k = 0; k < sequences.size(); ++k) {
        auto it = truth.true_abilities.find(sequences[k].learner);
        if (it == truth.true_abilities.end()) {
            continue;
        }
        for (std::size_t t = 0; t < sequences[k].steps.size(); ++t) {
            const auto pos = static_cast<std::size_t>(sequences[k].steps[t].step - 1);
            if (pos < it->second.theta.size()) {
                est.push_back(marginals[k].mean[t]);
                ref.push_back(it->second.theta[pos]);
            }
        }
    }
    report.ability_r = maybe_pearson(est, ref);

    std::vector<double> a_est;
    std::vector<double> a_ref;
    std::vector<double> d_est;
    std::vector<double> d_ref;
    const ItemPosterior items = model.item_posterior();
    for (const auto& [id, p] : truth.true_items) {
        if (auto q = model.items.find(id)) {
            const ItemParams m = items.mean(*q);
            a_est.push_back(m.a);
            a_ref.push_back(p.a);
            d_est.push_back(m.d);
            d_ref.push_back(p.d);
        }
    }
    report.discrimination_r = maybe_pearson(a_est, a_ref);
    report.difficulty_r = maybe_pearson(d_est, d_ref);
    return report;
}

std::vector<BenchRow> bench_inference(const TrainedModel& model, std::size_t n_trajectories,
                                      std::span<const std::size_t> lengths, int repeats,
                                      std::uint64_t seed) {
    std::vector<BenchRow> rows;
    if (n_trajectories == 0) {
        return rows;
    }
    const std::size_t n_items = std::max<std::size_t>(model.items.size(), 1);
    for (std::size_t length : lengths) {
        Rng rng = Rng(seed).substream(length);
        std::vector<Sequence> seqs(n_trajectories);
        for (auto& s : seqs) {
            s.steps.resize(length);
            for (std::size_t t = 0; t < length; ++t) {
                const auto q = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_items)) % n_items;
                s.steps[t] = {model.items.size() > 0 ? q : kUnknownItem, rng.uniform() < 0.5 ? 1 : 0,
                              static_cast<std::int64_t>(t + 1), t};
            }
        }
        std::vector<double> times;
        double sink = 0.0;
        for (int r = 0; r < std::max(repeats, 1); ++r) {
            const auto started = std::chrono::steady_clock::now();
            for (const auto& s : seqs) {
                const Marginals m = native_marginals(model, s);
                sink += m.mean.empty() ? 0.0 : m.mean.back();
            }
            times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
        }
        if (!std::isfinite(sink)) {
            throw NumericalError("non-finite inference output during benchmark");
        }
        BenchRow row;
        row.length = length;
        row.trajectories = n_trajectories;
        row.seconds = *std::min_element(times.begin(), times.end());
        const double mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
        double var = 0.0;
        for (double t : times) {
            var += (t - mean) * (t - mean);
        }
        row.seconds_stddev = times.size() > 1 ? std::sqrt(var / static_cast<double>(times.size() - 1)) : 0.0;
        row.trajectories_per_second = row.seconds > 0 ? static_cast<double>(n_trajectories) / row.seconds : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace vtirt
