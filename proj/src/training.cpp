#include "vtirt/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <utility>

namespace vtirt {

namespace {

constexpr std::uint64_t kNetInitStream = 11;
constexpr std::uint64_t kSplitStream = 12;
constexpr std::uint64_t kValNoiseStream = 13;
constexpr std::uint64_t kEpochStreamBase = 1000;

void require_outputs(const TrainedModel& model, int n_out, const char* what) {
    if (model.net_layout().n_out != n_out) {
        throw UsageError(std::string(what) + " needs a network with " + std::to_string(n_out) +
                         " outputs");
    }
}

template <class B>
std::array<typename B::Scalar, 2> draw_step_item(B& bind, const ItemLayout& I, const SequenceStep& s,
                                                 const ElboNoise& noise) {
    if (s.item == kUnknownItem) {
        throw DataError("ELBO evaluation on an item outside the model vocabulary");
    }
    return item_draw(bind, I, s.item, noise.items[s.item]);
}

template <class B>
typename B::Scalar vtirt_term(B& bind, const NetLayout& N, const ItemLayout& I, const ModelConfig& cfg,
                              const Sequence& seq, const ElboNoise& noise,
                              std::span<const double> theta_noise) {
    using std::exp;
    using S = typename B::Scalar;
    const std::size_t T = seq.steps.size();
    if (T == 0) {
        return S(0.0);
    }
    std::vector<S> mu(T);
    std::vector<S> lambda(T);
    std::vector<S> a(T);
    std::vector<S> d(T);
    for (std::size_t t = 0; t < T; ++t) {
        const auto xi = draw_step_item(bind, I, seq.steps[t], noise);
        a[t] = xi[0];
        d[t] = xi[1];
        const auto out = net_forward(bind, N, a[t], d[t], seq.steps[t].correct);
        mu[t] = out[0];
        lambda[t] = exp(-clamp_value(out[1], kLogvarMin, kLogvarMax));
    }
    const auto agg = backward_recursion<S>(mu, lambda, cfg.lambda_theta());
    const std::vector<S> theta = sample_chain(agg, cfg.sigma_theta, theta_noise);
    S loglik = S(0.0);
    for (std::size_t t = 0; t < T; ++t) {
        loglik += bernoulli_loglik_of_logit(seq.steps[t].correct, irt2pl_logit(theta[t], a[t], d[t]));
    }
    return loglik - chain_step_kl_sum<S>(agg, theta, cfg.sigma_theta);
}

template <class B>
typename B::Scalar dir_loc_term(B& bind, const NetLayout& N, const ItemLayout& I, const ModelConfig& cfg,
                                const Sequence& seq, const ElboNoise& noise,
                                std::span<const double> theta_noise) {
    using std::exp;
    using S = typename B::Scalar;
    const double var_p = cfg.sigma_theta * cfg.sigma_theta;
    S total = S(0.0);
    S prev = S(0.0);
    for (std::size_t t = 0; t < seq.steps.size(); ++t) {
        const auto xi = draw_step_item(bind, I, seq.steps[t], noise);
        const auto out = net_forward(bind, N, xi[0], xi[1], seq.steps[t].correct);
        const S logvar = clamp_value(out[2], kLogvarMin, kLogvarMax);
        const S mean = out[0] * prev + out[1];
        total -= gaussian_kl(mean, exp(logvar), prev, var_p);
        const S theta = mean + exp(0.5 * logvar) * theta_noise[t];
        total += bernoulli_loglik_of_logit(seq.steps[t].correct, irt2pl_logit(theta, xi[0], xi[1]));
        prev = theta;
    }
    return total;
}

template <class B>
typename B::Scalar vibo_term(B& bind, const NetLayout& N, const ItemLayout& I, const ModelConfig& cfg,
                             const Sequence& seq, const ElboNoise& noise,
                             std::span<const double> theta_noise) {
    using std::exp;
    using std::sqrt;
    using S = typename B::Scalar;
    const std::size_t T = seq.steps.size();
    if (T == 0) {
        return S(0.0);
    }
    const double prior_precision = cfg.lambda_theta();
    std::vector<S> a(T);
    std::vector<S> d(T);
    S precision = S(prior_precision);
    S info = S(0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const auto xi = draw_step_item(bind, I, seq.steps[t], noise);
        a[t] = xi[0];
        d[t] = xi[1];
        const auto out = net_forward(bind, N, a[t], d[t], seq.steps[t].correct);
        const S lambda = exp(-clamp_value(out[1], kLogvarMin, kLogvarMax));
        precision += lambda;
        info += lambda * out[0];
    }
    const S mean = info / precision;
    const S var = 1.0 / precision;
    const S theta = mean + sqrt(var) * theta_noise[0];
    S loglik = S(0.0);
    for (std::size_t t = 0; t < T; ++t) {
        loglik += bernoulli_loglik_of_logit(seq.steps[t].correct, irt2pl_logit(theta, a[t], d[t]));
    }
    return loglik - gaussian_kl(mean, var, 0.0, 1.0 / prior_precision);
}

template <class B>
typename B::Scalar sequence_term(Variant v, B& bind, const NetLayout& N, const ItemLayout& I,
                                 const ModelConfig& cfg, const Sequence& seq, const ElboNoise& noise,
                                 std::span<const double> theta_noise) {
    switch (v) {
        case Variant::vtirt:
            return vtirt_term(bind, N, I, cfg, seq, noise, theta_noise);
        case Variant::dir_loc:
            return dir_loc_term(bind, N, I, cfg, seq, noise, theta_noise);
        case Variant::vibo_poe:
            return vibo_term(bind, N, I, cfg, seq, noise, theta_noise);
    }
    throw std::logic_error("unhandled variant");
}

template <class B>
typename B::Scalar weighted_item_kl(B& bind, const ItemLayout& I, const ModelConfig& cfg,
                                    const Batch& batch) {
    using S = typename B::Scalar;
    S total = S(0.0);
    for (const auto& [item, weight] : batch.item_weights) {
        total += weight * item_kl_term(bind, I, item, cfg);
    }
    return total;
}

void check_noise(const Batch& batch, const ElboNoise& noise, std::size_t n_items) {
    if (noise.theta.size() != batch.sequences.size() || noise.items.size() != n_items) {
        throw std::invalid_argument("ELBO noise does not match the batch");
    }
    for (std::size_t k = 0; k < batch.sequences.size(); ++k) {
        if (noise.theta[k].size() < batch.sequences[k]->steps.size()) {
            throw std::invalid_argument("ELBO ability noise shorter than its sequence");
        }
    }
}

double elbo_as(Variant v, const TrainedModel& model, const Batch& batch, const ElboNoise& noise) {
    check_noise(batch, noise, model.items.size());
    const NetLayout N = model.net_layout();
    const ItemLayout I = model.item_layout();
    ValueBinding bind(model.params);
    double total = 0.0;
    for (std::size_t k = 0; k < batch.sequences.size(); ++k) {
        total += sequence_term(v, bind, N, I, model.model, *batch.sequences[k], noise, noise.theta[k]);
    }
    return total - weighted_item_kl(bind, I, model.model, batch);
}

}  // namespace

std::string to_string(Variant v) {
    switch (v) {
        case Variant::vtirt:
            return "vtirt";
        case Variant::dir_loc:
            return "dir_loc";
        case Variant::vibo_poe:
            return "vibo_poe";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    if (s == "vtirt") {
        return Variant::vtirt;
    }
    if (s == "dir_loc") {
        return Variant::dir_loc;
    }
    if (s == "vibo_poe") {
        return Variant::vibo_poe;
    }
    throw UsageError("unknown variant '" + s + "' (expected vtirt, dir_loc or vibo_poe)");
}

void TrainConfig::validate() const {
    model.validate();
    if (batch_size < 1) {
        throw UsageError("batch_size must be >= 1");
    }
    if (epochs < 0) {
        throw UsageError("epochs must be >= 0");
    }
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
        throw UsageError("val_fraction must lie in [0, 1)");
    }
    if (patience < 1) {
        throw UsageError("patience must be >= 1");
    }
    if (n_samples < 1) {
        throw UsageError("n_samples must be >= 1");
    }
    if (!(learning_rate > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
        !(epsilon > 0.0)) {
        throw UsageError("invalid optimizer settings");
    }
}

TrainedModel make_model(Variant variant, std::vector<std::string> item_ids, const ModelConfig& cfg,
                        std::uint64_t seed) {
    cfg.validate();
    TrainedModel m;
    m.variant = variant;
    m.model = cfg;
    m.items = ItemVocabulary(std::move(item_ids));
    const std::uint64_t net_seed = splitmix64(seed ^ splitmix64(kNetInitStream));
    if (variant == Variant::dir_loc) {
        // Identity transition: alpha = 1, beta = 0, s = sigma_theta.
        const std::array<double, 3> bias{1.0, 0.0, std::log(cfg.sigma_theta * cfg.sigma_theta)};
        add_potential_net(m.params, bias, net_seed);
    } else {
        const std::array<double, 2> bias{0.0, 0.0};
        add_potential_net(m.params, bias, net_seed);
    }
    add_item_posterior(m.params, m.items.size());
    return m;
}

std::vector<std::string> collect_items(std::span<const InteractionRecord> records) {
    std::set<std::string> ids;
    for (const auto& r : records) {
        ids.insert(r.item_id);
    }
    return {ids.begin(), ids.end()};
}

std::vector<Sequence> build_sequences(std::span<const InteractionRecord> records,
                                      const ItemVocabulary& vocab) {
    std::map<std::pair<std::string, std::string>, Sequence> groups;
    auto add = [&](const std::string& kc, std::size_t index) {
        const InteractionRecord& r = records[index];
        auto [it, inserted] = groups.try_emplace({r.learner_id, kc});
        if (inserted) {
            it->second.learner = r.learner_id;
            it->second.kc = kc;
        }
        it->second.steps.push_back(
            SequenceStep{vocab.find(r.item_id).value_or(kUnknownItem), r.correct, r.step, index});
    };
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].kcs.empty()) {
            add("", i);
        } else {
            for (const auto& kc : records[i].kcs) {
                add(kc, i);
            }
        }
    }
    std::vector<Sequence> out;
    out.reserve(groups.size());
    for (auto& [key, seq] : groups) {
        std::stable_sort(seq.steps.begin(), seq.steps.end(),
                         [](const SequenceStep& x, const SequenceStep& y) { return x.step < y.step; });
        out.push_back(std::move(seq));
    }
    return out;
}

Batch full_batch(std::span<const Sequence> sequences) {
    Batch b;
    std::set<std::size_t> items;
    for (const auto& s : sequences) {
        b.sequences.push_back(&s);
        for (const auto& step : s.steps) {
            if (step.item != kUnknownItem) {
                items.insert(step.item);
            }
        }
    }
    for (std::size_t q : items) {
        b.item_weights.emplace_back(q, 1.0);
    }
    return b;
}

ElboNoise draw_noise(const Batch& batch, std::size_t n_items, Rng& rng) {
    ElboNoise noise;
    noise.items.assign(n_items, {0.0, 0.0});
    for (const auto& [q, w] : batch.item_weights) {
        noise.items[q] = {rng.normal(), rng.normal()};
    }
    noise.theta.reserve(batch.sequences.size());
    for (const Sequence* s : batch.sequences) {
        std::vector<double> eps(std::max<std::size_t>(s->steps.size(), 1));
        for (double& e : eps) {
            e = rng.normal();
        }
        noise.theta.push_back(std::move(eps));
    }
    return noise;
}

double elbo_vtirt(const TrainedModel& model, const Batch& batch, const ElboNoise& noise) {
    require_outputs(model, 2, "elbo_vtirt");
    return elbo_as(Variant::vtirt, model, batch, noise);
}

double elbo_dir_loc(const TrainedModel& model, const Batch& batch, const ElboNoise& noise) {
    require_outputs(model, 3, "elbo_dir_loc");
    return elbo_as(Variant::dir_loc, model, batch, noise);
}

double elbo_vibo(const TrainedModel& model, const Batch& batch, const ElboNoise& noise) {
    require_outputs(model, 2, "elbo_vibo");
    return elbo_as(Variant::vibo_poe, model, batch, noise);
}

double batch_elbo(const TrainedModel& model, const Batch& batch, const ElboNoise& noise) {
    switch (model.variant) {
        case Variant::vtirt:
            return elbo_vtirt(model, batch, noise);
        case Variant::dir_loc:
            return elbo_dir_loc(model, batch, noise);
        case Variant::vibo_poe:
            return elbo_vibo(model, batch, noise);
    }
    throw std::logic_error("unhandled variant");
}

double batch_elbo_with_gradients(TrainedModel& model, const Batch& batch, const ElboNoise& noise,
                                 double scale) {
    require_outputs(model, model.variant == Variant::dir_loc ? 3 : 2, "batch_elbo_with_gradients");
    check_noise(batch, noise, model.items.size());
    const NetLayout N = model.net_layout();
    const ItemLayout I = model.item_layout();
    const Variant v = model.variant;
    double total = 0.0;
    for (std::size_t k = 0; k < batch.sequences.size(); ++k) {
        const Sequence& seq = *batch.sequences[k];
        const std::span<const double> eps = noise.theta[k];
        total += evaluate_with_gradients(
            model.params,
            [&](TapeBinding& bind) { return sequence_term(v, bind, N, I, model.model, seq, noise, eps); },
            scale);
    }
    total -= evaluate_with_gradients(
        model.params, [&](TapeBinding& bind) { return weighted_item_kl(bind, I, model.model, batch); },
        -scale);
    return total;
}

PoePosterior poe_posterior(std::span<const AbilityPotential> potentials, double prior_precision) {
    double precision = prior_precision;
    double info = 0.0;
    for (const auto& p : potentials) {
        precision += p.lambda();
        info += p.lambda() * p.mu;
    }
    return {info / precision, 1.0 / precision};
}

std::vector<std::string> validation_learners(std::span<const InteractionRecord> records,
                                             const TrainConfig& cfg) {
    std::set<std::string> ids;
    for (const auto& r : records) {
        ids.insert(r.learner_id);
    }
    std::vector<std::string> learners(ids.begin(), ids.end());
    const std::size_t n = learners.size();
    auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(n)));
    if (cfg.val_fraction > 0.0 && n_val == 0 && n >= 2) {
        n_val = 1;
    }
    if (n_val >= n) {
        n_val = n > 0 ? n - 1 : 0;
    }
    Rng rng = Rng(cfg.seed).substream(kSplitStream);
    std::shuffle(learners.begin(), learners.end(), rng.engine());
    learners.resize(n_val);
    std::sort(learners.begin(), learners.end());
    return learners;
}

namespace {

// Per item: correlation between the response and the mean of the same
// learner's other responses.
void flip_anticorrelated_items(TrainedModel& model,
                               const std::vector<const std::vector<const Sequence*>*>& learners) {
    const std::size_t n_items = model.items.size();
    std::vector<double> n(n_items, 0.0), sx(n_items, 0.0), sy(n_items, 0.0), sxx(n_items, 0.0),
        syy(n_items, 0.0), sxy(n_items, 0.0);
    for (const auto* seqs : learners) {
        double total = 0.0;
        double count = 0.0;
        for (const Sequence* s : *seqs) {
            for (const auto& step : s->steps) {
                total += step.correct;
                count += 1.0;
            }
        }
        if (count < 2.0) {
            continue;
        }
        for (const Sequence* s : *seqs) {
            for (const auto& step : s->steps) {
                const double x = step.correct;
                const double y = (total - x) / (count - 1.0);
                const std::size_t q = step.item;
                n[q] += 1.0;
                sx[q] += x;
                sy[q] += y;
                sxx[q] += x * x;
                syy[q] += y * y;
                sxy[q] += x * y;
            }
        }
    }
    auto& mean_a = model.params.at("item.mean_a").value;
    for (std::size_t q = 0; q < n_items; ++q) {
        if (n[q] < 2.0) {
            continue;
        }
        const double cov = sxy[q] - sx[q] * sy[q] / n[q];
        if (cov < 0.0) {
            mean_a[q] = -mean_a[q];
        }
    }
}

}  // namespace

FitResult fit_with_state(std::span<const InteractionRecord> records, const TrainConfig& cfg,
                         const FitOptions& options) {
    cfg.validate();
    if (records.empty()) {
        throw DataError("cannot train on an empty dataset");
    }
    const auto started = std::chrono::steady_clock::now();

    FitResult result;
    TrainedModel& model = result.model;
    model = make_model(cfg.variant, collect_items(records), cfg.model, cfg.seed);
    const std::size_t n_items = model.items.size();
    const std::vector<Sequence> sequences = build_sequences(records, model.items);

    const std::vector<std::string> val_ids = validation_learners(records, cfg);
    const std::set<std::string> val_set(val_ids.begin(), val_ids.end());
    std::vector<Sequence> val_sequences;
    std::map<std::string, std::vector<const Sequence*>> train_by_learner;
    std::vector<double> train_count(n_items, 0.0);
    for (const auto& s : sequences) {
        if (val_set.count(s.learner)) {
            val_sequences.push_back(s);
        } else {
            train_by_learner[s.learner].push_back(&s);
            for (const auto& step : s.steps) {
                train_count[step.item] += 1.0;
            }
        }
    }
    std::vector<const std::vector<const Sequence*>*> learners;
    for (const auto& [id, seqs] : train_by_learner) {
        learners.push_back(&seqs);
    }
    if (learners.empty()) {
        throw DataError("no training learners left after the validation split");
    }

    const Batch val_batch = full_batch(val_sequences);
    std::size_t val_interactions = 0;
    for (const auto& s : val_sequences) {
        val_interactions += s.steps.size();
    }
    Rng val_rng = Rng(cfg.seed).substream(kValNoiseStream);
    const ElboNoise val_noise = draw_noise(val_batch, n_items, val_rng);

    if (cfg.sign_init && options.resume == nullptr) {
        flip_anticorrelated_items(model, learners);
    }

    TrainState& state = result.state;
    if (options.resume != nullptr) {
        state = *options.resume;
        if (state.current.total_size() != model.params.total_size()) {
            throw DataError("resume state does not match the dataset's parameter shapes");
        }
        model.params = state.current;
    } else {
        state.optimizer.learning_rate = cfg.learning_rate;
        state.optimizer.beta1 = cfg.beta1;
        state.optimizer.beta2 = cfg.beta2;
        state.optimizer.epsilon = cfg.epsilon;
        state.best = model.params;
    }

    for (int epoch = state.epochs_done + 1; epoch <= cfg.epochs && !state.stopped; ++epoch) {
        Rng rng = Rng(cfg.seed).substream(kEpochStreamBase + static_cast<std::uint64_t>(epoch));
        std::vector<std::size_t> order(learners.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::shuffle(order.begin(), order.end(), rng.engine());

        double epoch_elbo = 0.0;
        std::size_t epoch_interactions = 0;
        const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
        for (std::size_t start = 0, batch_no = 1; start < order.size(); start += batch_size, ++batch_no) {
            Batch batch;
            std::map<std::size_t, double> counts;
            std::size_t interactions = 0;
            for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
                for (const Sequence* s : *learners[order[i]]) {
                    batch.sequences.push_back(s);
                    interactions += s->steps.size();
                    for (const auto& step : s->steps) {
                        counts[step.item] += 1.0;
                    }
                }
            }
            for (const auto& [q, c] : counts) {
                batch.item_weights.emplace_back(q, c / train_count[q]);
            }
            if (interactions == 0) {
                continue;
            }
            try {
                model.params.zero_grad();
                const double scale = -1.0 / (static_cast<double>(cfg.n_samples) * static_cast<double>(interactions));
                double value = 0.0;
                for (int s = 0; s < cfg.n_samples; ++s) {
                    const ElboNoise noise = draw_noise(batch, n_items, rng);
                    value += batch_elbo_with_gradients(model, batch, noise, scale);
                }
                adam_step(model.params, state.optimizer);
                epoch_elbo += value / cfg.n_samples;
                epoch_interactions += interactions;
            } catch (const NumericalError& e) {
                throw NumericalError("epoch " + std::to_string(epoch) + " batch " +
                                     std::to_string(batch_no) + ": " + e.what());
            }
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_elbo = epoch_interactions > 0 ? epoch_elbo / static_cast<double>(epoch_interactions) : 0.0;
        if (val_interactions > 0) {
            log.val_elbo = batch_elbo(model, val_batch, val_noise) / static_cast<double>(val_interactions);
            if (!state.best_val || *log.val_elbo > *state.best_val) {
                state.best_val = log.val_elbo;
                state.best = model.params;
                state.bad_epochs = 0;
            } else if (++state.bad_epochs >= cfg.patience) {
                state.stopped = true;
            }
        } else {
            state.best = model.params;
        }
        state.epochs_done = epoch;
        log.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (options.on_epoch) {
            options.on_epoch(log);
        }
        result.log.push_back(log);
    }

    state.current = model.params;
    model.params = state.best;
    return result;
}

TrainedModel fit(std::span<const InteractionRecord> records, const TrainConfig& cfg) {
    return fit_with_state(records, cfg).model;
}

ItemParams inference_item(const TrainedModel& model, std::size_t item) {
    if (item == kUnknownItem) {
        return {"", 1.0, 0.0};
    }
    return model.item_posterior().mean(item);
}

std::vector<AbilityPotential> sequence_potentials(const TrainedModel& model, const Sequence& seq,
                                                  bool* unknown_items) {
    const PotentialNet net = model.net();
    if (net.layout().n_out != 2) {
        throw UsageError("model variant " + to_string(model.variant) + " has no ability potentials");
    }
    std::vector<AbilityPotential> out;
    out.reserve(seq.steps.size());
    for (const auto& s : seq.steps) {
        if (s.item == kUnknownItem && unknown_items != nullptr) {
            *unknown_items = true;
        }
        const ItemParams it = inference_item(model, s.item);
        out.push_back(potential_forward(it.a, it.d, s.correct, net));
    }
    return out;
}

Marginals lgm_marginals(const TrainedModel& model, const Sequence& seq, bool* unknown_items) {
    return rollout_marginals(LgmPosterior(model.model, sequence_potentials(model, seq, unknown_items)));
}

Marginals native_marginals(const TrainedModel& model, const Sequence& seq, bool* unknown_items) {
    switch (model.variant) {
        case Variant::vtirt:
            return lgm_marginals(model, seq, unknown_items);
        case Variant::vibo_poe: {
            const auto pots = sequence_potentials(model, seq, unknown_items);
            const PoePosterior p = poe_posterior(pots, model.model.lambda_theta());
            return {std::vector<double>(seq.steps.size(), p.mean),
                    std::vector<double>(seq.steps.size(), p.variance)};
        }
        case Variant::dir_loc: {
            const PotentialNet net = model.net();
            Marginals out;
            double m = 0.0;
            double v = 0.0;
            for (const auto& s : seq.steps) {
                if (s.item == kUnknownItem && unknown_items != nullptr) {
                    *unknown_items = true;
                }
                const ItemParams it = inference_item(model, s.item);
                const auto o = net.raw(it.a, it.d, s.correct);
                m = o[0] * m + o[1];
                v = o[0] * o[0] * v + std::exp(clamp_value(o[2], kLogvarMin, kLogvarMax));
                out.mean.push_back(m);
                out.variance.push_back(v);
            }
            return out;
        }
    }
    throw std::logic_error("unhandled variant");
}

namespace {
Sequence single_sequence(const TrainedModel& model, std::span<const InteractionRecord> records) {
    Sequence seq;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        seq.steps.push_back({model.items.find(r.item_id).value_or(kUnknownItem), r.correct, r.step, i});
    }
    std::stable_sort(seq.steps.begin(), seq.steps.end(),
                     [](const SequenceStep& x, const SequenceStep& y) { return x.step < y.step; });
    if (!records.empty()) {
        seq.learner = records.front().learner_id;
    }
    return seq;
}
}  // namespace

InferenceResult infer_trajectory(const TrainedModel& model, std::span<const InteractionRecord> records) {
    if (model.variant != Variant::vtirt) {
        throw UsageError("infer_trajectory needs a vtirt model, got " + to_string(model.variant));
    }
    InferenceResult r;
    r.marginals = lgm_marginals(model, single_sequence(model, records), &r.unknown_items);
    return r;
}

InferenceResult infer_transfer(const TrainedModel& vibo_model, std::span<const InteractionRecord> records) {
    if (vibo_model.variant != Variant::vibo_poe) {
        throw UsageError("infer_transfer needs a vibo_poe model, got " + to_string(vibo_model.variant));
    }
    InferenceResult r;
    r.marginals = lgm_marginals(vibo_model, single_sequence(vibo_model, records), &r.unknown_items);
    return r;
}

}  // namespace vtirt
