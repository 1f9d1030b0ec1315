#pragma once

// ELBO assembly for the three model variants, minibatch training and the
// amortized inference entry points.
//
//   vtirt     potentials from the recognition net, aggregated over time into
//             a linear Gaussian chain by the backward recursion
//   dir_loc   the net emits the chain's transition (alpha, beta, log s^2)
//             directly from the local (item, response)
//   vibo_poe  static ability; potentials combined as a product of experts

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtirt/core.hpp"
#include "vtirt/lgm.hpp"
#include "vtirt/params.hpp"
#include "vtirt/recognition.hpp"
#include "vtirt/rng.hpp"

namespace vtirt {

enum class Variant { vtirt, dir_loc, vibo_poe };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct TrainConfig {
    Variant variant = Variant::vtirt;
    int batch_size = 32;
    int epochs = 100;
    std::uint64_t seed = 0;
    double val_fraction = 0.1;
    int patience = 10;
    int n_samples = 1;
    ModelConfig model;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // mean_a starts at -1 for items anti-correlated with the learner's rest score
    bool sign_init = true;

    void validate() const;
};

struct TrainedModel {
    Variant variant = Variant::vtirt;
    ModelConfig model;
    ItemVocabulary items;
    ParamStore params;

    NetLayout net_layout() const { return find_net_layout(params); }
    ItemLayout item_layout() const { return find_item_layout(params); }
    PotentialNet net() const { return PotentialNet(params, net_layout()); }
    ItemPosterior item_posterior() const { return ItemPosterior(params, item_layout(), items); }
};

// Freshly initialized parameters for `variant` over the given item ids.
TrainedModel make_model(Variant variant, std::vector<std::string> item_ids, const ModelConfig& cfg,
                        std::uint64_t seed);

inline constexpr std::size_t kUnknownItem = static_cast<std::size_t>(-1);

struct SequenceStep {
    std::size_t item = kUnknownItem;
    int correct = 0;
    std::int64_t step = 0;
    std::size_t record = 0;  // index into the source record list
};

// One ability trajectory: a learner, or a (learner, knowledge component) pair.
struct Sequence {
    std::string learner;
    std::string kc;
    std::vector<SequenceStep> steps;
};

// Groups records by learner (and by each of a record's KC tags when present),
// ordered by step. Items missing from `vocab` map to kUnknownItem.
std::vector<Sequence> build_sequences(std::span<const InteractionRecord> records,
                                      const ItemVocabulary& vocab);

// Sorted distinct item ids of a record list.
std::vector<std::string> collect_items(std::span<const InteractionRecord> records);

// A set of sequences evaluated together, with the weight of each item's KL
// term (batch interaction count / total interaction count).
struct Batch {
    std::vector<const Sequence*> sequences;
    std::vector<std::pair<std::size_t, double>> item_weights;
};

// Batch whose item weights are all 1 (the batch is the whole data set).
Batch full_batch(std::span<const Sequence> sequences);

struct ElboNoise {
    std::vector<std::array<double, 2>> items;  // indexed by item
    std::vector<std::vector<double>> theta;    // per batch sequence
};

ElboNoise draw_noise(const Batch& batch, std::size_t n_items, Rng& rng);

// Single-sample reparameterized ELBO of a batch.
double elbo_vtirt(const TrainedModel& model, const Batch& batch, const ElboNoise& noise);
double elbo_dir_loc(const TrainedModel& model, const Batch& batch, const ElboNoise& noise);
double elbo_vibo(const TrainedModel& model, const Batch& batch, const ElboNoise& noise);
// Dispatches on model.variant.
double batch_elbo(const TrainedModel& model, const Batch& batch, const ElboNoise& noise);

// Adds scale * d(ELBO)/d(params) into model.params' gradient slots and
// returns the ELBO.
double batch_elbo_with_gradients(TrainedModel& model, const Batch& batch, const ElboNoise& noise,
                                 double scale = 1.0);

// Static-ability product of experts with prior N(0, 1/prior_precision).
struct PoePosterior {
    double mean;
    double variance;
};
PoePosterior poe_posterior(std::span<const AbilityPotential> potentials, double prior_precision);

struct EpochLog {
    int epoch = 0;
    double train_elbo = 0.0;  // per interaction, averaged over the epoch's batches
    std::optional<double> val_elbo;
    double wall_seconds = 0.0;
};

// Everything needed to continue training exactly where it stopped.
struct TrainState {
    int epochs_done = 0;
    OptimizerState optimizer;
    ParamStore current;
    ParamStore best;
    std::optional<double> best_val;
    int bad_epochs = 0;
    bool stopped = false;
};

struct FitOptions {
    std::function<void(const EpochLog&)> on_epoch;
    const TrainState* resume = nullptr;
};

struct FitResult {
    TrainedModel model;  // best-validation snapshot
    TrainState state;
    std::vector<EpochLog> log;
};

FitResult fit_with_state(std::span<const InteractionRecord> records, const TrainConfig& cfg,
                         const FitOptions& options = {});
TrainedModel fit(std::span<const InteractionRecord> records, const TrainConfig& cfg);

// Learner-level split used by fit: returns the validation learner ids.
std::vector<std::string> validation_learners(std::span<const InteractionRecord> records,
                                             const TrainConfig& cfg);

// Item parameters used at inference time: posterior means, or the prior
// means (1, 0) for items outside the vocabulary.
ItemParams inference_item(const TrainedModel& model, std::size_t item);

// Potentials of a sequence evaluated at item posterior means. Sets
// *unknown_items when any step used the prior fallback.
std::vector<AbilityPotential> sequence_potentials(const TrainedModel& model, const Sequence& seq,
                                                  bool* unknown_items = nullptr);

struct InferenceResult {
    Marginals marginals;
    bool unknown_items = false;
};

// Smoothed marginals via the backward recursion. Records must belong to one
// trajectory; they are ordered by step. Requires a vtirt model.
InferenceResult infer_trajectory(const TrainedModel& model, std::span<const InteractionRecord> records);
// Same aggregation with a product-of-experts-trained recognition net.
InferenceResult infer_transfer(const TrainedModel& vibo_model, std::span<const InteractionRecord> records);

// Marginals using the variant's own aggregation (chain for vtirt and dir_loc,
// static product of experts for vibo_poe).
Marginals native_marginals(const TrainedModel& model, const Sequence& seq, bool* unknown_items = nullptr);
// Marginals using the backward recursion regardless of training variant.
Marginals lgm_marginals(const TrainedModel& model, const Sequence& seq, bool* unknown_items = nullptr);

}  // namespace vtirt
