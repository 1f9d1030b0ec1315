#pragma once

// Metrics, the next-step prediction harness, ground-truth recovery scoring
// and inference throughput measurement.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtirt/core.hpp"
#include "vtirt/synthgen.hpp"
#include "vtirt/training.hpp"

namespace vtirt {

// Sample Pearson correlation; nullopt when either input has zero variance.
// Throws std::invalid_argument on length mismatch or fewer than 2 points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Mann-Whitney AUROC with ties counted 1/2; nullopt unless both classes occur.
std::optional<double> auroc(std::span<const int> labels, std::span<const double> scores);

// Learner-level K-fold assignment: fold index per learner id (sorted ids),
// shuffled with `seed`, fold sizes differing by at most one.
std::vector<std::pair<std::string, int>> kfold_learners(std::span<const InteractionRecord> records,
                                                        int k, std::uint64_t seed);

// Records whose learner is (or is not) in fold `fold`.
std::vector<InteractionRecord> select_fold(std::span<const InteractionRecord> records, int k, int fold,
                                           std::uint64_t seed, bool in_fold);

struct PredictionRecord {
    std::string learner_id;
    std::int64_t step = 0;
    std::string item_id;
    double predicted = 0.5;
    int actual = 0;
};

// How ability is aggregated for prediction. `native` uses the variant's own
// posterior family; `lgm` forces the backward recursion (the transfer setting
// for a product-of-experts model).
enum class Aggregation { native, lgm };

struct PredictionSet {
    std::vector<PredictionRecord> predictions;  // in input record order
    bool unknown_items = false;
};

// Each record's probability is computed from the responses strictly before
// it in its trajectories. With KC tags, the ability estimate is the mean over
// the record's KC trajectories.
PredictionSet next_step_predictions(const TrainedModel& model, std::span<const InteractionRecord> records,
                                    Aggregation aggregation = Aggregation::native);

std::optional<double> prediction_auroc(const PredictionSet& set);

struct RecoveryReport {
    std::optional<double> ability_r;
    std::optional<double> discrimination_r;
    std::optional<double> difficulty_r;
    double inference_seconds = 0.0;
};

// Smoothed ability means per (learner, step) against the true trajectories,
// and item posterior means against the true item parameters.
RecoveryReport recovery_report(const TrainedModel& model, const SynthDataset& truth,
                               Aggregation aggregation = Aggregation::native);

struct BenchRow {
    std::size_t length = 0;
    std::size_t trajectories = 0;
    double seconds = 0.0;  // best of the repeats
    double seconds_stddev = 0.0;
    double trajectories_per_second = 0.0;
};

// Times amortized inference on random response sequences of each length.
std::vector<BenchRow> bench_inference(const TrainedModel& model, std::size_t n_trajectories,
                                      std::span<const std::size_t> lengths, int repeats = 3,
                                      std::uint64_t seed = 0);

}  // namespace vtirt
