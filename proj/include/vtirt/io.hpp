#pragma once

// File formats: line-delimited JSON datasets, ground-truth sidecars, JSON
// checkpoints, TOML configs and CSV exports.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtirt/evaluation.hpp"
#include "vtirt/recognition.hpp"
#include "vtirt/synthgen.hpp"
#include "vtirt/training.hpp"

namespace vtirt::io {

inline constexpr int kCheckpointVersion = 1;

// Shortest decimal that parses back to the same double.
std::string format_double(double x);

struct LoadOptions {
    bool first_attempt_only = false;  // keep the earliest step per (learner, item)
    int min_interactions = 0;         // drop learners with fewer records
};

// One JSON object per line: {"learner", "item", "correct", "step", "kc"?}.
// Errors carry the 1-based line number. Records come back ordered by
// (learner, step).
std::vector<InteractionRecord> read_dataset(std::istream& in, const LoadOptions& options = {},
                                            const std::string& source = "<stream>");
std::vector<InteractionRecord> load_dataset(const std::filesystem::path& path,
                                            const LoadOptions& options = {});
void write_dataset(std::ostream& out, std::span<const InteractionRecord> records);
void save_dataset(const std::filesystem::path& path, std::span<const InteractionRecord> records);

// Writes dataset.jsonl, items.json and abilities.json into `dir`.
void save_synthetic(const std::filesystem::path& dir, const SynthDataset& data);
// Reads the sidecars next to an already loaded dataset.
SynthDataset load_truth(std::vector<InteractionRecord> records, const std::filesystem::path& items_path,
                        const std::filesystem::path& abilities_path);

struct Checkpoint {
    TrainedModel model;
    std::optional<TrainState> state;
    std::optional<TrainConfig> train_config;
};

void write_checkpoint(std::ostream& out, const TrainedModel& model, const TrainState* state = nullptr,
                      const TrainConfig* cfg = nullptr);
void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model,
                     const TrainState* state = nullptr, const TrainConfig* cfg = nullptr);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct ConfigFile {
    ModelConfig model;
    TrainConfig train;
    SynthConfig synth;
};

// TOML with optional [model], [train] and [synth] tables. Unknown tables or
// keys are errors. [model] feeds both train.model and synth.model.
ConfigFile parse_config(const std::string& text, const std::string& source = "<config>");
ConfigFile load_config(const std::filesystem::path& path);

// learner,step,mean,variance (+ kc when any sequence carries one)
void write_marginals_csv(std::ostream& out, std::span<const Sequence> sequences,
                         std::span<const Marginals> marginals);
// correct,d,a,mu,logvar; the correct=1 block first
void write_grid_csv(std::ostream& out, std::span<const PotentialGrid> grids);
void write_predictions_csv(std::ostream& out, const PredictionSet& set);

}  // namespace vtirt::io
