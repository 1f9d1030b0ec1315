#pragma once

// Synthetic datasets drawn from the temporal 2PL model: per learner a random
// permutation of all items, a Wiener ability path and Bernoulli responses.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vtirt/core.hpp"

namespace vtirt {

struct SynthConfig {
    int n_learners = 1000;
    int n_items = 50;
    ModelConfig model;
    std::uint64_t seed = 0;
};

struct SynthDataset {
    std::vector<InteractionRecord> records;
    std::map<std::string, ItemParams> true_items;
    std::map<std::string, Trajectory> true_abilities;
};

// Zero-padded decimal id wide enough for `count` identifiers.
std::string padded_id(int index, int count);

// Unlike ModelConfig::validate, zero scales are allowed here (degenerate priors).
void validate(const SynthConfig& cfg);

std::map<std::string, ItemParams> sample_items(const SynthConfig& cfg);

SynthDataset simulate(const SynthConfig& cfg);

}  // namespace vtirt
