#include "vtirt/synthgen.hpp"

#include <algorithm>
#include <numeric>

#include "vtirt/rng.hpp"

namespace vtirt {

namespace {
constexpr std::uint64_t kItemStream = 0;
std::uint64_t learner_stream(int index) { return static_cast<std::uint64_t>(index) + 1; }
}  // namespace

std::string padded_id(int index, int count) {
    std::size_t width = std::to_string(std::max(count - 1, 0)).size();
    std::string s = std::to_string(index);
    return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

void validate(const SynthConfig& cfg) {
    if (cfg.n_learners < 1 || cfg.n_items < 1) {
        throw UsageError("n_learners and n_items must be >= 1");
    }
    const ModelConfig& m = cfg.model;
    if (!(m.sigma_theta >= 0) || !(m.sigma_a >= 0) || !(m.sigma_d >= 0) ||
        !std::isfinite(m.sigma_theta) || !std::isfinite(m.sigma_a) || !std::isfinite(m.sigma_d)) {
        throw UsageError("synthetic prior scales must be finite and >= 0");
    }
}

std::map<std::string, ItemParams> sample_items(const SynthConfig& cfg) {
    validate(cfg);
    Rng rng = Rng(cfg.seed).substream(kItemStream);
    std::map<std::string, ItemParams> items;
    for (int q = 0; q < cfg.n_items; ++q) {
        ItemParams p;
        p.item_id = padded_id(q, cfg.n_items);
        p.a = 1.0 + cfg.model.sigma_a * rng.normal();
        p.d = cfg.model.sigma_d * rng.normal();
        items.emplace(p.item_id, p);
    }
    return items;
}

SynthDataset simulate(const SynthConfig& cfg) {
    SynthDataset out;
    out.true_items = sample_items(cfg);
    std::vector<const ItemParams*> table;
    table.reserve(out.true_items.size());
    for (const auto& [id, p] : out.true_items) {
        table.push_back(&p);
    }

    out.records.reserve(static_cast<std::size_t>(cfg.n_learners) * table.size());
    std::vector<std::size_t> order(table.size());
    for (int l = 0; l < cfg.n_learners; ++l) {
        Rng rng = Rng(cfg.seed).substream(learner_stream(l));
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng.engine());

        Trajectory traj{padded_id(l, cfg.n_learners), {}};
        traj.theta.reserve(order.size());
        double theta = 0.0;
        for (std::size_t t = 0; t < order.size(); ++t) {
            theta += cfg.model.sigma_theta * rng.normal();
            traj.theta.push_back(theta);
            const ItemParams& item = *table[order[t]];
            InteractionRecord r;
            r.learner_id = traj.learner_id;
            r.item_id = item.item_id;
            r.correct = rng.uniform() < irt2pl_prob(theta, item) ? 1 : 0;
            r.step = static_cast<std::int64_t>(t) + 1;
            out.records.push_back(std::move(r));
        }
        out.true_abilities.emplace(traj.learner_id, std::move(traj));
    }
    return out;
}

}  // namespace vtirt
