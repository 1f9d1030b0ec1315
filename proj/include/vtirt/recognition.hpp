#pragma once

// Recognition side of the model: the potential network (a, d, r) -> outputs
// and the per-item Gaussian posteriors q(a_q) q(d_q).
//
// Parameters live in a ParamStore; the types here are thin views that know
// which arrays belong to them. All math is templated on a binding (ValueBinding
// or TapeBinding) so training and inference share one code path.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vtirt/core.hpp"
#include "vtirt/lgm.hpp"
#include "vtirt/params.hpp"

namespace vtirt {

inline constexpr int kNetInputs = 3;
inline constexpr int kNetHidden = 16;
inline constexpr int kNetMaxOutputs = 3;
inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

struct NetLayout {
    std::size_t w1 = 0;  // kNetHidden x kNetInputs, row-major
    std::size_t b1 = 0;
    std::size_t w2 = 0;  // n_out x kNetHidden, row-major
    std::size_t b2 = 0;
    int n_out = 2;
};

struct ItemLayout {
    std::size_t mean_a = 0;
    std::size_t logvar_a = 0;
    std::size_t mean_d = 0;
    std::size_t logvar_d = 0;
};

// Adds "net.w1", "net.b1", "net.w2", "net.b2". Hidden weights are uniform in
// +-1/sqrt(fan_in); the output layer starts at zero weights with the given bias.
NetLayout add_potential_net(ParamStore& store, std::span<const double> output_bias, std::uint64_t seed);

// Adds "item.mean_a", "item.logvar_a", "item.mean_d", "item.logvar_d" with
// means (1, 0) and log-variances -2.
ItemLayout add_item_posterior(ParamStore& store, std::size_t n_items);

NetLayout find_net_layout(const ParamStore& store);
ItemLayout find_item_layout(const ParamStore& store);

template <class B>
std::array<typename B::Scalar, kNetMaxOutputs> net_forward(B& bind, const NetLayout& L,
                                                          const typename B::Scalar& a,
                                                          const typename B::Scalar& d, int correct) {
    using S = typename B::Scalar;
    std::array<S, kNetHidden> hidden;
    const double r = correct ? 1.0 : 0.0;
    for (std::size_t j = 0; j < kNetHidden; ++j) {
        S acc = bind.get(L.b1, j) + bind.get(L.w1, j * kNetInputs) * a +
                bind.get(L.w1, j * kNetInputs + 1) * d;
        if (correct) {
            acc += bind.get(L.w1, j * kNetInputs + 2) * r;
        }
        hidden[j] = gelu(acc);
    }
    std::array<S, kNetMaxOutputs> out{};
    for (std::size_t k = 0; k < static_cast<std::size_t>(L.n_out); ++k) {
        S acc = bind.get(L.b2, k);
        for (std::size_t j = 0; j < kNetHidden; ++j) {
            acc += bind.get(L.w2, k * kNetHidden + j) * hidden[j];
        }
        out[k] = acc;
    }
    return out;
}

// Item parameter draw a = mean + exp(logvar / 2) * eps with clamped logvar.
template <class B>
std::array<typename B::Scalar, 2> item_draw(B& bind, const ItemLayout& L, std::size_t item,
                                            const std::array<double, 2>& noise) {
    using std::exp;
    using S = typename B::Scalar;
    const S sa = exp(0.5 * clamp_value(bind.get(L.logvar_a, item), kLogvarMin, kLogvarMax));
    const S sd = exp(0.5 * clamp_value(bind.get(L.logvar_d, item), kLogvarMin, kLogvarMax));
    return {bind.get(L.mean_a, item) + sa * noise[0], bind.get(L.mean_d, item) + sd * noise[1]};
}

// KL(q(a_q) q(d_q) || N(1, sigma_a^2) N(0, sigma_d^2)).
template <class B>
typename B::Scalar item_kl_term(B& bind, const ItemLayout& L, std::size_t item, const ModelConfig& cfg) {
    using std::exp;
    using S = typename B::Scalar;
    const S lva = clamp_value(bind.get(L.logvar_a, item), kLogvarMin, kLogvarMax);
    const S lvd = clamp_value(bind.get(L.logvar_d, item), kLogvarMin, kLogvarMax);
    const S da = bind.get(L.mean_a, item) - 1.0;
    const S dd = bind.get(L.mean_d, item);
    const double va = cfg.sigma_a * cfg.sigma_a;
    const double vd = cfg.sigma_d * cfg.sigma_d;
    return 0.5 * (std::log(va) - lva + (exp(lva) + da * da) / va - 1.0) +
           0.5 * (std::log(vd) - lvd + (exp(lvd) + dd * dd) / vd - 1.0);
}

class ItemVocabulary {
public:
    ItemVocabulary() = default;
    explicit ItemVocabulary(std::vector<std::string> ids);

    std::optional<std::size_t> find(const std::string& id) const;
    std::size_t at(const std::string& id) const;  // throws DataError on unknown ids
    const std::vector<std::string>& ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

// View of the potential network inside a parameter store.
class PotentialNet {
public:
    PotentialNet(const ParamStore& store, NetLayout layout) : store_(&store), layout_(layout) {}

    std::array<double, kNetMaxOutputs> raw(double a, double d, int correct) const;
    const NetLayout& layout() const { return layout_; }
    const ParamStore& store() const { return *store_; }

private:
    const ParamStore* store_;
    NetLayout layout_;
};

// mu from the first output, sigma = exp(clamped logvar / 2) from the second.
AbilityPotential potential_forward(double a, double d, int correct, const PotentialNet& net);

// View of the per-item Gaussian posteriors.
class ItemPosterior {
public:
    ItemPosterior(const ParamStore& store, ItemLayout layout, const ItemVocabulary& vocab)
        : store_(&store), layout_(layout), vocab_(&vocab) {}

    ItemParams mean(const std::string& item_id) const;
    ItemParams mean(std::size_t index) const;
    ItemParams sample(const std::string& item_id, const std::array<double, 2>& noise) const;
    double kl(const std::string& item_id, const ModelConfig& cfg) const;

    const ItemVocabulary& vocabulary() const { return *vocab_; }
    const ItemLayout& layout() const { return layout_; }

private:
    const ParamStore* store_;
    ItemLayout layout_;
    const ItemVocabulary* vocab_;
};

ItemParams item_sample(const std::string& item_id, const ItemPosterior& post,
                       const std::array<double, 2>& noise);
double item_kl(const std::string& item_id, const ItemPosterior& post, const ModelConfig& cfg);

struct GridSpec {
    double a_min = 0.5;
    double a_max = 2.0;
    int a_steps = 16;
    double d_min = -2.0;
    double d_max = 2.0;
    int d_steps = 17;

    std::vector<double> a_values() const;
    std::vector<double> d_values() const;
};

// Rows follow d, columns follow a.
struct PotentialGrid {
    int correct = 0;
    std::vector<double> a;
    std::vector<double> d;
    std::vector<std::vector<double>> mu;
    std::vector<std::vector<double>> logvar;
};

PotentialGrid potential_grid(const PotentialNet& net, int correct, const GridSpec& spec);

}  // namespace vtirt
