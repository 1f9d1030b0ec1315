#include "vtirt/recognition.hpp"

#include <cmath>

#include "vtirt/rng.hpp"

namespace vtirt {

NetLayout add_potential_net(ParamStore& store, std::span<const double> output_bias, std::uint64_t seed) {
    if (output_bias.empty() || output_bias.size() > kNetMaxOutputs) {
        throw std::invalid_argument("potential net needs 1..3 outputs");
    }
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(kNetInputs));
    std::vector<double> w1(kNetHidden * kNetInputs);
    for (double& w : w1) {
        w = bound * (2.0 * rng.uniform() - 1.0);
    }
    std::vector<double> b1(kNetHidden);
    for (double& b : b1) {
        b = bound * (2.0 * rng.uniform() - 1.0);
    }
    NetLayout L;
    L.n_out = static_cast<int>(output_bias.size());
    L.w1 = store.add("net.w1", std::move(w1));
    L.b1 = store.add("net.b1", std::move(b1));
    L.w2 = store.add("net.w2", std::vector<double>(output_bias.size() * kNetHidden, 0.0));
    L.b2 = store.add("net.b2", std::vector<double>(output_bias.begin(), output_bias.end()));
    return L;
}

ItemLayout add_item_posterior(ParamStore& store, std::size_t n_items) {
    ItemLayout L;
    L.mean_a = store.add("item.mean_a", std::vector<double>(n_items, 1.0));
    L.logvar_a = store.add("item.logvar_a", std::vector<double>(n_items, -2.0));
    L.mean_d = store.add("item.mean_d", std::vector<double>(n_items, 0.0));
    L.logvar_d = store.add("item.logvar_d", std::vector<double>(n_items, -2.0));
    return L;
}

NetLayout find_net_layout(const ParamStore& store) {
    NetLayout L;
    L.w1 = store.index_of("net.w1");
    L.b1 = store.index_of("net.b1");
    L.w2 = store.index_of("net.w2");
    L.b2 = store.index_of("net.b2");
    L.n_out = static_cast<int>(store[L.b2].value.size());
    if (store[L.w1].value.size() != kNetHidden * kNetInputs ||
        store[L.b1].value.size() != kNetHidden ||
        store[L.w2].value.size() != static_cast<std::size_t>(L.n_out) * kNetHidden ||
        L.n_out < 1 || L.n_out > kNetMaxOutputs) {
        throw DataError("potential network parameters have unexpected shapes");
    }
    return L;
}

ItemLayout find_item_layout(const ParamStore& store) {
    ItemLayout L;
    L.mean_a = store.index_of("item.mean_a");
    L.logvar_a = store.index_of("item.logvar_a");
    L.mean_d = store.index_of("item.mean_d");
    L.logvar_d = store.index_of("item.logvar_d");
    const std::size_t n = store[L.mean_a].value.size();
    if (store[L.logvar_a].value.size() != n || store[L.mean_d].value.size() != n ||
        store[L.logvar_d].value.size() != n) {
        throw DataError("item posterior arrays differ in length");
    }
    return L;
}

ItemVocabulary::ItemVocabulary(std::vector<std::string> ids) : ids_(std::move(ids)) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second) {
            throw DataError("duplicate item id in vocabulary: " + ids_[i]);
        }
    }
}

std::optional<std::size_t> ItemVocabulary::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t ItemVocabulary::at(const std::string& id) const {
    auto idx = find(id);
    if (!idx) {
        throw DataError("unknown item id: " + id);
    }
    return *idx;
}

std::array<double, kNetMaxOutputs> PotentialNet::raw(double a, double d, int correct) const {
    ValueBinding bind(*store_);
    return net_forward(bind, layout_, a, d, correct);
}

AbilityPotential potential_forward(double a, double d, int correct, const PotentialNet& net) {
    const auto out = net.raw(a, d, correct);
    return AbilityPotential::from_logvar(out[0], clamp_value(out[1], kLogvarMin, kLogvarMax));
}

ItemParams ItemPosterior::mean(std::size_t index) const {
    return {vocab_->ids()[index], store_->operator[](layout_.mean_a).value[index],
            store_->operator[](layout_.mean_d).value[index]};
}

ItemParams ItemPosterior::mean(const std::string& item_id) const { return mean(vocab_->at(item_id)); }

ItemParams ItemPosterior::sample(const std::string& item_id, const std::array<double, 2>& noise) const {
    const std::size_t q = vocab_->at(item_id);
    ValueBinding bind(*store_);
    const auto ad = item_draw(bind, layout_, q, noise);
    return {item_id, ad[0], ad[1]};
}

double ItemPosterior::kl(const std::string& item_id, const ModelConfig& cfg) const {
    ValueBinding bind(*store_);
    return item_kl_term(bind, layout_, vocab_->at(item_id), cfg);
}

ItemParams item_sample(const std::string& item_id, const ItemPosterior& post,
                       const std::array<double, 2>& noise) {
    return post.sample(item_id, noise);
}

double item_kl(const std::string& item_id, const ItemPosterior& post, const ModelConfig& cfg) {
    return post.kl(item_id, cfg);
}

namespace {
std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1 || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw UsageError("grid ranges must be finite with at least one point");
    }
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        xs[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    }
    return xs;
}
}  // namespace

std::vector<double> GridSpec::a_values() const { return linspace(a_min, a_max, a_steps); }
std::vector<double> GridSpec::d_values() const { return linspace(d_min, d_max, d_steps); }

PotentialGrid potential_grid(const PotentialNet& net, int correct, const GridSpec& spec) {
    if (net.layout().n_out != 2) {
        throw UsageError("potential grid needs a (mu, logvar) network");
    }
    PotentialGrid g;
    g.correct = correct;
    g.a = spec.a_values();
    g.d = spec.d_values();
    g.mu.assign(g.d.size(), std::vector<double>(g.a.size()));
    g.logvar.assign(g.d.size(), std::vector<double>(g.a.size()));
    for (std::size_t i = 0; i < g.d.size(); ++i) {
        for (std::size_t j = 0; j < g.a.size(); ++j) {
            const auto out = net.raw(g.a[j], g.d[i], correct);
            g.mu[i][j] = out[0];
            g.logvar[i][j] = clamp_value(out[1], kLogvarMin, kLogvarMax);
        }
    }
    return g;
}

}  // namespace vtirt
