#include "vtirt/params.hpp"

#include <algorithm>
#include <cmath>

#include "vtirt/core.hpp"

namespace vtirt {

std::size_t ParamStore::add(std::string name, std::vector<double> init) {
    if (contains(name)) {
        throw std::invalid_argument("duplicate parameter name: " + name);
    }
    const std::size_t n = init.size();
    arrays_.push_back(ParamArray{std::move(name), std::move(init), std::vector<double>(n, 0.0)});
    return arrays_.size() - 1;
}

std::size_t ParamStore::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < arrays_.size(); ++i) {
        if (arrays_[i].name == name) {
            return i;
        }
    }
    throw std::out_of_range("unknown parameter: " + std::string(name));
}

bool ParamStore::contains(std::string_view name) const {
    return std::any_of(arrays_.begin(), arrays_.end(),
                       [&](const ParamArray& a) { return a.name == name; });
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const auto& a : arrays_) {
        n += a.value.size();
    }
    return n;
}

void ParamStore::zero_grad() {
    for (auto& a : arrays_) {
        std::fill(a.grad.begin(), a.grad.end(), 0.0);
    }
}

namespace {
void check_all_finite(const std::vector<ParamArray>& arrays, bool grads) {
    for (const auto& a : arrays) {
        const auto& xs = grads ? a.grad : a.value;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(xs[i])) {
                throw NumericalError(std::string("non-finite ") + (grads ? "gradient" : "value") +
                                     " in parameter " + a.name + "[" + std::to_string(i) + "]");
            }
        }
    }
}
}  // namespace

void ParamStore::check_finite_values() const { check_all_finite(arrays_, false); }
void ParamStore::check_finite_grads() const { check_all_finite(arrays_, true); }

TapeBinding::TapeBinding(const ParamStore& store, ad::Tape& tape)
    : store_(&store), tape_(&tape), node_of_(store.size()) {}

ad::Var TapeBinding::get(std::size_t array, std::size_t i) {
    auto& nodes = node_of_[array];
    if (nodes.empty()) {
        nodes.assign((*store_)[array].value.size(), -1);
    }
    const double v = (*store_)[array].value[i];
    if (nodes[i] < 0) {
        nodes[i] = tape_->leaf();
        touched_.push_back({array, i, nodes[i]});
    }
    return ad::Var(v, nodes[i]);
}

void TapeBinding::accumulate(ParamStore& store, const ad::Var& output, double scale) const {
    if (output.is_constant()) {
        return;
    }
    const std::vector<double> adj = tape_->adjoints(output.id);
    for (const Touched& t : touched_) {
        const double g = adj[static_cast<std::size_t>(t.node)];
        if (!std::isfinite(g)) {
            throw NumericalError("non-finite gradient in parameter " + store[t.array].name + "[" +
                                 std::to_string(t.index) + "]");
        }
        store[t.array].grad[t.index] += scale * g;
    }
}

double evaluate_with_gradients(ParamStore& store,
                               const std::function<ad::Var(TapeBinding&)>& objective,
                               double scale) {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    TapeBinding binding(store, tape);
    const ad::Var out = objective(binding);
    if (!std::isfinite(out.val)) {
        throw NumericalError("non-finite objective value");
    }
    binding.accumulate(store, out, scale);
    return out.val;
}

void adam_step(ParamStore& store, OptimizerState& opt) {
    store.check_finite_grads();
    if (opt.m.size() != store.size()) {
        opt.m.clear();
        opt.v.clear();
        for (const auto& a : store) {
            opt.m.emplace_back(a.value.size(), 0.0);
            opt.v.emplace_back(a.value.size(), 0.0);
        }
    }
    const long long step = opt.step + 1;
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));

    // Compute everything first so a rejected step leaves no trace.
    std::vector<std::vector<double>> m = opt.m;
    std::vector<std::vector<double>> v = opt.v;
    std::vector<std::vector<double>> next(store.size());
    for (std::size_t k = 0; k < store.size(); ++k) {
        const ParamArray& a = store[k];
        if (m[k].size() != a.value.size()) {
            throw std::invalid_argument("optimizer state shape mismatch for " + a.name);
        }
        next[k].resize(a.value.size());
        for (std::size_t i = 0; i < a.value.size(); ++i) {
            const double g = a.grad[i];
            m[k][i] = opt.beta1 * m[k][i] + (1.0 - opt.beta1) * g;
            v[k][i] = opt.beta2 * v[k][i] + (1.0 - opt.beta2) * g * g;
            const double upd = opt.learning_rate * (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + opt.epsilon);
            next[k][i] = a.value[i] - upd;
            if (!std::isfinite(next[k][i])) {
                throw NumericalError("non-finite update in parameter " + a.name + "[" +
                                     std::to_string(i) + "]");
            }
        }
    }
    for (std::size_t k = 0; k < store.size(); ++k) {
        store[k].value = std::move(next[k]);
    }
    opt.m = std::move(m);
    opt.v = std::move(v);
    opt.step = step;
}

}  // namespace vtirt
