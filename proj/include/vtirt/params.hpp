#pragma once

// Learnable parameter storage, differentiable evaluation and the Adam
// optimizer.

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vtirt/autodiff.hpp"

namespace vtirt {

struct ParamArray {
    std::string name;
    std::vector<double> value;
    std::vector<double> grad;
};

class ParamStore {
public:
    // Returns the index of the new array. Names must be unique.
    std::size_t add(std::string name, std::vector<double> init);

    std::size_t index_of(std::string_view name) const;
    bool contains(std::string_view name) const;

    ParamArray& operator[](std::size_t i) { return arrays_[i]; }
    const ParamArray& operator[](std::size_t i) const { return arrays_[i]; }
    ParamArray& at(std::string_view name) { return arrays_[index_of(name)]; }
    const ParamArray& at(std::string_view name) const { return arrays_[index_of(name)]; }

    std::size_t size() const { return arrays_.size(); }
    std::size_t total_size() const;
    auto begin() { return arrays_.begin(); }
    auto end() { return arrays_.end(); }
    auto begin() const { return arrays_.begin(); }
    auto end() const { return arrays_.end(); }

    void zero_grad();

    // Throws NumericalError naming the first non-finite entry.
    void check_finite_values() const;
    void check_finite_grads() const;

private:
    std::vector<ParamArray> arrays_;
};

// Read access to parameters as plain doubles.
class ValueBinding {
public:
    using Scalar = double;
    explicit ValueBinding(const ParamStore& store) : store_(&store) {}
    double get(std::size_t array, std::size_t i) const { return (*store_)[array].value[i]; }

private:
    const ParamStore* store_;
};

// Read access that materializes each touched parameter as a tape leaf on
// first use, and scatters adjoints back into the gradient slots afterwards.
class TapeBinding {
public:
    using Scalar = ad::Var;
    TapeBinding(const ParamStore& store, ad::Tape& tape);

    ad::Var get(std::size_t array, std::size_t i);

    // grad += scale * d(output)/d(param) for every touched parameter.
    void accumulate(ParamStore& store, const ad::Var& output, double scale) const;

private:
    struct Touched {
        std::size_t array;
        std::size_t index;
        int node;
    };
    const ParamStore* store_;
    ad::Tape* tape_;
    std::vector<std::vector<int>> node_of_;
    std::vector<Touched> touched_;
};

// Evaluates `objective` on a fresh tape, adds scale * gradient into the
// store's gradient slots and returns the value. A non-finite value or
// gradient throws NumericalError naming the parameter.
double evaluate_with_gradients(ParamStore& store,
                               const std::function<ad::Var(TapeBinding&)>& objective,
                               double scale = 1.0);

struct OptimizerState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long long step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

// One bias-corrected Adam descent step using the store's gradient slots.
// Shapes of the moment buffers are initialized on the first call. Rejects
// non-finite gradients or updates without modifying anything.
void adam_step(ParamStore& store, OptimizerState& opt);

}  // namespace vtirt
