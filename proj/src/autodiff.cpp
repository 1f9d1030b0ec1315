#include "vtirt/autodiff.hpp"

namespace vtirt::ad {

Tape*& active_tape() {
    thread_local Tape* tape = nullptr;
    return tape;
}

std::vector<double> Tape::adjoints(int output) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    if (output < 0) {
        return adj;
    }
    adj[static_cast<std::size_t>(output)] = 1.0;
    for (int i = output; i >= 0; --i) {
        const double g = adj[static_cast<std::size_t>(i)];
        if (g == 0.0) {
            continue;
        }
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.a >= 0) {
            adj[static_cast<std::size_t>(n.a)] += n.da * g;
        }
        if (n.b >= 0) {
            adj[static_cast<std::size_t>(n.b)] += n.db * g;
        }
    }
    return adj;
}

}  // namespace vtirt::ad
