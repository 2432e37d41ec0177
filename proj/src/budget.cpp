#include "lacelab/budget.hpp"

#include <cmath>
#include <cstdlib>

namespace lacelab {

EnumerationBudget EnumerationBudget::from_env() {
    EnumerationBudget b;
    if (const char* env = std::getenv("LACELAB_BUDGET")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end != env && v > 0) b.max_states = v;
    }
    return b;
}

double EnumerationBudget::single_sweep_states(int n_bonds) const {
    return std::pow(3.0, n_bonds);
}

double EnumerationBudget::pair_sweep_states(int n_bonds) const {
    return std::pow(9.0, n_bonds);
}

void EnumerationBudget::require_states(double states, const std::string& where) const {
    if (states > max_states) {
        throw BudgetError(where + ": " + std::to_string(states) +
                          " states exceed the enumeration budget of " +
                          std::to_string(max_states));
    }
}

void EnumerationBudget::require_single_sweep(int n_bonds, const std::string& where) const {
    require_states(single_sweep_states(n_bonds), where);
}

void EnumerationBudget::require_pair_sweep(int n_bonds, const std::string& where) const {
    require_states(pair_sweep_states(n_bonds), where);
}

} // namespace lacelab
