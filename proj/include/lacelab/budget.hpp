#pragma once

#include <stdexcept>
#include <string>

namespace lacelab {

// Thrown when an exhaustive sweep would exceed the configured state budget.
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on malformed configs, unknown graph references and the like.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Cap on the number of states an exhaustive sweep may visit.  Single-current
// sweeps cost 3^bonds states, coupled-pair sweeps 9^bonds.  The default cap of
// 1e8 keeps every catalog run interactive; the LACELAB_BUDGET environment
// variable overrides it.
struct EnumerationBudget {
    double max_states = 1e8;

    static EnumerationBudget from_env();

    double single_sweep_states(int n_bonds) const;
    double pair_sweep_states(int n_bonds) const;

    void require_single_sweep(int n_bonds, const std::string& where) const;
    void require_pair_sweep(int n_bonds, const std::string& where) const;
    void require_states(double states, const std::string& where) const;
};

} // namespace lacelab
