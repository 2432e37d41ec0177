#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "lacelab/graph.hpp"

namespace lacelab {

// Random-walk Green's function numerics on d-dimensional tori, plus the
// weighted-convolution bound checks.  Distances use the minimal-image
// Euclidean norm and <x> denotes |x| v 1.

// One-step distribution on Z^d as an offset stencil.
struct Stencil {
    int d = 0;
    std::vector<std::vector<int>> offsets;
    std::vector<double> weights;         // sums to 1
    double sigma2 = 0.0;                 // sum |offset|^2 weight
};

Stencil nn_stencil(int d);
Stencil spread_out_stencil(int d, int L);

// S_r = sum_i r^i D^{*i} solved as the fixed point S = delta + r D*S with
// cyclic convolution.  For r < 1 iteration runs to max-update < eps; at
// r = 1 it stops at `cap` iterations, which reproduces the truncated series
// sum_{i<=cap} D^{*i} exactly (the torus regularization of the divergent
// sum).  cap = 0 selects M^2, the diffusive wrap time: beyond it the walk
// only deposits a uniform wrap-around background of 1/M^d mass per step,
// while far smaller caps truncate the local series.  The field is stored on canonical orbit representatives of the
// hyperoctahedral symmetry (fold to 0..M/2, sort), which the symmetric
// stencils preserve; values and iteration order match the full-torus sweep.
class TorusGreens {
public:
    static TorusGreens solve(int d, int M, const Stencil& D, double r, double eps = 1e-12,
                             int cap = 0);

    int d() const { return d_; }
    int M() const { return M_; }
    double r() const { return r_; }
    int iterations() const { return iterations_; }
    double residual() const { return residual_; }   // max |S - delta - rD*S|
    std::size_t n_points() const { return reps_.size(); }

    double at(const std::vector<int>& x) const;     // any torus point
    double at_index(std::size_t i) const { return S_[i]; }
    const std::vector<int>& rep(std::size_t i) const { return reps_[i]; }
    long long orbit_size(std::size_t i) const { return multiplicity_[i]; }
    double minimal_image_norm2(const std::vector<int>& x) const;

    double sum_all() const;                          // sum over the full torus

private:
    int d_ = 0, M_ = 0;
    double r_ = 0.0;
    int iterations_ = 0;
    double residual_ = 0.0;
    std::vector<std::vector<int>> reps_;
    std::vector<long long> multiplicity_;
    std::vector<double> S_;
    std::unordered_map<std::uint64_t, std::size_t> index_;

    std::size_t canonical_index(const std::vector<int>& x) const;
};

// (d/2) pi^{-d/2} Gamma(d/2 - 1); the small-|x| amplitude of S_1 for d > 2.
double a_d(int d);

// sup over the window lo <= |x| <= hi of |S_1(x) sigma^2 |x|^{d-2} / a_d - 1|
// for the nearest-neighbor walk.  Refuses r != 1 (no power law otherwise).
double check_green_asymptotics(int d, int M, double r, double window_lo, double window_hi,
                               int cap = 0);

// Weighted convolution sup-ratios on boxes {0..side-1}^d:
//   conv: sup_(v,x) [ sum_y <y-v>^-a <x-y>^-b ] <x-v>^{(a ^ d + b) - d}
//   star: sup_(x,x',y,y') [ sum_z <x-z>^-q <x'-z>^-q <z-y>^-q <z-y'>^-q ]
//                          <x-y>^q <x'-y'>^q
// Full sweep when the tuple count is small, otherwise a fixed-seed
// subsample plus all corner/center extremes.
struct SupRatioResult {
    std::vector<int> sides;
    std::vector<double> sup;             // per side
    double max_growth() const;           // max of sup[i+1]/sup[i]
};

SupRatioResult convolution_bound_check(int d, double a, double b, const std::vector<int>& sides,
                                       std::uint64_t seed = 0, int samples = 100000);
SupRatioResult star_bound_check(int d, double q, const std::vector<int>& sides,
                                std::uint64_t seed = 0, int samples = 20000);

// Gbar^(s) = sup_x |x|^s G(x) and Wbar^(t) = sup_x sum_y |y|^t G(y) G(x-y)
// over the torus field (cyclic difference, minimal-image norms).
std::pair<double, double> bar_norms(const TorusGreens& G, double s, double t);

// <phi_o phi_x> <= S_tau(x - o) on a torus padding the box, for a
// nearest-neighbor box graph with uniform coupling and tau = 2d tanh(pJ) <= 1.
// Returns the margin S - G per site.
std::vector<double> random_walk_domination_check(const GraphSpec& g, double p);

} // namespace lacelab
