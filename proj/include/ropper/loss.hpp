#pragma once

#include "ropper/types.hpp"

namespace ropper {

// Normalized percentiles of a vector: entry k is (#{j : v_k >= v_j})/(K+1).
// Ties share the max-style count, so tied inputs map to equal outputs.
PercentileVector empirical_percentiles(const VectorXd& v);

// Infinite-population percentile Phi(v/tau).
double population_percentile(double v, double tau);

// Mean squared error between two percentile vectors (1/K normalization).
double psel(const VectorXd& truth_percs, const VectorXd& estimates);

// Same loss with population percentiles as the target.
double ppsel(const VectorXd& rho, const VectorXd& estimates);

// Projects arbitrary scores onto a proper percentile vector: entry k is
// rank(r_k)/(K+1), ties broken by input order, so the output is always a
// permutation of {1/(K+1), ..., K/(K+1)}. Among all such permutations this
// minimizes the squared distance to r.
PercentileVector proper_percentiles(const VectorXd& r);

}  // namespace ropper
