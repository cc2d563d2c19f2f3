#pragma once

#include <cstdint>
#include <vector>

#include "ropper/types.hpp"

namespace ropper {

enum class MMInit { mle, zeros, custom };
enum class MMStopReason { beta_tol, q_tol, max_iter };

struct MMConfig {
  int max_iter = 500;
  double tol_beta = 1e-9;  // sup-norm step
  double tol_q = 1e-12;    // absolute objective decrease
  MMInit init = MMInit::mle;
  VectorXd custom_init;
  // Extra random restarts around the MLE; the best objective wins.
  int multistart = 0;
  std::uint64_t multistart_seed = 0;
};

// One (beta, objective) pair per iteration, including the starting point.
// The objective sequence is non-increasing by construction.
struct MMTrace {
  std::vector<std::pair<VectorXd, double>> iterates;
  bool converged = false;
  MMStopReason reason = MMStopReason::max_iter;
};

struct MMResult {
  VectorXd beta;
  MMTrace trace;
};

// D(u) = Phi(u) - 1/2, in (-1/2, 1/2).
double d_fun(double u);

// d(u) = 2 phi(u) D(u) / (1 - D(u)^2); odd in u.
double d_small(double u);

// Derivative of d_small; bounded above by 1/3, with the supremum 1/pi at 0.
double d_prime(double u);

struct MMWeights {
  VectorXd w1;
  VectorXd w2;
  VectorXd d;
};

// Normalized majorizer weights at the current iterate:
//   w1_k ~ V_k phi(V_k u_k),  w2_k ~ (sqrt(pi)/(tau sqrt(2)))(1 - D^2),
// scaled so that sum(w1 + w2) = 1, plus the offset vector d.
MMWeights mm_weights(const Dataset& data, const VectorXd& beta, double tau);

// One majorize-minimize update; never increases qhat1.
VectorXd mm_step(const Dataset& data, const VectorXd& beta, double tau);

// Runs the MM iteration to convergence. With init = mle the result is
// guaranteed not to exceed the MLE's objective value.
MMResult minimize_qhat(const Dataset& data, double tau, const MMConfig& config);

// Descent polish of the order-H objective (H >= 2) from a given start,
// backtracking gradient descent. Used by the pipeline when a higher
// truncation order is requested; the H = 1 path always goes through
// minimize_qhat.
VectorXd minimize_qhat_order(const Dataset& data, double tau, int order_h, const VectorXd& start);

}  // namespace ropper
