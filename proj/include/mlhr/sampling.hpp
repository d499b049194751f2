// Space-filling sample generation (Latin hypercube with phi_p improvement),
// Gaussian-process and support-vector surrogates, density-based cluster
// refinement, and the local-refinement iteration that ties them together.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mlhr/common.hpp"
#include "mlhr/motor_model.hpp"

namespace mlhr::sampling {

using Matrix = std::vector<std::vector<double>>;

// Sample matrix with responses. X rows live in the unit hypercube; `bounds`
// carries the physical intervals for denormalization at the evaluator edge.
struct Dataset {
    Matrix x;
    Matrix y;
    std::vector<Interval> bounds;
    int generation{0};

    std::size_t rows() const { return x.size(); }
    std::size_t dims() const { return x.empty() ? 0 : x.front().size(); }
    std::size_t responses() const { return y.empty() ? 0 : y.front().size(); }

    // Throws std::invalid_argument on ragged rows, X entries outside [0,1],
    // or row-count mismatch between X and Y.
    void validate() const;
};

// One sample per stratum per dimension: x = (perm[i] + u) / n. Deterministic
// for a given seed. n must be >= 2.
Matrix lhs_init(std::size_t n, std::size_t dims, std::uint64_t seed);

// Space-filling score: phi_p = (sum over pairs d^-p)^(1/p) with the
// t-exponent pair distance. Smaller is better spread. Duplicate samples
// return +infinity. Internally normalized by the smallest distance so p=50
// does not underflow.
double phi_p(const Matrix& x, double p = 50.0, double t = 1.0);

struct LhsOptimizeResult {
    Matrix x;
    std::vector<double> trace; // phi_p after each iteration, starting value first
};

// Random within-column element swaps, keeping only improvements, so the
// stratification is preserved and the trace never increases.
LhsOptimizeResult lhs_optimize(const Matrix& x, std::size_t iterations, std::uint64_t seed,
                               double p = 50.0, double t = 1.0);

// Squared-exponential kernel shared by both surrogate families:
// k(a, b) = exp(-sum_k theta_k (a_k - b_k)^2), scaled by sigma2 for the GP.
double se_kernel(const std::vector<double>& a, const std::vector<double>& b,
                 const std::vector<double>& theta);

struct GpSurrogate {
    Matrix x_train;
    std::vector<double> theta; // per-dimension inverse length scales
    double sigma2{1.0};        // process variance
    double sigma_eps{0.0};     // observation noise std (fixed input)
    std::vector<double> alpha; // (C + sigma_eps^2 I)^-1 y
    double loglik_init{0.0};
    double loglik{0.0};
};

struct GpFitOptions {
    int starts = 8;      // multi-start count for the bounded search
    int sweeps = 3;      // coordinate sweeps per start
    bool optimize = true;
    double sigma2_init = 0.0; // <= 0 selects var(y)
};

// Maximizes the log marginal likelihood over theta (bounds [1e-3, 1e3]) and
// the process std (bounds [1e-6, 1e3]) by multi-start coordinate search;
// sigma_eps stays fixed. The likelihood never ends below its starting value.
// Throws std::runtime_error when the covariance cannot be factorized even
// after diagonal jitter escalation (1e-10 up to 1e-6).
GpSurrogate gp_fit(const Matrix& x, const std::vector<double>& y,
                   const std::vector<double>& init_theta, double sigma_eps,
                   const GpFitOptions& opt = {});

double gp_predict(const GpSurrogate& s, const std::vector<double>& x);

// Log marginal likelihood of the data under the given hyperparameters.
double gp_log_likelihood(const Matrix& x, const std::vector<double>& y,
                         const std::vector<double>& theta, double sigma2, double sigma_eps);

struct SvrSurrogate {
    Matrix x_train;
    std::vector<double> c;       // per-sample coefficients
    double b{0.0};               // bias
    std::vector<double> theta;   // kernel parameters
    double epsilon{0.0};         // tube half-width
    double lambda_pen{0.0};      // penalty weight
    std::vector<double> slack_u; // upper-side slacks at the solution
    std::vector<double> slack_l; // lower-side slacks
    std::vector<double> beta;    // dual coefficients (c = K beta)
    double kkt_residual{0.0};
    std::size_t iterations{0};
};

// Epsilon-insensitive support-vector regression: minimizes
// 0.5*|c|^2 + lambda * sum(slack_u + slack_l) subject to the tube
// constraints, via pairwise coordinate ascent on the dual. Throws
// std::runtime_error if the iteration cap is hit before the KKT residual
// drops to 1e-6.
SvrSurrogate svr_fit(const Matrix& x, const std::vector<double>& y, double lambda_pen,
                     double epsilon, const std::vector<double>& theta);

double svr_predict(const SvrSurrogate& s, const std::vector<double>& x);

// Primal objective value at the fitted solution.
double svr_objective(const SvrSurrogate& s);

struct ClusterResult {
    std::vector<std::vector<std::size_t>> clusters; // index lists into the input
    double d_m{0.0};                                // selected neighborhood radius
    std::vector<std::vector<Interval>> boxes;       // one inflated box per cluster
};

// Connected components of the eps-graph at radius d_m, where d_m is chosen by
// scanning the {5,10,...,95} percentiles of the pairwise-distance
// distribution and keeping the smallest percentile whose cluster count is
// stable across two consecutive candidates (median distance as fallback).
// Boxes are per-cluster bounding boxes inflated 10 percent (zero-width sides
// padded to 0.1 wide) and clipped to the given global bounds.
ClusterResult cluster_refine(const Matrix& points, const std::vector<Interval>& global_bounds);

// True-response evaluator on normalized inputs; nullopt marks a failed
// evaluation (candidate is dropped and logged, never imputed).
using Evaluator =
    std::function<std::optional<std::vector<double>>(const std::vector<double>&)>;

struct IterationRecord {
    int generation{0};
    std::size_t evaluated{0};
    std::size_t dropped{0};
    double median_gp_abs_err{0.0};
    double median_svr_abs_err{0.0};
};

struct RefinementState {
    Dataset data;
    Matrix pareto_x;                              // current non-dominated inputs
    std::vector<std::vector<Interval>> local_bounds; // normalized, one per cluster
    double d_m{0.0};
    std::vector<IterationRecord> history;
    std::vector<std::string> log;
};

struct MlhrOptions {
    std::size_t gp_row_cap = 256; // training-row cap for surrogate fits
    GpFitOptions gp{};
    double svr_lambda = 10.0;
    double svr_epsilon = 1e-3;
};

// One refinement generation: fit GP and SVR per response on D^k, find the
// non-dominated set, refresh the cluster boxes, draw `batch` LHS candidates
// inside them, evaluate true responses, append the survivors, and record the
// surrogate error on the fresh batch. batch = 0 only advances the counter.
void mlhr_iterate(RefinementState& state, const Evaluator& evaluator, std::size_t batch,
                  std::uint64_t seed, const MlhrOptions& opt = {});

struct SweepPoint {
    double value{0.0};
    std::vector<double> responses;
};

// One-at-a-time sweep of a single design variable across its bounds, the
// remaining variables held at `fixed`. Points are returned in ascending
// order of the swept value.
std::vector<SweepPoint> sensitivity_sweep(
    const std::function<std::vector<double>(const motor::DesignVector&)>& evaluator,
    std::size_t variable, std::size_t n_points, const motor::DesignVector& fixed,
    const motor::DesignSpace& space);

}  // namespace mlhr::sampling
