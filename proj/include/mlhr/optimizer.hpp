// Constrained bi-objective evolutionary search: fast non-dominated sorting,
// crowding distances, simulated-binary variation, and a run loop that can
// draw its candidates either from plain genetic variation or from the
// surrogate-screened local-refinement sampler.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mlhr/common.hpp"

namespace mlhr::optimizer {

using ObjectiveRows = std::vector<std::vector<double>>;

// Plain Pareto sorting, minimization convention. Front 0 holds exactly the
// points no other point dominates; later fronts are peeled off in order.
// Index order inside each front follows the input order.
std::vector<std::vector<std::size_t>> non_dominated_sort(const ObjectiveRows& points);

// Per-member crowding distance of one front. Objective-wise boundary members
// get an infinite sentinel; interior members accumulate the normalized gap
// between their neighbors.
std::vector<double> crowding_distance(const ObjectiveRows& front);

// Dominated area between a point set and the reference corner, exact for two
// objectives. Points that do not dominate the reference contribute nothing.
double hypervolume_2d(const ObjectiveRows& points, double ref1, double ref2);

// Aggregate responses a candidate design is judged by: magnet volume, the
// share of the torque-speed map at premium efficiency, and total torque per
// magnet volume over the speed regions.
struct CandidateSummary {
    double v_pm{0.0};
    double a_eta{0.0};
    double tpv{0.0};
};

// Violation vector (zero iff feasible): the magnet volume must drop below
// the baseline by at least the fraction delta, while the premium-efficiency
// area and the torque-per-volume total must not fall below it.
std::vector<double> constraint_eval(const CandidateSummary& candidate,
                                    const CandidateSummary& baseline, double delta = 0.01);

struct Individual {
    std::vector<double> u;          // genotype in the unit cube
    std::vector<double> x;          // physical coordinates
    std::vector<double> objectives;
    std::vector<double> violations;
    double total_violation{0.0};
    int rank{0};
    double crowding{0.0};
};

struct ParetoFront {
    std::vector<Individual> members;
    int generation_found{0};
};

struct Nsga2Config {
    std::size_t pop_size{100};
    int max_generations{100};
    double p_crossover{0.8};
    double p_mutation{0.33}; // per variable
    double elitism_rate{0.55};
    std::uint64_t seed{1};
    // Refinement-sampler knobs; batch 0 selects pop_size / 4.
    std::size_t mlhr_batch{0};
    std::size_t mlhr_oversample{4};

    void validate() const; // throws std::invalid_argument
};

enum class Sampler { kPlain, kMlhr };

struct Nsga2Problem {
    std::size_t dims{0};
    std::size_t n_objectives{0};
    std::vector<Interval> bounds; // one per variable
    // Pure evaluator on physical coordinates; nullopt aborts the run.
    std::function<std::optional<std::vector<double>>(const std::vector<double>&)> objectives;
    // Optional violation vector (empty function means unconstrained).
    std::function<std::vector<double>(const std::vector<double>&)> constraints;
    // Reference corner for the hypervolume history (two-objective runs).
    double hv_ref1{1.1};
    double hv_ref2{1.1};
};

struct HistoryRow {
    int generation{0};
    std::size_t true_evals{0};
    double hypervolume{0.0};
    double best_cost{0.0}; // smallest objective sum among archived members
};

struct Nsga2Result {
    ParetoFront front;                  // all-time feasible non-dominated set
    std::vector<Individual> population; // final generation
    std::vector<HistoryRow> history;    // one row per generation, gen 0 first
    std::size_t true_evals{0};
    bool aborted{false};
};

// NSGA-II with constrained dominance (feasible beats infeasible; among
// infeasible the smaller total violation wins), SBX crossover and polynomial
// mutation, and a guaranteed-parent elitism quota of
// floor(elitism_rate * pop_size) sorted parents per generation. The
// refinement sampler replaces full offspring evaluation with a
// surrogate-screened batch: candidates are pooled from genetic variation
// plus LHS draws inside the cluster boxes of the current front, ranked on
// surrogate predictions, and only the best batch is evaluated for real.
// An evaluator failure stops the run and returns the history so far.
// Bit-reproducible for a fixed seed at any worker count.
Nsga2Result nsga2_run(const Nsga2Problem& problem, const Nsga2Config& cfg, Sampler sampler,
                      int workers = 1);

// Bundled synthetic benchmark (ZDT1 form, scalable dimension): f1 = x1 and
// f2 = g (1 - sqrt(f1/g)) with g = 1 + 9 mean(x2..xn), unconstrained, unit
// box. Its best front reaches f2 = 1 - sqrt(f1).
Nsga2Problem zdt1_problem(std::size_t dims);

}  // namespace mlhr::optimizer
