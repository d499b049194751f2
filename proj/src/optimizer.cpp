#include "mlhr/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mlhr/sampling.hpp"

namespace mlhr::optimizer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Screening surrogates stay cheap: few rows, one start, one sweep. They only
// rank candidates, the true evaluator always has the last word.
constexpr std::size_t kScreenRowCap = 64;

bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
    bool any_better = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] > b[k]) return false;
        if (a[k] < b[k]) any_better = true;
    }
    return any_better;
}

// Feasibility first, then total violation, then Pareto dominance.
bool constrained_dominates(const std::vector<double>& fa, double va,
                           const std::vector<double>& fb, double vb) {
    if (va <= 0.0 && vb > 0.0) return true;
    if (va > 0.0 && vb <= 0.0) return false;
    if (va > 0.0 && vb > 0.0) return va < vb;
    return dominates(fa, fb);
}

std::vector<std::vector<std::size_t>> sort_fronts(
    const ObjectiveRows& objs, const std::vector<double>& viol) {
    const std::size_t n = objs.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (constrained_dominates(objs[i], viol[i], objs[j], viol[j])) {
                dominated[i].push_back(j);
            } else if (constrained_dominates(objs[j], viol[j], objs[i], viol[i])) {
                ++count[i];
            }
        }
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i)
        if (count[i] == 0) current.push_back(i);
    while (!current.empty()) {
        fronts.push_back(current);
        std::vector<std::size_t> next;
        for (std::size_t i : current)
            for (std::size_t j : dominated[i])
                if (--count[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end()); // keep input order inside fronts
        current = std::move(next);
    }
    return fronts;
}

}  // namespace

std::vector<std::vector<std::size_t>> non_dominated_sort(const ObjectiveRows& points) {
    if (points.empty()) return {};
    const std::size_t m = points.front().size();
    for (const auto& p : points)
        if (p.size() != m) throw std::invalid_argument("non_dominated_sort: ragged rows");
    return sort_fronts(points, std::vector<double>(points.size(), 0.0));
}

std::vector<double> crowding_distance(const ObjectiveRows& front) {
    if (front.empty()) throw std::invalid_argument("crowding_distance: empty front");
    const std::size_t n = front.size();
    const std::size_t m = front.front().size();
    std::vector<double> dist(n, 0.0);
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return front[a][k] < front[b][k]; });
        dist[order.front()] = kInf;
        dist[order.back()] = kInf;
        const double span = front[order.back()][k] - front[order.front()][k];
        if (span <= 0.0) continue;
        for (std::size_t i = 1; i + 1 < n; ++i)
            if (dist[order[i]] != kInf)
                dist[order[i]] += (front[order[i + 1]][k] - front[order[i - 1]][k]) / span;
    }
    return dist;
}

double hypervolume_2d(const ObjectiveRows& points, double ref1, double ref2) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : points) {
        if (p.size() != 2) throw std::invalid_argument("hypervolume_2d: need two objectives");
        if (p[0] < ref1 && p[1] < ref2) pts.emplace_back(p[0], p[1]);
    }
    std::sort(pts.begin(), pts.end());
    double hv = 0.0;
    double level = ref2; // sweep left to right, accumulating new slabs only
    for (const auto& [f1, f2] : pts)
        if (f2 < level) {
            hv += (ref1 - f1) * (level - f2);
            level = f2;
        }
    return hv;
}

std::vector<double> constraint_eval(const CandidateSummary& candidate,
                                    const CandidateSummary& baseline, double delta) {
    if (delta < 0.0 || delta >= 1.0)
        throw std::invalid_argument("constraint_eval: delta outside [0,1)");
    return {std::max(0.0, candidate.v_pm - baseline.v_pm * (1.0 - delta)),
            std::max(0.0, baseline.a_eta - candidate.a_eta),
            std::max(0.0, baseline.tpv - candidate.tpv)};
}

void Nsga2Config::validate() const {
    if (pop_size < 4 || pop_size % 2 != 0)
        throw std::invalid_argument("Nsga2Config: pop_size must be even and at least 4");
    if (max_generations < 0) throw std::invalid_argument("Nsga2Config: negative generations");
    for (double p : {p_crossover, p_mutation})
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("Nsga2Config: probability outside [0,1]");
    if (elitism_rate < 0.0 || elitism_rate > 1.0)
        throw std::invalid_argument("Nsga2Config: elitism_rate outside [0,1]");
    if (mlhr_oversample < 1) throw std::invalid_argument("Nsga2Config: oversample below 1");
}

namespace {

constexpr double kEtaCrossover = 15.0;
constexpr double kEtaMutation = 20.0;

// Ranks a set in place: rank index and crowding distance per member, and the
// visit order (front by front, most crowded first, stable on ties).
std::vector<std::size_t> rank_population(std::vector<Individual>& pop) {
    ObjectiveRows objs;
    std::vector<double> viols;
    objs.reserve(pop.size());
    for (const auto& ind : pop) {
        objs.push_back(ind.objectives);
        viols.push_back(ind.total_violation);
    }
    const auto fronts = sort_fronts(objs, viols);
    std::vector<std::size_t> order;
    order.reserve(pop.size());
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        ObjectiveRows sub;
        for (std::size_t idx : fronts[f]) sub.push_back(objs[idx]);
        const std::vector<double> crowd = crowding_distance(sub);
        std::vector<std::size_t> local(fronts[f].size());
        for (std::size_t i = 0; i < local.size(); ++i) local[i] = i;
        std::stable_sort(local.begin(), local.end(),
                         [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
        for (std::size_t i : local) {
            const std::size_t idx = fronts[f][i];
            pop[idx].rank = static_cast<int>(f);
            pop[idx].crowding = crowd[i];
            order.push_back(idx);
        }
    }
    return order;
}

std::size_t tournament(const std::vector<Individual>& pop, Rng& rng) {
    const std::size_t a = rng.index(pop.size());
    const std::size_t b = rng.index(pop.size());
    if (pop[a].rank != pop[b].rank) return pop[a].rank < pop[b].rank ? a : b;
    if (pop[a].crowding != pop[b].crowding) return pop[a].crowding > pop[b].crowding ? a : b;
    return std::min(a, b);
}

void sbx_pair(const std::vector<double>& p1, const std::vector<double>& p2,
              std::vector<double>& c1, std::vector<double>& c2, double p_cross, Rng& rng) {
    c1 = p1;
    c2 = p2;
    if (rng.uniform() > p_cross) return;
    for (std::size_t k = 0; k < p1.size(); ++k) {
        if (rng.uniform() > 0.5) continue;
        if (std::abs(p1[k] - p2[k]) < 1e-14) continue;
        const double u = rng.uniform();
        const double bq = u <= 0.5 ? std::pow(2.0 * u, 1.0 / (kEtaCrossover + 1.0))
                                   : std::pow(0.5 / (1.0 - u), 1.0 / (kEtaCrossover + 1.0));
        c1[k] = std::clamp(0.5 * ((1.0 + bq) * p1[k] + (1.0 - bq) * p2[k]), 0.0, 1.0);
        c2[k] = std::clamp(0.5 * ((1.0 - bq) * p1[k] + (1.0 + bq) * p2[k]), 0.0, 1.0);
    }
}

void polynomial_mutation(std::vector<double>& g, double p_mut, Rng& rng) {
    for (double& v : g) {
        if (rng.uniform() > p_mut) continue;
        const double u = rng.uniform();
        const double d = u < 0.5 ? std::pow(2.0 * u, 1.0 / (kEtaMutation + 1.0)) - 1.0
                                 : 1.0 - std::pow(2.0 * (1.0 - u), 1.0 / (kEtaMutation + 1.0));
        v = std::clamp(v + d, 0.0, 1.0);
    }
}

std::vector<std::vector<double>> make_offspring(const std::vector<Individual>& pop,
                                                std::size_t count, const Nsga2Config& cfg,
                                                Rng& rng) {
    std::vector<std::vector<double>> kids;
    kids.reserve(count + 1);
    while (kids.size() < count) {
        const Individual& p1 = pop[tournament(pop, rng)];
        const Individual& p2 = pop[tournament(pop, rng)];
        std::vector<double> c1, c2;
        sbx_pair(p1.u, p2.u, c1, c2, cfg.p_crossover, rng);
        polynomial_mutation(c1, cfg.p_mutation, rng);
        polynomial_mutation(c2, cfg.p_mutation, rng);
        kids.push_back(std::move(c1));
        if (kids.size() < count) kids.push_back(std::move(c2));
    }
    return kids;
}

// Evaluates genotypes into individuals; false on any evaluator failure.
bool evaluate_batch(const Nsga2Problem& problem, const std::vector<std::vector<double>>& genos,
                    int workers, std::vector<Individual>& out) {
    out.assign(genos.size(), {});
    std::vector<char> ok(genos.size(), 0);
    parallel_for(genos.size(), workers, [&](std::size_t i) {
        Individual ind;
        ind.u = genos[i];
        ind.x.resize(problem.dims);
        for (std::size_t d = 0; d < problem.dims; ++d)
            ind.x[d] = problem.bounds[d].denorm(genos[i][d]);
        const auto obj = problem.objectives(ind.x);
        if (!obj || obj->size() != problem.n_objectives) return;
        ind.objectives = *obj;
        if (problem.constraints) {
            ind.violations = problem.constraints(ind.x);
            for (double v : ind.violations) ind.total_violation += std::max(0.0, v);
        }
        out[i] = std::move(ind);
        ok[i] = 1;
    });
    return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

struct Archive {
    std::vector<Individual> members;
    int last_changed{0};

    void offer(const Individual& ind, int generation) {
        if (ind.total_violation > 0.0) return;
        for (const auto& m : members) {
            if (m.objectives == ind.objectives) return;
            if (dominates(m.objectives, ind.objectives)) return;
        }
        members.erase(std::remove_if(members.begin(), members.end(),
                                     [&](const Individual& m) {
                                         return dominates(ind.objectives, m.objectives);
                                     }),
                      members.end());
        members.push_back(ind);
        last_changed = generation;
    }

    double hypervolume(const Nsga2Problem& problem) const {
        if (problem.n_objectives != 2) return 0.0;
        ObjectiveRows rows;
        for (const auto& m : members) rows.push_back(m.objectives);
        return hypervolume_2d(rows, problem.hv_ref1, problem.hv_ref2);
    }

    double best_cost() const {
        double best = kInf;
        for (const auto& m : members) {
            double s = 0.0;
            for (double f : m.objectives) s += f;
            best = std::min(best, s);
        }
        return best;
    }
};

}  // namespace

Nsga2Result nsga2_run(const Nsga2Problem& problem, const Nsga2Config& cfg, Sampler sampler,
                      int workers) {
    cfg.validate();
    if (problem.dims == 0 || problem.n_objectives == 0 || !problem.objectives)
        throw std::invalid_argument("nsga2_run: incomplete problem");
    if (problem.bounds.size() != problem.dims)
        throw std::invalid_argument("nsga2_run: bounds dimension mismatch");

    const std::size_t n = cfg.pop_size;
    Rng rng(cfg.seed);
    Nsga2Result result;
    Archive archive;

    // Log of every truly evaluated point, feeding the screening surrogates.
    sampling::Matrix seen_u;
    ObjectiveRows seen_y;
    std::vector<double> seen_tv;
    const auto remember = [&](const Individual& ind) {
        seen_u.push_back(ind.u);
        seen_y.push_back(ind.objectives);
        seen_tv.push_back(ind.total_violation);
    };

    std::vector<Individual> pop;
    {
        const auto init = sampling::lhs_init(n, problem.dims, rng.raw());
        if (!evaluate_batch(problem, init, workers, pop)) {
            result.aborted = true;
            return result;
        }
    }
    result.true_evals = n;
    for (const auto& ind : pop) {
        remember(ind);
        archive.offer(ind, 0);
    }
    rank_population(pop);
    result.history.push_back(
        {0, result.true_evals, archive.hypervolume(problem), archive.best_cost()});

    const std::size_t batch =
        cfg.mlhr_batch > 0 ? cfg.mlhr_batch : std::max<std::size_t>(1, n / 4);

    for (int gen = 1; gen <= cfg.max_generations; ++gen) {
        std::vector<std::vector<double>> pool = make_offspring(pop, n, cfg, rng);
        std::vector<std::vector<double>> chosen;

        if (sampler == Sampler::kPlain) {
            chosen = std::move(pool);
        } else {
            // Add LHS draws inside the cluster boxes around the current
            // front, then keep only the candidates the surrogates rank best.
            if (!archive.members.empty()) {
                sampling::Matrix fx;
                for (const auto& m : archive.members) fx.push_back(m.u);
                const auto boxes =
                    sampling::cluster_refine(fx, std::vector<Interval>(problem.dims)).boxes;
                const std::size_t extra = batch * cfg.mlhr_oversample;
                for (std::size_t i = 0; i < extra; ++i) {
                    const auto& box = boxes[i % boxes.size()];
                    std::vector<double> u(problem.dims);
                    for (std::size_t d = 0; d < problem.dims; ++d)
                        u[d] = box[d].denorm(rng.uniform());
                    pool.push_back(std::move(u));
                }
            }

            const std::size_t rows = seen_u.size();
            const std::size_t take = std::min(rows, kScreenRowCap);
            sampling::Matrix xt(seen_u.end() - take, seen_u.end());
            sampling::GpFitOptions gopt;
            gopt.starts = 1;
            gopt.sweeps = 1;
            std::vector<sampling::GpSurrogate> gps;
            for (std::size_t r = 0; r < problem.n_objectives; ++r) {
                std::vector<double> col(take);
                for (std::size_t i = 0; i < take; ++i) col[i] = seen_y[rows - take + i][r];
                gps.push_back(sampling::gp_fit(xt, col,
                                               std::vector<double>(problem.dims, 10.0), 1e-6,
                                               gopt));
            }
            std::optional<sampling::GpSurrogate> gp_tv;
            if (problem.constraints) {
                std::vector<double> col(seen_tv.end() - take, seen_tv.end());
                gp_tv = sampling::gp_fit(xt, col, std::vector<double>(problem.dims, 10.0),
                                         1e-6, gopt);
            }

            ObjectiveRows pred(pool.size());
            std::vector<double> pred_tv(pool.size(), 0.0);
            for (std::size_t i = 0; i < pool.size(); ++i) {
                pred[i].resize(problem.n_objectives);
                for (std::size_t r = 0; r < problem.n_objectives; ++r)
                    pred[i][r] = sampling::gp_predict(gps[r], pool[i]);
                if (gp_tv) pred_tv[i] = std::max(0.0, sampling::gp_predict(*gp_tv, pool[i]));
            }
            const auto fronts = sort_fronts(pred, pred_tv);
            std::vector<std::size_t> order;
            for (const auto& f : fronts) {
                ObjectiveRows sub;
                for (std::size_t idx : f) sub.push_back(pred[idx]);
                const auto crowd = crowding_distance(sub);
                std::vector<std::size_t> local(f.size());
                for (std::size_t i = 0; i < local.size(); ++i) local[i] = i;
                std::stable_sort(local.begin(), local.end(), [&](std::size_t a, std::size_t b) {
                    return crowd[a] > crowd[b];
                });
                for (std::size_t i : local) order.push_back(f[i]);
            }
            for (std::size_t i = 0; i < order.size() && chosen.size() < batch; ++i)
                chosen.push_back(pool[order[i]]);
        }

        std::vector<Individual> fresh;
        if (!evaluate_batch(problem, chosen, workers, fresh)) {
            result.aborted = true;
            break;
        }
        result.true_evals += fresh.size();
        for (const auto& ind : fresh) {
            remember(ind);
            archive.offer(ind, gen);
        }

        // Survival: the elitism quota of sorted parents enters first, the
        // rest fills from the combined ranking.
        const std::vector<std::size_t> parent_order = rank_population(pop);
        const std::size_t quota = std::min(
            n, static_cast<std::size_t>(std::floor(cfg.elitism_rate * static_cast<double>(n))));

        std::vector<Individual> combined = pop;
        combined.insert(combined.end(), fresh.begin(), fresh.end());
        const std::vector<std::size_t> combined_order = rank_population(combined);

        std::vector<char> taken(combined.size(), 0);
        std::vector<Individual> next;
        next.reserve(n);
        for (std::size_t i = 0; i < quota; ++i) {
            taken[parent_order[i]] = 1; // parents occupy the head of combined
            next.push_back(combined[parent_order[i]]);
        }
        for (std::size_t idx : combined_order) {
            if (next.size() == n) break;
            if (taken[idx]) continue;
            taken[idx] = 1;
            next.push_back(combined[idx]);
        }
        pop = std::move(next);
        rank_population(pop);

        result.history.push_back(
            {gen, result.true_evals, archive.hypervolume(problem), archive.best_cost()});
    }

    result.population = pop;
    result.front.members = archive.members;
    result.front.generation_found = archive.last_changed;
    if (!result.front.members.empty()) {
        ObjectiveRows rows;
        for (const auto& m : result.front.members) rows.push_back(m.objectives);
        const auto crowd = crowding_distance(rows);
        for (std::size_t i = 0; i < result.front.members.size(); ++i) {
            result.front.members[i].rank = 0;
            result.front.members[i].crowding = crowd[i];
        }
    }
    return result;
}

Nsga2Problem zdt1_problem(std::size_t dims) {
    if (dims < 2) throw std::invalid_argument("zdt1_problem: need at least two variables");
    Nsga2Problem p;
    p.dims = dims;
    p.n_objectives = 2;
    p.bounds.assign(dims, Interval{0.0, 1.0});
    p.objectives = [dims](const std::vector<double>& x) -> std::optional<std::vector<double>> {
        const double f1 = x[0];
        double s = 0.0;
        for (std::size_t i = 1; i < dims; ++i) s += x[i];
        const double g = 1.0 + 9.0 * s / static_cast<double>(dims - 1);
        return std::vector<double>{f1, g * (1.0 - std::sqrt(f1 / g))};
    };
    return p;
}

}  // namespace mlhr::optimizer
