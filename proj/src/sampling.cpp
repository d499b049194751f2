#include "mlhr/sampling.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mlhr::sampling {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_matrix(const Matrix& x, const char* who) {
    if (x.empty()) throw std::invalid_argument(std::string(who) + ": empty sample matrix");
    const std::size_t d = x.front().size();
    if (d == 0) throw std::invalid_argument(std::string(who) + ": zero-dimensional samples");
    for (const auto& row : x)
        if (row.size() != d) throw std::invalid_argument(std::string(who) + ": ragged rows");
}

// p-exponent distance between rows with the t-norm used by phi_p. The
// t = 1 case is hot inside the swap optimizer, so it skips the pow calls.
double pair_distance(const std::vector<double>& a, const std::vector<double>& b, double t) {
    double acc = 0.0;
    if (t == 1.0) {
        for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
        return acc;
    }
    for (std::size_t k = 0; k < a.size(); ++k) acc += std::pow(std::abs(a[k] - b[k]), t);
    return std::pow(acc, 1.0 / t);
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

void Dataset::validate() const {
    check_matrix(x, "Dataset");
    if (y.size() != x.size()) throw std::invalid_argument("Dataset: X/Y row count mismatch");
    const std::size_t nr = y.front().size();
    for (const auto& row : y)
        if (row.size() != nr) throw std::invalid_argument("Dataset: ragged response rows");
    for (const auto& row : x)
        for (double v : row)
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("Dataset: sample outside the unit cube");
    if (!bounds.empty() && bounds.size() != dims())
        throw std::invalid_argument("Dataset: bounds dimension mismatch");
}

Matrix lhs_init(std::size_t n, std::size_t dims, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("lhs_init: need at least two samples");
    if (dims == 0) throw std::invalid_argument("lhs_init: need at least one dimension");
    Rng rng(seed);
    Matrix x(n, std::vector<double>(dims, 0.0));
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < dims; ++d) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        for (std::size_t i = 0; i < n; ++i)
            x[i][d] = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
    }
    return x;
}

double phi_p(const Matrix& x, double p, double t) {
    check_matrix(x, "phi_p");
    if (x.size() < 2) throw std::invalid_argument("phi_p: need at least two samples");
    if (p <= 0.0 || t <= 0.0) throw std::invalid_argument("phi_p: exponents must be positive");

    std::vector<double> dist;
    dist.reserve(x.size() * (x.size() - 1) / 2);
    double d_min = kInf;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double d = pair_distance(x[i], x[j], t);
            if (d == 0.0) return kInf;
            dist.push_back(d);
            d_min = std::min(d_min, d);
        }
    // Factoring out the smallest distance keeps every summand in (0, 1], so
    // large p cannot underflow the whole sum to zero.
    double acc = 0.0;
    for (double d : dist) acc += std::pow(d_min / d, p);
    return std::pow(acc, 1.0 / p) / d_min;
}

LhsOptimizeResult lhs_optimize(const Matrix& x, std::size_t iterations, std::uint64_t seed,
                               double p, double t) {
    check_matrix(x, "lhs_optimize");
    if (x.size() < 2) throw std::invalid_argument("lhs_optimize: need at least two samples");

    LhsOptimizeResult out;
    out.x = x;
    double current = phi_p(out.x, p, t);
    out.trace.reserve(iterations + 1);
    out.trace.push_back(current);

    Rng rng(seed);
    const std::size_t n = out.x.size();
    const std::size_t dims = out.x.front().size();
    for (std::size_t it = 0; it < iterations; ++it) {
        const std::size_t d = rng.index(dims);
        const std::size_t i = rng.index(n);
        std::size_t j = rng.index(n - 1);
        if (j >= i) ++j;
        std::swap(out.x[i][d], out.x[j][d]);
        const double trial = phi_p(out.x, p, t);
        if (trial < current) {
            current = trial;
        } else {
            std::swap(out.x[i][d], out.x[j][d]);
        }
        out.trace.push_back(current);
    }
    return out;
}

double se_kernel(const std::vector<double>& a, const std::vector<double>& b,
                 const std::vector<double>& theta) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += theta[k] * d * d;
    }
    return std::exp(-acc);
}

namespace {

struct GpEval {
    double loglik;
    Eigen::LLT<Eigen::MatrixXd> llt;
    bool ok;
};

// Builds the noisy covariance and factorizes it, escalating diagonal jitter
// from 1e-10 to 1e-6 when the plain factorization fails.
GpEval gp_factorize(const Matrix& x, const std::vector<double>& y,
                    const std::vector<double>& theta, double sigma2, double sigma_eps) {
    const std::size_t m = x.size();
    Eigen::MatrixXd c(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        c(i, i) = sigma2 + sigma_eps * sigma_eps;
        for (std::size_t j = i + 1; j < m; ++j)
            c(i, j) = c(j, i) = sigma2 * se_kernel(x[i], x[j], theta);
    }
    GpEval ev;
    ev.ok = false;
    ev.loglik = -kInf;
    for (double jitter : {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
        Eigen::MatrixXd cj = c;
        if (jitter > 0.0) cj.diagonal().array() += jitter;
        ev.llt.compute(cj);
        if (ev.llt.info() != Eigen::Success) continue;
        // A semi-definite matrix can slip through with a tiny or negative
        // pivot; reject those so the log-determinant stays meaningful.
        const auto& lmat = ev.llt.matrixLLT();
        bool positive = true;
        for (std::size_t i = 0; i < m; ++i)
            if (!(lmat(i, i) > 0.0)) positive = false;
        if (!positive) continue;
        Eigen::VectorXd yv(m);
        for (std::size_t i = 0; i < m; ++i) yv(i) = y[i];
        const Eigen::VectorXd alpha = ev.llt.solve(yv);
        double logdet = 0.0;
        for (std::size_t i = 0; i < m; ++i) logdet += std::log(lmat(i, i));
        ev.loglik = -0.5 * yv.dot(alpha) - logdet -
                    0.5 * static_cast<double>(m) * std::log(2.0 * kPi);
        ev.ok = true;
        break;
    }
    return ev;
}

constexpr double kThetaLo = 1e-3;
constexpr double kThetaHi = 1e3;
constexpr double kSigmaLo = 1e-6;
constexpr double kSigmaHi = 1e3;

struct GpHyper {
    double sigma;  // process std
    std::vector<double> theta;
};

double gp_objective(const Matrix& x, const std::vector<double>& y, const GpHyper& h,
                    double sigma_eps) {
    const GpEval ev = gp_factorize(x, y, h.theta, h.sigma * h.sigma, sigma_eps);
    return ev.ok ? ev.loglik : -kInf;
}

// Greedy multiplicative line walk on one hyperparameter at a time.
void gp_coordinate_search(const Matrix& x, const std::vector<double>& y, double sigma_eps,
                          GpHyper& h, double& best, int sweeps) {
    const std::size_t dims = h.theta.size();
    const double factors[] = {4.0, 2.0, 1.3, 1.05};
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        bool any = false;
        for (double f : factors) {
            for (std::size_t p = 0; p <= dims; ++p) {
                double* v = (p == 0) ? &h.sigma : &h.theta[p - 1];
                const double lo = (p == 0) ? kSigmaLo : kThetaLo;
                const double hi = (p == 0) ? kSigmaHi : kThetaHi;
                for (double dir : {f, 1.0 / f}) {
                    int steps = 0;
                    while (steps++ < 10) {
                        const double saved = *v;
                        *v = std::clamp(saved * dir, lo, hi);
                        if (*v == saved) break;
                        const double trial = gp_objective(x, y, h, sigma_eps);
                        if (trial > best + 1e-12) {
                            best = trial;
                            any = true;
                        } else {
                            *v = saved;
                            break;
                        }
                    }
                }
            }
        }
        if (!any) break;
    }
}

}  // namespace

double gp_log_likelihood(const Matrix& x, const std::vector<double>& y,
                         const std::vector<double>& theta, double sigma2, double sigma_eps) {
    check_matrix(x, "gp_log_likelihood");
    const GpEval ev = gp_factorize(x, y, theta, sigma2, sigma_eps);
    if (!ev.ok) throw std::runtime_error("gp_log_likelihood: covariance not factorizable");
    return ev.loglik;
}

GpSurrogate gp_fit(const Matrix& x, const std::vector<double>& y,
                   const std::vector<double>& init_theta, double sigma_eps,
                   const GpFitOptions& opt) {
    check_matrix(x, "gp_fit");
    if (y.size() != x.size()) throw std::invalid_argument("gp_fit: X/y size mismatch");
    if (init_theta.size() != x.front().size())
        throw std::invalid_argument("gp_fit: theta dimension mismatch");
    if (sigma_eps < 0.0) throw std::invalid_argument("gp_fit: negative noise");

    double sigma2 = opt.sigma2_init;
    if (sigma2 <= 0.0) {
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        sigma2 = std::max(var / y.size(), 1e-12);
    }

    GpHyper init{std::sqrt(sigma2), init_theta};
    const double loglik_init = gp_objective(x, y, init, sigma_eps);

    GpHyper best_h = init;
    double best = loglik_init;
    if (opt.optimize) {
        best_h.sigma = std::clamp(best_h.sigma, kSigmaLo, kSigmaHi);
        for (double& th : best_h.theta) th = std::clamp(th, kThetaLo, kThetaHi);
        best = gp_objective(x, y, best_h, sigma_eps);
        gp_coordinate_search(x, y, sigma_eps, best_h, best, opt.sweeps);
        for (int s = 1; s < opt.starts; ++s) {
            Rng rng(mix_seed(0x5eedULL, static_cast<std::uint64_t>(s)));
            GpHyper h;
            h.sigma = std::clamp(init.sigma * std::pow(10.0, rng.uniform(-1.5, 1.5)),
                                 kSigmaLo, kSigmaHi);
            h.theta.resize(init.theta.size());
            for (std::size_t k = 0; k < h.theta.size(); ++k)
                h.theta[k] = std::clamp(init.theta[k] * std::pow(10.0, rng.uniform(-1.5, 1.5)),
                                        kThetaLo, kThetaHi);
            double score = gp_objective(x, y, h, sigma_eps);
            if (!(score > -kInf)) continue;
            gp_coordinate_search(x, y, sigma_eps, h, score, opt.sweeps);
            if (score > best) {
                best = score;
                best_h = h;
            }
        }
        // The searched optimum can only sit at or above the starting point;
        // fall back if clamping the init somehow lost likelihood.
        if (best < loglik_init) {
            best_h = init;
            best = loglik_init;
        }
    }

    const GpEval ev = gp_factorize(x, y, best_h.theta, best_h.sigma * best_h.sigma, sigma_eps);
    if (!ev.ok) throw std::runtime_error("gp_fit: covariance not factorizable");

    GpSurrogate s;
    s.x_train = x;
    s.theta = best_h.theta;
    s.sigma2 = best_h.sigma * best_h.sigma;
    s.sigma_eps = sigma_eps;
    Eigen::VectorXd yv(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yv(i) = y[i];
    const Eigen::VectorXd alpha = ev.llt.solve(yv);
    s.alpha.assign(alpha.data(), alpha.data() + alpha.size());
    s.loglik_init = loglik_init;
    s.loglik = best;
    return s;
}

double gp_predict(const GpSurrogate& s, const std::vector<double>& x) {
    if (x.size() != s.theta.size())
        throw std::invalid_argument("gp_predict: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < s.x_train.size(); ++i)
        acc += s.sigma2 * se_kernel(x, s.x_train[i], s.theta) * s.alpha[i];
    return acc;
}

namespace {

// Pairwise coordinate ascent on the box-constrained dual. Variables are the
// split multipliers [a_up; a_lo], each in [0, lambda], with the single
// equality constraint sum(a_up - a_lo) = 0 kept by moving a maximal
// violating pair at a time.
struct SmoResult {
    std::vector<double> beta;
    std::size_t iterations;
};

SmoResult smo_solve(const Eigen::MatrixXd& q, const std::vector<double>& y, double lambda_pen,
                    double epsilon) {
    const std::size_t m = y.size();
    const std::size_t nv = 2 * m;
    std::vector<double> a(nv, 0.0);
    // Gradient of 0.5*b'Qb - y'b + eps*sum(a) in the split variables; the
    // sign of variable t is +1 for the upper block, -1 for the lower one.
    std::vector<double> grad(nv);
    for (std::size_t i = 0; i < m; ++i) {
        grad[i] = epsilon - y[i];
        grad[m + i] = epsilon + y[i];
    }
    const auto sign_of = [m](std::size_t t) { return t < m ? 1.0 : -1.0; };
    const auto sample_of = [m](std::size_t t) { return t < m ? t : t - m; };

    const double tol = 1e-8;
    const std::size_t cap = std::max<std::size_t>(200000, 2000 * m);
    std::size_t it = 0;
    for (; it < cap; ++it) {
        // Maximal violating pair on -z*grad.
        double up = -kInf, low = kInf;
        std::size_t iu = nv, il = nv;
        for (std::size_t t = 0; t < nv; ++t) {
            const double z = sign_of(t);
            const double score = -z * grad[t];
            const bool in_up = (z > 0.0) ? a[t] < lambda_pen : a[t] > 0.0;
            const bool in_low = (z > 0.0) ? a[t] > 0.0 : a[t] < lambda_pen;
            if (in_up && score > up) {
                up = score;
                iu = t;
            }
            if (in_low && score < low) {
                low = score;
                il = t;
            }
        }
        if (iu == nv || il == nv || up - low <= tol) break;

        const std::size_t si = sample_of(iu), sj = sample_of(il);
        const double zi = sign_of(iu), zj = sign_of(il);
        double curv = q(si, si) + q(sj, sj) - 2.0 * q(si, sj);
        if (curv <= 1e-12) curv = 1e-12;
        double delta = (up - low) / curv;
        // Clip so both variables stay inside their boxes.
        delta = std::min(delta, zi > 0.0 ? lambda_pen - a[iu] : a[iu]);
        delta = std::min(delta, zj > 0.0 ? a[il] : lambda_pen - a[il]);
        if (delta <= 0.0) break;
        a[iu] += zi * delta;
        a[il] -= zj * delta;
        for (std::size_t t = 0; t < nv; ++t)
            grad[t] += sign_of(t) * delta * (q(sample_of(t), si) - q(sample_of(t), sj));
    }
    if (it >= cap) throw std::runtime_error("svr_fit: dual solver did not converge");

    SmoResult r;
    r.iterations = it;
    r.beta.resize(m);
    for (std::size_t i = 0; i < m; ++i) r.beta[i] = a[i] - a[m + i];
    return r;
}

}  // namespace

SvrSurrogate svr_fit(const Matrix& x, const std::vector<double>& y, double lambda_pen,
                     double epsilon, const std::vector<double>& theta) {
    check_matrix(x, "svr_fit");
    if (y.size() != x.size()) throw std::invalid_argument("svr_fit: X/y size mismatch");
    if (theta.size() != x.front().size())
        throw std::invalid_argument("svr_fit: theta dimension mismatch");
    if (lambda_pen <= 0.0) throw std::invalid_argument("svr_fit: penalty must be positive");
    if (epsilon < 0.0) throw std::invalid_argument("svr_fit: negative tube width");

    const std::size_t m = x.size();
    Eigen::MatrixXd k(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) k(i, j) = k(j, i) = se_kernel(x[i], x[j], theta);
    // The model is f = sum_i c_i k(., x_i) + b with c = K beta, so the dual
    // quadratic carries K squared.
    const Eigen::MatrixXd q = k * k;

    const SmoResult sol = smo_solve(q, y, lambda_pen, epsilon);

    SvrSurrogate s;
    s.x_train = x;
    s.theta = theta;
    s.epsilon = epsilon;
    s.lambda_pen = lambda_pen;
    s.beta = sol.beta;
    s.iterations = sol.iterations;

    Eigen::VectorXd bv(m);
    for (std::size_t i = 0; i < m; ++i) bv(i) = sol.beta[i];
    const Eigen::VectorXd cv = k * bv;
    const Eigen::VectorXd qb = q * bv;
    s.c.assign(cv.data(), cv.data() + m);

    // Bias from the free multipliers; with none free, the middle of the
    // interval the KKT inequalities leave open. gu/gl are the bias values
    // that put sample i exactly on the upper/lower edge of the tube.
    const double free_tol = 1e-9 * std::max(1.0, lambda_pen);
    double bias_acc = 0.0;
    std::size_t bias_n = 0;
    double hi_bound = kInf, lo_bound = -kInf;
    for (std::size_t i = 0; i < m; ++i) {
        const double gu = y[i] - qb(i) - epsilon;
        const double gl = y[i] - qb(i) + epsilon;
        const double bi = sol.beta[i];
        if (bi > free_tol && bi < lambda_pen - free_tol) {
            bias_acc += gu;
            ++bias_n;
        } else if (bi < -free_tol && bi > -lambda_pen + free_tol) {
            bias_acc += gl;
            ++bias_n;
        } else if (bi >= lambda_pen - free_tol) {
            hi_bound = std::min(hi_bound, gu); // slack active above the tube
        } else if (bi <= -lambda_pen + free_tol) {
            lo_bound = std::max(lo_bound, gl);
        } else {
            // Inactive sample must sit inside the tube.
            lo_bound = std::max(lo_bound, gu);
            hi_bound = std::min(hi_bound, gl);
        }
    }
    if (bias_n > 0) {
        s.b = bias_acc / static_cast<double>(bias_n);
    } else if (std::isfinite(hi_bound) && std::isfinite(lo_bound)) {
        s.b = 0.5 * (hi_bound + lo_bound);
    } else if (std::isfinite(hi_bound)) {
        s.b = hi_bound;
    } else if (std::isfinite(lo_bound)) {
        s.b = lo_bound;
    }

    s.slack_u.resize(m);
    s.slack_l.resize(m);
    double resid = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double fi = qb(i) + s.b;
        s.slack_u[i] = std::max(0.0, y[i] - fi - epsilon);
        s.slack_l[i] = std::max(0.0, fi - y[i] - epsilon);
        // Stationarity of the beta-dual with bias as the equality multiplier.
        const double r = y[i] - fi;
        const double bi = sol.beta[i];
        double viol;
        if (bi > free_tol && bi < lambda_pen - free_tol) {
            viol = std::abs(r - epsilon);
        } else if (bi < -free_tol && bi > -lambda_pen + free_tol) {
            viol = std::abs(r + epsilon);
        } else if (bi >= lambda_pen - free_tol) {
            viol = std::max(0.0, epsilon - r);
        } else if (bi <= -lambda_pen + free_tol) {
            viol = std::max(0.0, r + epsilon);
        } else {
            viol = std::max(0.0, std::abs(r) - epsilon);
        }
        resid = std::max(resid, viol);
    }
    double beta_sum = 0.0;
    for (double bi : sol.beta) beta_sum += bi;
    resid = std::max(resid, std::abs(beta_sum));
    s.kkt_residual = resid;
    if (resid > 1e-6) throw std::runtime_error("svr_fit: KKT residual above tolerance");
    return s;
}

double svr_predict(const SvrSurrogate& s, const std::vector<double>& x) {
    if (x.size() != s.theta.size())
        throw std::invalid_argument("svr_predict: dimension mismatch");
    double acc = s.b;
    for (std::size_t i = 0; i < s.x_train.size(); ++i)
        acc += s.c[i] * se_kernel(x, s.x_train[i], s.theta);
    return acc;
}

double svr_objective(const SvrSurrogate& s) {
    double norm2 = 0.0;
    for (double ci : s.c) norm2 += ci * ci;
    double slack = 0.0;
    for (std::size_t i = 0; i < s.slack_u.size(); ++i) slack += s.slack_u[i] + s.slack_l[i];
    return 0.5 * norm2 + s.lambda_pen * slack;
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    }
    void unite(std::size_t i, std::size_t j) { parent[find(i)] = find(j); }
};

std::size_t component_count(const Matrix& pts, double eps) {
    UnionFind uf(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (euclidean(pts[i], pts[j]) <= eps) uf.unite(i, j);
    std::size_t count = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (uf.find(i) == i) ++count;
    return count;
}

}  // namespace

ClusterResult cluster_refine(const Matrix& points, const std::vector<Interval>& global_bounds) {
    check_matrix(points, "cluster_refine");
    const std::size_t dims = points.front().size();
    if (global_bounds.size() != dims)
        throw std::invalid_argument("cluster_refine: bounds dimension mismatch");

    ClusterResult out;
    const std::size_t n = points.size();

    if (n == 1) {
        out.clusters = {{0}};
        out.d_m = 0.0;
    } else {
        std::vector<double> dist;
        dist.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) dist.push_back(euclidean(points[i], points[j]));
        std::sort(dist.begin(), dist.end());

        // Nearest-rank percentile of the sorted pairwise distances.
        const auto pct = [&dist](double p) {
            const double rank = std::ceil(p / 100.0 * static_cast<double>(dist.size()));
            const std::size_t idx =
                rank < 1.0 ? 0 : std::min(dist.size() - 1, static_cast<std::size_t>(rank) - 1);
            return dist[idx];
        };

        std::vector<double> candidates;
        std::vector<std::size_t> counts;
        for (int p = 5; p <= 95; p += 5) {
            candidates.push_back(pct(static_cast<double>(p)));
            counts.push_back(component_count(points, candidates.back()));
        }
        // Keep the smallest radius whose cluster count already agrees with
        // the next larger candidate; the median distance is the fallback.
        out.d_m = median_of(dist);
        for (std::size_t i = 0; i + 1 < candidates.size(); ++i) {
            if (counts[i] == counts[i + 1]) {
                out.d_m = candidates[i];
                break;
            }
        }

        UnionFind uf(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (euclidean(points[i], points[j]) <= out.d_m) uf.unite(i, j);
        std::vector<std::size_t> root_to_cluster(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = uf.find(i);
            if (root_to_cluster[r] == n) {
                root_to_cluster[r] = out.clusters.size();
                out.clusters.push_back({});
            }
            out.clusters[root_to_cluster[r]].push_back(i);
        }
    }

    for (const auto& cluster : out.clusters) {
        std::vector<Interval> box(dims);
        for (std::size_t d = 0; d < dims; ++d) {
            double lo = kInf, hi = -kInf;
            for (std::size_t idx : cluster) {
                lo = std::min(lo, points[idx][d]);
                hi = std::max(hi, points[idx][d]);
            }
            const double w = hi - lo;
            // Grow the box 5 percent of its width per side; degenerate sides
            // get a fixed half-width so refinement never collapses to a point.
            const double pad = w > 1e-12 ? 0.05 * w : 0.05;
            box[d].lo = std::max(global_bounds[d].lo, lo - pad);
            box[d].hi = std::min(global_bounds[d].hi, hi + pad);
        }
        out.boxes.push_back(std::move(box));
    }
    return out;
}

namespace {

// Indices of rows whose response vector no other row improves in every
// component (minimization).
std::vector<std::size_t> pareto_indices(const Matrix& y) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < y.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < y.size() && !dominated; ++j) {
            if (j == i) continue;
            bool all_le = true, any_lt = false;
            for (std::size_t k = 0; k < y[i].size(); ++k) {
                if (y[j][k] > y[i][k]) all_le = false;
                if (y[j][k] < y[i][k]) any_lt = true;
            }
            dominated = all_le && any_lt;
        }
        if (!dominated) keep.push_back(i);
    }
    return keep;
}

}  // namespace

void mlhr_iterate(RefinementState& state, const Evaluator& evaluator, std::size_t batch,
                  std::uint64_t seed, const MlhrOptions& opt) {
    state.data.validate();
    const std::size_t dims = state.data.dims();
    const std::size_t nr = state.data.responses();

    // Surrogates are trained on the most recent rows when the archive
    // outgrows the cap; fitting cost is cubic in the row count.
    const std::size_t rows = state.data.rows();
    const std::size_t take = std::min(rows, opt.gp_row_cap);
    Matrix xt(state.data.x.end() - take, state.data.x.end());
    std::vector<GpSurrogate> gps;
    std::vector<SvrSurrogate> svrs;
    gps.reserve(nr);
    svrs.reserve(nr);
    for (std::size_t r = 0; r < nr; ++r) {
        std::vector<double> col(take);
        for (std::size_t i = 0; i < take; ++i) col[i] = state.data.y[rows - take + i][r];
        gps.push_back(gp_fit(xt, col, std::vector<double>(dims, 1.0), 1e-6, opt.gp));
        svrs.push_back(svr_fit(xt, col, opt.svr_lambda, opt.svr_epsilon, gps.back().theta));
    }

    const std::vector<std::size_t> front = pareto_indices(state.data.y);
    state.pareto_x.clear();
    for (std::size_t idx : front) state.pareto_x.push_back(state.data.x[idx]);

    std::vector<Interval> unit(dims);
    const ClusterResult cl = cluster_refine(state.pareto_x, unit);
    state.local_bounds = cl.boxes;
    state.d_m = cl.d_m;

    IterationRecord rec;
    rec.generation = state.data.generation + 1;

    if (batch > 0) {
        // Spread the batch round-robin over the cluster boxes, largest
        // shares first, and fill each share with its own small LHS.
        const std::size_t nb = state.local_bounds.size();
        std::vector<std::vector<double>> candidates;
        Rng point_rng(mix_seed(seed, 0));
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t share = batch / nb + (b < batch % nb ? 1 : 0);
            if (share == 0) continue;
            const auto& box = state.local_bounds[b];
            Matrix local;
            if (share == 1) {
                std::vector<double> u(dims);
                for (double& v : u) v = point_rng.uniform();
                local.push_back(u);
            } else {
                local = lhs_init(share, dims, mix_seed(seed, b + 1));
            }
            for (const auto& u : local) {
                std::vector<double> pt(dims);
                for (std::size_t d = 0; d < dims; ++d) pt[d] = box[d].denorm(u[d]);
                candidates.push_back(std::move(pt));
            }
        }

        std::vector<double> gp_errs, svr_errs;
        for (const auto& pt : candidates) {
            const auto resp = evaluator(pt);
            if (!resp || resp->size() != nr) {
                ++rec.dropped;
                std::string msg = "generation " + std::to_string(rec.generation) +
                                  ": dropped failed evaluation at (";
                for (std::size_t d = 0; d < dims; ++d)
                    msg += (d ? ", " : "") + format9(pt[d]);
                msg += ")";
                state.log.push_back(std::move(msg));
                continue;
            }
            double ge = 0.0, se = 0.0;
            for (std::size_t r = 0; r < nr; ++r) {
                ge += std::abs(gp_predict(gps[r], pt) - (*resp)[r]);
                se += std::abs(svr_predict(svrs[r], pt) - (*resp)[r]);
            }
            gp_errs.push_back(ge / static_cast<double>(nr));
            svr_errs.push_back(se / static_cast<double>(nr));
            state.data.x.push_back(pt);
            state.data.y.push_back(*resp);
            ++rec.evaluated;
        }
        rec.median_gp_abs_err = median_of(gp_errs);
        rec.median_svr_abs_err = median_of(svr_errs);
    }

    state.data.generation += 1;
    state.history.push_back(rec);
}

std::vector<SweepPoint> sensitivity_sweep(
    const std::function<std::vector<double>(const motor::DesignVector&)>& evaluator,
    std::size_t variable, std::size_t n_points, const motor::DesignVector& fixed,
    const motor::DesignSpace& space) {
    if (variable >= fixed.v.size())
        throw std::invalid_argument("sensitivity_sweep: variable index out of range");
    if (n_points < 2) throw std::invalid_argument("sensitivity_sweep: need at least two points");

    const Interval iv = space.bounds[variable];
    std::vector<SweepPoint> out;
    out.reserve(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n_points - 1);
        motor::DesignVector d = fixed;
        d.v[variable] = iv.denorm(u);
        SweepPoint pt;
        pt.value = d.v[variable];
        pt.responses = evaluator(d);
        out.push_back(std::move(pt));
    }
    return out;
}

}  // namespace mlhr::sampling
