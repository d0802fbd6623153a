#include "fairhc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "fairhc/errors.hpp"
#include "fairhc/kernels.hpp"
#include "fairhc/powerflow.hpp"

namespace fairhc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBisectionWidth = 1e-6;  // pu
constexpr int kNonMonotoneProbes = 16;
constexpr double kBindingTol = 1e-4;      // scaled residual
constexpr double kBoundTol = 1e-7;        // pu
constexpr std::size_t kLbfgsMemory = 8;

std::shared_ptr<const NormalizedFeeder> borrow(const NormalizedFeeder& feeder) {
    return std::shared_ptr<const NormalizedFeeder>(std::shared_ptr<const void>{}, &feeder);
}

double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

std::vector<std::string> binding_constraints(const HCProblem& problem, std::span<const double> p, double q_per_p) {
    const NormalizedFeeder& feeder = *problem.feeder;
    std::vector<std::string> out;
    try {
        SensitivityModel model(feeder, q_per_p);
        model.solve(p);
        const ResidualLayout layout = residual_layout(feeder);
        const std::vector<double> raw = model.residuals().flatten();
        const std::vector<double> scale = layout.scales(feeder);
        for (std::size_t j = 0; j < raw.size(); ++j) {
            if (raw[j] / scale[j] <= kBindingTol) out.push_back(layout.label(feeder, j));
        }
    } catch (const NumericalError&) {
        out.emplace_back("power_flow:failed");
    }
    for (std::size_t d = 0; d < p.size(); ++d) {
        const std::string& bus = feeder.bus_ids[feeder.load_bus[d]];
        if (problem.upper[d] > problem.lower[d]) {
            if (p[d] >= problem.upper[d] - kBoundTol) out.push_back("dg_upper:" + bus);
            else if (p[d] <= problem.lower[d] + kBoundTol) out.push_back("dg_lower:" + bus);
        }
    }
    return out;
}

HCSolution make_solution(const HCProblem& problem, std::vector<double> p, SolveStatus status, double kkt,
                         IterationCounts iterations, double q_per_p) {
    const double s_base = problem.feeder->s_base;
    HCSolution sol;
    sol.allocation.resize(p.size());
    for (std::size_t d = 0; d < p.size(); ++d) sol.allocation[d] = p[d] * s_base;
    sol.hc_total = std::accumulate(sol.allocation.begin(), sol.allocation.end(), 0.0);
    sol.policy = problem.policy;
    sol.status = status;
    sol.kkt_residual = kkt;
    sol.iterations = iterations;
    sol.objective = objective_value(problem, p) * s_base;
    if (problem.objective == ObjectiveKind::bargaining) sol.disparity = disparity(sol.allocation);
    sol.binding = binding_constraints(problem, p, q_per_p);
    sol.allocation_pu = std::move(p);
    return sol;
}

HCProblem with_box(const HCProblem& problem, double lo, double hi) {
    HCProblem out = problem;
    out.lower.assign(problem.n_loads(), lo);
    out.upper.assign(problem.n_loads(), hi);
    return out;
}

// ---------------------------------------------------------------------------
// Augmented Lagrangian over the DG injections

struct Candidate {
    std::vector<double> p;
    double objective = -kInf;
};

class AugmentedLagrangian {
  public:
    AugmentedLagrangian(const HCProblem& problem, const SolverOptions& options)
        : problem_(problem),
          feeder_(*problem.feeder),
          options_(options),
          q_per_p_(reactive_ratio(options)),
          model_(feeder_, q_per_p_),
          layout_(residual_layout(feeder_)),
          scales_(layout_.scales(feeder_)),
          n_loads_(problem.n_loads()),
          n_p_(problem.tie ? 1 : n_loads_),
          has_t_(problem.objective == ObjectiveKind::bargaining && !problem.tie) {
        for (std::size_t i = 0; i < n_p_; ++i) {
            lo_.push_back(problem.lower[i]);
            hi_.push_back(problem.upper[i]);
        }
        if (has_t_) {
            const double span_max = *std::max_element(problem.upper.begin(), problem.upper.end()) -
                                    *std::min_element(problem.lower.begin(), problem.lower.end());
            lo_.push_back(0.0);
            hi_.push_back(std::max(span_max, 0.0));
        }
        double range = 0.0;
        for (std::size_t d = 0; d < n_loads_; ++d) range += problem.upper[d] - problem.lower[d];
        obj_scale_ = 1.0 / std::max(range, 1e-9);
    }

    struct Outcome {
        bool converged = false;
        double kkt = kInf;
        int outer = 0;
        int inner = 0;
    };

    /// Runs one start given as a per-load injection vector. Feasible points met
    /// along the way are offered to best().
    Outcome run(std::vector<double> p_start) {
        std::vector<double> x = embed(p_start);
        lambda_.assign(n_constraints(), 0.0);
        mu_ = options_.initial_penalty;

        // pull an unsolvable start toward the lower bound
        Eval e = evaluate(x, false);
        for (int k = 0; k < 40 && !e.ok; ++k) {
            for (std::size_t i = 0; i < n_p_; ++i) x[i] = lo_[i] + 0.5 * (x[i] - lo_[i]);
            if (has_t_) x.back() = std::clamp(disparity(to_p(x)), lo_.back(), hi_.back());
            e = evaluate(x, false);
        }
        Outcome out;
        if (!e.ok) return out;

        double prev_violation = kInf;
        for (int k = 0; k < options_.max_outer; ++k) {
            const double omega = std::max(options_.optimality_tol, 1e-2 * std::pow(0.1, k));
            const InnerResult inner = minimize(x, omega);
            x = inner.x;
            out.inner += inner.iterations;
            out.outer = k + 1;

            const Eval at = evaluate(x, false);
            if (!at.ok) break;
            double violation = 0.0;
            for (double c : at.c) violation = std::max(violation, -c);
            for (std::size_t j = 0; j < lambda_.size(); ++j) lambda_[j] = std::max(0.0, lambda_[j] - mu_ * at.c[j]);
            out.kkt = std::max(violation, inner.projected_gradient);
            spdlog::debug("al outer {:2d}: violation {:.3e} pg {:.3e} penalty {:.1e} inner {}", k, violation,
                          inner.projected_gradient, mu_, inner.iterations);
            if (violation <= options_.tol && inner.projected_gradient <= options_.optimality_tol) {
                out.converged = true;
                break;
            }
            if (violation > prev_violation / options_.violation_shrink) mu_ *= options_.penalty_growth;
            prev_violation = violation;
        }

        restore(to_p(x));
        return out;
    }

    [[nodiscard]] const Candidate& best() const { return best_; }

    /// Raises one load at a time to its feasibility limit, keeping a move only
    /// when the objective improves. Expects a feasible p.
    void polish(std::vector<double> p) {
        if (!offer(p)) return;
        const std::size_t dims = problem_.tie ? 1 : n_loads_;
        for (int pass = 0; pass < 2; ++pass) {
            bool moved = false;
            for (std::size_t d = 0; d < dims; ++d) {
                const double from = p[d];
                const double span = problem_.upper[d] - from;
                if (span <= 0.0) continue;
                std::vector<double> trial(p);
                const auto place = [&](double v) {
                    if (problem_.tie) std::fill(trial.begin(), trial.end(), v);
                    else trial[d] = v;
                };
                double a = from;
                double b = problem_.upper[d];
                place(b);
                if (!offer(trial)) {
                    while (b - a > 1e-10 * std::max(1.0, span)) {
                        const double mid = 0.5 * (a + b);
                        place(mid);
                        if (offer(trial)) a = mid;
                        else b = mid;
                    }
                    place(a);
                }
                if (objective_value(problem_, trial) > objective_value(problem_, p)) {
                    p = trial;
                    moved = true;
                }
            }
            if (!moved) break;
        }
    }

    /// Offers p as a candidate if feasible; returns feasibility.
    bool offer(std::span<const double> p) {
        try {
            model_.solve(p);
        } catch (const NumericalError&) {
            return false;
        }
        return consider(p);
    }

  private:
    struct Eval {
        bool ok = false;
        double value = kInf;
        std::vector<double> grad;
        std::vector<double> c;
    };

    struct InnerResult {
        std::vector<double> x;
        double projected_gradient = kInf;
        int iterations = 0;
    };

    [[nodiscard]] std::size_t n_constraints() const { return layout_.size() + (has_t_ ? 2 * n_loads_ : 0); }

    std::vector<double> embed(std::span<const double> p) const {
        std::vector<double> x(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n_p_));
        if (has_t_) x.push_back(disparity(p));
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo_[i], hi_[i]);
        return x;
    }

    std::vector<double> to_p(std::span<const double> x) const {
        if (problem_.tie) return std::vector<double>(n_loads_, x[0]);
        return std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n_loads_));
    }

    bool consider(std::span<const double> p) {
        const std::vector<double> raw = model_.residuals().flatten();
        if (kernels::active().min_value(raw) < -options_.feasibility_tol) return false;
        const double obj = objective_value(problem_, p);
        if (obj > best_.objective) {
            best_.objective = obj;
            best_.p.assign(p.begin(), p.end());
        }
        return true;
    }

    Eval evaluate(std::span<const double> x, bool want_grad) {
        Eval e;
        const std::vector<double> p = to_p(x);
        try {
            model_.solve(p);
        } catch (const NumericalError&) {
            return e;
        }
        consider(p);

        const std::vector<double> raw = model_.residuals().flatten();
        const std::size_t m_net = raw.size();
        e.c.resize(n_constraints());
        for (std::size_t j = 0; j < m_net; ++j) e.c[j] = raw[j] / scales_[j];
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        const double mean = total / static_cast<double>(n_loads_);
        const double t = has_t_ ? x.back() : 0.0;
        if (has_t_) {
            for (std::size_t d = 0; d < n_loads_; ++d) {
                e.c[m_net + 2 * d] = t - (p[d] - mean);
                e.c[m_net + 2 * d + 1] = t + (p[d] - mean);
            }
        }

        double value;
        if (problem_.objective == ObjectiveKind::bargaining)
            value = -obj_scale_ * (problem_.k * total - (1.0 - problem_.k) * t);
        else
            value = -obj_scale_ * total;

        // psi(c) = -lambda c + mu/2 c^2 while c < lambda/mu, else -lambda^2/(2 mu)
        std::vector<double> dpsi(e.c.size());
        for (std::size_t j = 0; j < e.c.size(); ++j) {
            const double c = e.c[j];
            const double l = lambda_[j];
            if (c < l / mu_) {
                value += -l * c + 0.5 * mu_ * c * c;
                dpsi[j] = -(l - mu_ * c);
            } else {
                value += -l * l / (2.0 * mu_);
                dpsi[j] = 0.0;
            }
        }
        e.value = value;
        e.ok = std::isfinite(value);
        if (!want_grad || !e.ok) return e;

        std::vector<double> weights(m_net);
        for (std::size_t j = 0; j < m_net; ++j) weights[j] = dpsi[j] / scales_[j];
        std::vector<double> gp = model_.gradient(weights);
        const double w_sum = problem_.objective == ObjectiveKind::bargaining ? problem_.k : 1.0;
        for (double& g : gp) g -= obj_scale_ * w_sum;
        double gt = 0.0;
        if (has_t_) {
            gt = obj_scale_ * (1.0 - problem_.k);
            const double inv_n = 1.0 / static_cast<double>(n_loads_);
            double common = 0.0;  // coefficient of the 1/n coupling through the mean
            for (std::size_t d = 0; d < n_loads_; ++d) {
                const double u1 = dpsi[m_net + 2 * d];
                const double u2 = dpsi[m_net + 2 * d + 1];
                gp[d] += -u1 + u2;
                common += u1 - u2;
                gt += u1 + u2;
            }
            for (std::size_t d = 0; d < n_loads_; ++d) gp[d] += common * inv_n;
        }
        e.grad.assign(lo_.size(), 0.0);
        if (problem_.tie) {
            e.grad[0] = std::accumulate(gp.begin(), gp.end(), 0.0);
        } else {
            std::copy(gp.begin(), gp.end(), e.grad.begin());
        }
        if (has_t_) e.grad.back() = gt;
        return e;
    }

    std::vector<double> project(std::vector<double> x) const {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo_[i], hi_[i]);
        return x;
    }

    double projected_gradient(std::span<const double> x, std::span<const double> g) const {
        double m = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double step = std::clamp(x[i] - g[i], lo_[i], hi_[i]) - x[i];
            m = std::max(m, std::fabs(step));
        }
        return m;
    }

    // Projected L-BFGS: quasi-Newton direction on the free variables, Armijo
    // backtracking along the projection arc, steepest-descent fallback.
    InnerResult minimize(std::vector<double> x, double omega) {
        const auto& K = kernels::active();
        InnerResult res;
        Eval cur = evaluate(x, true);
        if (!cur.ok) {
            res.x = std::move(x);
            return res;
        }
        std::deque<std::vector<double>> s_hist;
        std::deque<std::vector<double>> y_hist;
        const std::size_t n = x.size();

        for (int it = 0; it < options_.max_inner; ++it) {
            res.projected_gradient = projected_gradient(x, cur.grad);
            if (res.projected_gradient <= omega) break;

            std::vector<double> free(n, 1.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double width = hi_[i] - lo_[i];
                const double eps = 1e-12 * std::max(1.0, width);
                if ((x[i] <= lo_[i] + eps && cur.grad[i] > 0.0) || (x[i] >= hi_[i] - eps && cur.grad[i] < 0.0) ||
                    width <= 0.0)
                    free[i] = 0.0;
            }
            const auto masked = [&](const std::vector<double>& v) {
                std::vector<double> out(n);
                for (std::size_t i = 0; i < n; ++i) out[i] = v[i] * free[i];
                return out;
            };

            std::vector<double> q = masked(cur.grad);
            std::vector<double> alpha(s_hist.size(), 0.0);
            std::vector<double> rho(s_hist.size(), 0.0);
            double gamma = 1.0;
            bool have_pair = false;
            for (std::size_t k = s_hist.size(); k-- > 0;) {
                const std::vector<double> sk = masked(s_hist[k]);
                const std::vector<double> yk = masked(y_hist[k]);
                const double sy = K.dot(sk, yk);
                if (sy <= 1e-16) continue;
                rho[k] = 1.0 / sy;
                alpha[k] = rho[k] * K.dot(sk, q);
                K.axpy(-alpha[k], yk, q);
                if (!have_pair) {
                    gamma = sy / K.dot(yk, yk);
                    have_pair = true;
                }
            }
            if (!have_pair) {
                // first step: scale so the largest move is a tenth of the box
                double gmax = norm_inf(q);
                double width = 0.0;
                for (std::size_t i = 0; i < n; ++i) width = std::max(width, (hi_[i] - lo_[i]) * free[i]);
                gamma = gmax > 0.0 ? 0.1 * width / gmax : 1.0;
            }
            for (double& v : q) v *= gamma;
            for (std::size_t k = 0; k < s_hist.size(); ++k) {
                if (rho[k] == 0.0) continue;
                const std::vector<double> sk = masked(s_hist[k]);
                const std::vector<double> yk = masked(y_hist[k]);
                const double beta = rho[k] * K.dot(yk, q);
                K.axpy(alpha[k] - beta, sk, q);
            }
            std::vector<double> dir(n);
            for (std::size_t i = 0; i < n; ++i) dir[i] = -q[i] * free[i];
            if (K.dot(dir, cur.grad) >= 0.0) {
                s_hist.clear();
                y_hist.clear();
                for (std::size_t i = 0; i < n; ++i) dir[i] = -cur.grad[i] * free[i];
            }

            bool accepted = false;
            std::vector<double> x_new;
            Eval next;
            for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
                double step = 1.0;
                for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
                    x_new = x;
                    K.axpy(step, dir, x_new);
                    x_new = project(std::move(x_new));
                    std::vector<double> dx(n);
                    for (std::size_t i = 0; i < n; ++i) dx[i] = x_new[i] - x[i];
                    if (norm_inf(dx) == 0.0) break;
                    next = evaluate(x_new, true);
                    if (next.ok && next.value <= cur.value + 1e-4 * K.dot(cur.grad, dx)) {
                        accepted = true;
                        break;
                    }
                }
                if (!accepted && attempt == 0) {
                    // retry along the projected steepest-descent direction
                    s_hist.clear();
                    y_hist.clear();
                    for (std::size_t i = 0; i < n; ++i) dir[i] = -cur.grad[i] * free[i];
                    const double gmax = norm_inf(dir);
                    double width = 0.0;
                    for (std::size_t i = 0; i < n; ++i) width = std::max(width, hi_[i] - lo_[i]);
                    if (gmax > 0.0) {
                        for (double& v : dir) v *= 0.1 * width / gmax;
                    }
                }
            }
            ++res.iterations;
            if (!accepted) break;

            std::vector<double> s(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = x_new[i] - x[i];
                y[i] = next.grad[i] - cur.grad[i];
            }
            if (K.dot(s, y) > 1e-16) {
                s_hist.push_back(std::move(s));
                y_hist.push_back(std::move(y));
                if (s_hist.size() > kLbfgsMemory) {
                    s_hist.pop_front();
                    y_hist.pop_front();
                }
            }
            x = std::move(x_new);
            cur = std::move(next);
        }
        res.projected_gradient = projected_gradient(x, cur.grad);
        res.x = std::move(x);
        return res;
    }

    // Largest step from the lower bound toward p that stays feasible.
    void restore(const std::vector<double>& p) {
        if (offer(p)) return;
        std::vector<double> anchor(problem_.lower.begin(), problem_.lower.end());
        if (!offer(anchor)) return;
        double a = 0.0;
        double b = 1.0;
        std::vector<double> trial(p.size());
        for (int it = 0; it < 50 && b - a > 1e-12; ++it) {
            const double s = 0.5 * (a + b);
            for (std::size_t d = 0; d < p.size(); ++d) trial[d] = anchor[d] + s * (p[d] - anchor[d]);
            if (offer(trial)) a = s;
            else b = s;
        }
    }

    const HCProblem& problem_;
    const NormalizedFeeder& feeder_;
    SolverOptions options_;
    double q_per_p_;
    SensitivityModel model_;
    ResidualLayout layout_;
    std::vector<double> scales_;
    std::size_t n_loads_;
    std::size_t n_p_;
    bool has_t_;
    std::vector<double> lo_;
    std::vector<double> hi_;
    double obj_scale_ = 1.0;
    std::vector<double> lambda_;
    double mu_ = 10.0;
    Candidate best_;
};

// ---------------------------------------------------------------------------
// Bisection on a uniform injection

struct BisectionResult {
    double value = 0.0;
    double width = 0.0;
    int probes = 0;
    bool non_monotone = false;
};

BisectionResult bisect_uniform(const NormalizedFeeder& feeder, double lo, double hi, const SolverOptions& options) {
    const double q = reactive_ratio(options);
    const std::size_t n = feeder.n_loads();
    BisectionResult out;
    const auto feasible = [&](double s) {
        ++out.probes;
        const std::vector<double> p(n, s);
        return is_feasible(feeder, p, options.feasibility_tol, q);
    };
    if (!feasible(lo)) throw Infeasible("baseline operating point violates network limits");
    if (feasible(hi)) {
        out.value = hi;
        return out;
    }
    double a = lo;
    double b = hi;
    while (b - a >= kBisectionWidth) {
        const double mid = 0.5 * (a + b);
        if (feasible(mid)) a = mid;
        else b = mid;
    }
    out.value = a;
    out.width = b - a;
    // a feasible probe above the bracket means feasibility is not monotone in s
    for (int i = 1; i <= kNonMonotoneProbes; ++i) {
        const double s = a + (hi - a) * static_cast<double>(i) / kNonMonotoneProbes;
        if (s > b && feasible(s)) {
            out.non_monotone = true;
            break;
        }
    }
    return out;
}

HCSolution solve_uniform(const HCProblem& problem, const SolverOptions& options) {
    const NormalizedFeeder& feeder = *problem.feeder;
    const double q = reactive_ratio(options);
    const BisectionResult bis = bisect_uniform(feeder, problem.lower[0], problem.upper[0], options);
    double best = bis.value;
    SolveStatus status = SolveStatus::optimal;
    IterationCounts counts{0, bis.probes};
    if (bis.non_monotone) {
        spdlog::warn("uniform feasibility is not monotone; refining with the augmented-Lagrangian solver");
        HCProblem tied = problem;
        tied.tie = true;
        tied.objective = ObjectiveKind::sum;
        HCSolution al = solve_nlp_al(tied, options);
        if (!al.allocation_pu.empty() && al.allocation_pu[0] > best) {
            best = al.allocation_pu[0];
            status = al.status;
        }
        counts.outer += al.iterations.outer;
        counts.inner += al.iterations.inner;
    }
    return make_solution(problem, std::vector<double>(feeder.n_loads(), best), status, bis.width, counts, q);
}

}  // namespace

std::string_view to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::max_iter: return "max_iter";
        case SolveStatus::failed: return "failed";
    }
    return "failed";
}

double reactive_ratio(const SolverOptions& options) {
    const double pf = options.dg_power_factor;
    if (!(pf > 0.0 && pf <= 1.0)) throw ParameterOutOfRange("dg_power_factor must lie in (0, 1]");
    if (pf == 1.0) return 0.0;
    return -std::tan(std::acos(pf));
}

bool is_feasible(const NormalizedFeeder& feeder, std::span<const double> p_pu, double tol, double q_per_p) {
    return min_residual(feeder, p_pu, q_per_p) >= -tol;
}

HCSolution solve_egalitarian_bisection(const NormalizedFeeder& feeder, const SolverOptions& options) {
    const HCProblem problem = build_problem(borrow(feeder), Egalitarian{});
    return solve_uniform(problem, options);
}

HCSolution solve_nlp_al(const HCProblem& problem, const SolverOptions& options) {
    const NormalizedFeeder& feeder = *problem.feeder;
    const std::size_t n = problem.n_loads();
    const double q = reactive_ratio(options);

    std::vector<std::vector<double>> starts;
    starts.push_back(problem.lower);
    {
        double p_egal;
        if (problem.reference_egal) {
            p_egal = *problem.reference_egal;
        } else {
            try {
                p_egal = bisect_uniform(feeder, 0.0, feeder.dg_cap, options).value;
            } catch (const Infeasible&) {
                p_egal = 0.0;
            }
        }
        std::vector<double> p(n);
        for (std::size_t d = 0; d < n; ++d) p[d] = std::clamp(p_egal, problem.lower[d], problem.upper[d]);
        starts.push_back(std::move(p));
    }
    {
        std::vector<double> p(n);
        for (std::size_t d = 0; d < n; ++d) p[d] = 0.5 * (problem.lower[d] + problem.upper[d]);
        starts.push_back(std::move(p));
    }
    starts.resize(std::min(starts.size(), static_cast<std::size_t>(std::max(1, options.starts))));
    if (problem.reference_uti.size() == n && !problem.tie) {
        std::vector<double> p(n);
        for (std::size_t d = 0; d < n; ++d)
            p[d] = std::clamp(problem.reference_uti[d], problem.lower[d], problem.upper[d]);
        starts.push_back(std::move(p));
    }
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (static_cast<int>(starts.size()) < options.starts) {
        std::vector<double> p(n);
        const double u0 = unit(rng);
        for (std::size_t d = 0; d < n; ++d) {
            const double u = problem.tie ? u0 : unit(rng);
            p[d] = problem.lower[d] + u * (problem.upper[d] - problem.lower[d]);
        }
        starts.push_back(std::move(p));
    }

    Candidate best;
    AugmentedLagrangian::Outcome best_outcome;
    IterationCounts counts;
    for (const auto& start : starts) {
        AugmentedLagrangian solver(problem, options);
        const AugmentedLagrangian::Outcome outcome = solver.run(start);
        counts.outer += outcome.outer;
        counts.inner += outcome.inner;
        if (solver.best().objective > best.objective) {
            best = solver.best();
            best_outcome = outcome;
        }
    }
    if (best.p.empty()) throw Infeasible("no feasible point found from any start");
    {
        AugmentedLagrangian finisher(problem, options);
        finisher.polish(best.p);
        if (finisher.best().objective > best.objective) best.p = finisher.best().p;
    }
    const SolveStatus status = best_outcome.converged ? SolveStatus::optimal : SolveStatus::max_iter;
    return make_solution(problem, std::move(best.p), status, best_outcome.kkt, counts, q);
}

HCSolution solve_hc(const HCProblem& problem, const SolverOptions& options) {
    const NormalizedFeeder& feeder = *problem.feeder;
    const std::size_t n = problem.n_loads();
    if (n == 0 || problem.upper.size() != n) throw InputError("problem bounds do not match the load count");
    for (std::size_t d = 0; d < n; ++d) {
        if (!(problem.lower[d] >= 0.0 && problem.lower[d] <= problem.upper[d]))
            throw InputError("problem bounds must satisfy 0 <= lower <= upper");
    }
    const double q = reactive_ratio(options);
    if (!is_feasible(feeder, problem.lower, options.feasibility_tol, q))
        throw Infeasible("baseline operating point violates network limits");

    if (problem.tie) return solve_uniform(problem, options);
    if (problem.objective == ObjectiveKind::bargaining && problem.k == 0.0) {
        // every uniform allocation has zero disparity; report the egalitarian one
        const auto [lo, hi] = std::pair{*std::max_element(problem.lower.begin(), problem.lower.end()),
                                        *std::min_element(problem.upper.begin(), problem.upper.end())};
        return solve_uniform(with_box(problem, lo, hi), options);
    }
    if (problem.lower == problem.upper) {
        return make_solution(problem, problem.lower, SolveStatus::optimal, 0.0, {}, q);
    }
    return solve_nlp_al(problem, options);
}

HCSolution brute_force_oracle(const HCProblem& problem, int grid_steps, const SolverOptions& options) {
    const NormalizedFeeder& feeder = *problem.feeder;
    const std::size_t n = problem.n_loads();
    const std::size_t dims = problem.tie ? 1 : n;
    if (dims > 3) throw TooManyLoads("grid oracle supports at most three loads, got " + std::to_string(n));
    if (grid_steps < 2) throw InputError("grid_steps must be at least 2");
    const double q = reactive_ratio(options);
    const auto steps = static_cast<std::size_t>(grid_steps);

    const auto value = [&](std::size_t d, std::size_t i) {
        return problem.lower[d] + (problem.upper[d] - problem.lower[d]) * static_cast<double>(i) /
                                      static_cast<double>(steps - 1);
    };
    const auto point = [&](std::size_t row, std::size_t k) {
        std::vector<double> p(n);
        if (problem.tie) {
            std::fill(p.begin(), p.end(), value(0, k));
            return p;
        }
        for (std::size_t d = 0; d + 1 < dims; ++d) {
            p[d] = value(d, row % steps);
            row /= steps;
        }
        p[dims - 1] = value(dims - 1, k);
        return p;
    };

    std::size_t rows = 1;
    for (std::size_t d = 0; d + 1 < dims; ++d) rows *= steps;
    std::vector<double> row_best(rows, -kInf);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < steps; ++k) row_best[r] = std::max(row_best[r], objective_value(problem, point(r, k)));
    }
    std::vector<std::size_t> row_order(rows);
    std::iota(row_order.begin(), row_order.end(), 0);
    std::stable_sort(row_order.begin(), row_order.end(),
                     [&](std::size_t a, std::size_t b) { return row_best[a] > row_best[b]; });

    double best = -kInf;
    std::vector<double> best_p;
    int checks = 0;
    std::vector<std::pair<double, std::size_t>> cells(steps);
    for (std::size_t r : row_order) {
        if (row_best[r] <= best) break;
        for (std::size_t k = 0; k < steps; ++k) cells[k] = {objective_value(problem, point(r, k)), k};
        std::stable_sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        for (const auto& [obj, k] : cells) {
            if (obj <= best) break;
            const std::vector<double> p = point(r, k);
            ++checks;
            if (is_feasible(feeder, p, options.feasibility_tol, q)) {
                best = obj;
                best_p = p;
                break;
            }
        }
    }
    if (best_p.empty()) throw Infeasible("no feasible grid point");
    return make_solution(problem, std::move(best_p), SolveStatus::optimal, 0.0, {0, checks}, q);
}

ReferenceSolutions solve_references(const std::shared_ptr<const NormalizedFeeder>& feeder,
                                    const SolverOptions& options) {
    ReferenceSolutions out;
    out.egalitarian = solve_hc(build_problem(feeder, Egalitarian{}), options);
    const References partial{out.egalitarian.allocation_pu.front(), {}};
    out.utilitarian = solve_hc(build_problem(feeder, Utilitarian{}, partial), options);
    out.refs = References{out.egalitarian.allocation_pu.front(), out.utilitarian.allocation_pu};
    return out;
}

HCSolution solve_policy(const std::shared_ptr<const NormalizedFeeder>& feeder, const FairnessPolicy& policy,
                        const SolverOptions& options, const std::optional<References>& refs) {
    std::optional<References> use = refs;
    if (!use && std::holds_alternative<Bounded>(policy)) use = solve_references(feeder, options).refs;
    return solve_hc(build_problem(feeder, policy, use), options);
}

std::string solution_to_json(const HCSolution& sol, const NormalizedFeeder& feeder) {
    using nlohmann::json;
    json alloc = json::array();
    for (std::size_t d = 0; d < sol.allocation.size(); ++d) {
        alloc.push_back({{"bus", feeder.bus_ids[feeder.load_bus[d]]}, {"p_kw", sol.allocation[d]}});
    }
    json doc{{"policy", to_string(sol.policy)},
             {"status", std::string(to_string(sol.status))},
             {"hc_total_kw", sol.hc_total},
             {"objective_kw", sol.objective},
             {"allocation", std::move(alloc)},
             {"kkt_residual", sol.kkt_residual},
             {"binding", sol.binding},
             {"iterations", {{"outer", sol.iterations.outer}, {"inner", sol.iterations.inner}}}};
    if (sol.disparity) doc["disparity_kw"] = *sol.disparity;
    return doc.dump(2);
}

}  // namespace fairhc
