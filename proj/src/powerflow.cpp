#include "fairhc/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "fairhc/errors.hpp"
#include "fairhc/kernels.hpp"
#include "fairhc/tree_solver.hpp"

namespace fairhc {
namespace {

// Sending-end flow of one line end and its partials with respect to
// (theta_a, V_a, theta_b, V_b).
struct EndFlow {
    double p;
    double q;
    double dp[4];
    double dq[4];
};

EndFlow end_flow(double va, double vb, double delta, double g, double b) {
    const double c = std::cos(delta);
    const double s = std::sin(delta);
    const double gc_bs = g * c + b * s;
    const double gs_bc = g * s - b * c;
    EndFlow f{};
    f.p = g * va * va - va * vb * gc_bs;
    f.q = -b * va * va - va * vb * gs_bc;
    f.dp[0] = va * vb * gs_bc;
    f.dp[1] = 2.0 * g * va - vb * gc_bs;
    f.dp[2] = -f.dp[0];
    f.dp[3] = -va * gc_bs;
    f.dq[0] = -va * vb * gc_bs;
    f.dq[1] = -2.0 * b * va - vb * gs_bc;
    f.dq[2] = -f.dq[0];
    f.dq[3] = -va * gs_bc;
    return f;
}

// The line joining `bus` to its parent is either (bus -> parent) or (parent -> bus)
// in file orientation; `child` is the end farther from the slack bus.
std::size_t child_end(const NormalizedFeeder& feeder, std::size_t line) {
    const auto& l = feeder.lines[line];
    return feeder.topology.parent_line[l.to] == line ? l.to : l.from;
}

class NewtonSolver {
  public:
    NewtonSolver(const NormalizedFeeder& feeder, const PowerFlowOptions& options)
        : feeder_(feeder),
          options_(options),
          system_(feeder.topology.order, feeder.topology.parent),
          nl_(feeder.n_lines()),
          vm_(nl_),
          vn_(nl_),
          cos_(nl_),
          sin_(nl_),
          g_(nl_),
          b_(nl_) {
        for (std::size_t l = 0; l < nl_; ++l) {
            g_[l] = feeder.lines[l].g;
            b_[l] = feeder.lines[l].b;
        }
    }

    PowerFlowState solve(std::span<const double> dg_p, std::span<const double> dg_q) {
        const std::size_t nb = feeder_.n_buses();
        const std::size_t slack = feeder_.slack();
        if (dg_p.size() != feeder_.n_loads() || (!dg_q.empty() && dg_q.size() != feeder_.n_loads()))
            throw InputError("injection vector length does not match the number of loads");

        std::vector<double> p_inj(nb, 0.0);
        std::vector<double> q_inj(nb, 0.0);
        for (std::size_t d = 0; d < feeder_.n_loads(); ++d) {
            if (!std::isfinite(dg_p[d]) || (!dg_q.empty() && !std::isfinite(dg_q[d])))
                throw InputError("injections must be finite");
            const std::size_t bus = feeder_.load_bus[d];
            p_inj[bus] += dg_p[d] - feeder_.p_demand[d];
            q_inj[bus] += (dg_q.empty() ? 0.0 : dg_q[d]) - feeder_.q_demand[d];
        }

        PowerFlowState st;
        st.v.assign(nb, 1.0);
        st.theta.assign(nb, 0.0);
        std::vector<double> f(2 * nb);
        double mismatch = std::numeric_limits<double>::infinity();
        for (int it = 0;; ++it) {
            compute_flows(st);
            mismatch = compute_mismatch(st, p_inj, q_inj, f);
            if (!std::isfinite(mismatch) || mismatch > 1e8)
                throw NonConvergence("power flow diverged", mismatch);
            if (mismatch < options_.tolerance) {
                st.iterations = it;
                break;
            }
            if (it >= options_.max_iterations)
                throw NonConvergence("power flow did not converge within " +
                                         std::to_string(options_.max_iterations) + " iterations",
                                     mismatch);
            assemble_jacobian(st);
            system_.factor();
            for (double& x : f) x = -x;
            system_.solve(f);
            for (std::size_t i = 0; i < nb; ++i) {
                if (i == slack) continue;
                st.theta[i] += f[2 * i];
                st.v[i] += f[2 * i + 1];
            }
        }
        st.max_mismatch = mismatch;
        st.v[slack] = 1.0;
        st.theta[slack] = 0.0;
        st.p_slack = 0.0;
        st.q_slack = 0.0;
        for (std::size_t l = 0; l < nl_; ++l) {
            const auto& line = feeder_.lines[l];
            if (line.from == slack) {
                st.p_slack += st.p_from[l];
                st.q_slack += st.q_from[l];
            } else if (line.to == slack) {
                st.p_slack += st.p_to[l];
                st.q_slack += st.q_to[l];
            }
        }
        return st;
    }

    void assemble_jacobian(const PowerFlowState& st) {
        const std::size_t slack = feeder_.slack();
        system_.clear();
        for (std::size_t l = 0; l < nl_; ++l) {
            const auto& line = feeder_.lines[l];
            const std::size_t child = child_end(feeder_, l);
            const std::size_t m = line.from;
            const std::size_t n = line.to;
            const double delta = st.theta[m] - st.theta[n];
            const EndFlow fm = end_flow(st.v[m], st.v[n], delta, line.g, line.b);
            const EndFlow fn = end_flow(st.v[n], st.v[m], -delta, line.g, line.b);
            // f = injection - outflow, so every partial enters with a minus sign.
            add(m, m, n, fm, child, slack);
            add(n, n, m, fn, child, slack);
        }
    }

    TreeBlockSystem& system() { return system_; }

  private:
    // Adds -d(outflow of `row` bus on this line)/dx to row `row`; the flow's own
    // end is `a`, the far end `b`.
    void add(std::size_t row, std::size_t a, std::size_t b, const EndFlow& fl, std::size_t child,
             std::size_t slack) {
        if (row == slack) return;
        Block2& d = system_.diag(a);
        d(0, 0) -= fl.dp[0];
        d(0, 1) -= fl.dp[1];
        d(1, 0) -= fl.dq[0];
        d(1, 1) -= fl.dq[1];
        if (b == slack) return;
        Block2& off = (row == child) ? system_.to_parent(child) : system_.from_parent(child);
        off(0, 0) -= fl.dp[2];
        off(0, 1) -= fl.dp[3];
        off(1, 0) -= fl.dq[2];
        off(1, 1) -= fl.dq[3];
    }

    void compute_flows(PowerFlowState& st) {
        st.p_from.resize(nl_);
        st.q_from.resize(nl_);
        st.p_to.resize(nl_);
        st.q_to.resize(nl_);
        for (std::size_t l = 0; l < nl_; ++l) {
            const auto& line = feeder_.lines[l];
            vm_[l] = st.v[line.from];
            vn_[l] = st.v[line.to];
            const double delta = st.theta[line.from] - st.theta[line.to];
            cos_[l] = std::cos(delta);
            sin_[l] = std::sin(delta);
        }
        kernels::active().branch_flows({vm_, vn_, cos_, sin_, g_, b_}, {st.p_from, st.q_from, st.p_to, st.q_to});
    }

    double compute_mismatch(const PowerFlowState& st, const std::vector<double>& p_inj,
                            const std::vector<double>& q_inj, std::vector<double>& f) const {
        const std::size_t nb = feeder_.n_buses();
        for (std::size_t i = 0; i < nb; ++i) {
            f[2 * i] = p_inj[i];
            f[2 * i + 1] = q_inj[i];
        }
        for (std::size_t l = 0; l < nl_; ++l) {
            const auto& line = feeder_.lines[l];
            f[2 * line.from] -= st.p_from[l];
            f[2 * line.from + 1] -= st.q_from[l];
            f[2 * line.to] -= st.p_to[l];
            f[2 * line.to + 1] -= st.q_to[l];
        }
        const std::size_t slack = feeder_.slack();
        f[2 * slack] = 0.0;
        f[2 * slack + 1] = 0.0;
        double worst = 0.0;
        for (double x : f) {
            if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, std::fabs(x));
        }
        return worst;
    }

    const NormalizedFeeder& feeder_;
    PowerFlowOptions options_;
    TreeBlockSystem system_;
    std::size_t nl_;
    std::vector<double> vm_, vn_, cos_, sin_, g_, b_;
};

// Accumulates w * d(outflow)/dx for one line end into the adjoint seed.
void seed_flow(std::vector<double>& seed, std::size_t a, std::size_t b, const double* dp, const double* dq,
               double wp, double wq) {
    seed[2 * a] += wp * dp[0] + wq * dq[0];
    seed[2 * a + 1] += wp * dp[1] + wq * dq[1];
    seed[2 * b] += wp * dp[2] + wq * dq[2];
    seed[2 * b + 1] += wp * dp[3] + wq * dq[3];
}

}  // namespace

std::vector<double> ConstraintResiduals::flatten() const {
    std::vector<double> out;
    out.reserve(2 * v_upper.size() + 4 * thermal.size() + 4);
    out.insert(out.end(), v_upper.begin(), v_upper.end());
    out.insert(out.end(), v_lower.begin(), v_lower.end());
    out.insert(out.end(), thermal.begin(), thermal.end());
    out.insert(out.end(), thermal_reverse.begin(), thermal_reverse.end());
    out.push_back(slack_p[0]);
    out.push_back(slack_p[1]);
    out.push_back(slack_q[0]);
    out.push_back(slack_q[1]);
    out.insert(out.end(), angle_upper.begin(), angle_upper.end());
    out.insert(out.end(), angle_lower.begin(), angle_lower.end());
    return out;
}

double ConstraintResiduals::min_value() const {
    const std::vector<double> flat = flatten();
    return kernels::active().min_value(flat);
}

std::string ResidualLayout::label(const NormalizedFeeder& feeder, std::size_t index) const {
    const auto line_name = [&](std::size_t l) {
        return feeder.bus_ids[feeder.lines[l].from] + "-" + feeder.bus_ids[feeder.lines[l].to];
    };
    if (index < v_lower()) return "v_upper:" + feeder.bus_ids[index];
    if (index < thermal()) return "v_lower:" + feeder.bus_ids[index - v_lower()];
    if (index < thermal_reverse()) return "thermal:" + line_name(index - thermal());
    if (index < slack_p()) return "thermal_reverse:" + line_name(index - thermal_reverse());
    if (index < slack_q()) return index == slack_p() ? "slack_p:upper" : "slack_p:lower";
    if (index < angle_upper()) return index == slack_q() ? "slack_q:upper" : "slack_q:lower";
    if (index < angle_lower()) return "angle_upper:" + line_name(index - angle_upper());
    return "angle_lower:" + line_name(index - angle_lower());
}

std::vector<double> ResidualLayout::scales(const NormalizedFeeder& feeder) const {
    std::vector<double> s(size(), 1.0);
    for (std::size_t l = 0; l < n_lines; ++l) {
        const double rated = feeder.lines[l].s_rated;
        s[thermal() + l] = rated * rated;
        s[thermal_reverse() + l] = rated * rated;
    }
    s[slack_p()] = s[slack_p() + 1] = feeder.p_exchange_max;
    s[slack_q()] = s[slack_q() + 1] = feeder.q_exchange_max;
    return s;
}

PowerFlowState solve_power_flow(const NormalizedFeeder& feeder, std::span<const double> dg_p,
                                std::span<const double> dg_q, const PowerFlowOptions& options) {
    NewtonSolver solver(feeder, options);
    return solver.solve(dg_p, dg_q);
}

ConstraintResiduals constraint_residuals(const PowerFlowState& st, const NormalizedFeeder& feeder) {
    const std::size_t nb = feeder.n_buses();
    const std::size_t nl = feeder.n_lines();
    ConstraintResiduals r;
    r.v_upper.resize(nb);
    r.v_lower.resize(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        r.v_upper[i] = feeder.buses[i].v_max - st.v[i];
        r.v_lower[i] = st.v[i] - feeder.buses[i].v_min;
    }
    r.thermal.resize(nl);
    r.thermal_reverse.resize(nl);
    r.angle_upper.resize(nl);
    r.angle_lower.resize(nl);
    for (std::size_t l = 0; l < nl; ++l) {
        const auto& line = feeder.lines[l];
        const double rated2 = line.s_rated * line.s_rated;
        r.thermal[l] = rated2 - (st.p_from[l] * st.p_from[l] + st.q_from[l] * st.q_from[l]);
        r.thermal_reverse[l] = rated2 - (st.p_to[l] * st.p_to[l] + st.q_to[l] * st.q_to[l]);
        const auto& lim = feeder.buses[child_end(feeder, l)];
        const double delta = st.theta[line.from] - st.theta[line.to];
        r.angle_upper[l] = lim.dtheta_max - delta;
        r.angle_lower[l] = delta - lim.dtheta_min;
    }
    r.slack_p[0] = feeder.p_exchange_max - st.p_slack;
    r.slack_p[1] = st.p_slack + feeder.p_exchange_max;
    r.slack_q[0] = feeder.q_exchange_max - st.q_slack;
    r.slack_q[1] = st.q_slack + feeder.q_exchange_max;
    return r;
}

struct SensitivityModel::Impl {
    Impl(const NormalizedFeeder& f, double q, const PowerFlowOptions& o)
        : feeder(f), q_per_p(q), solver(f, o), layout(residual_layout(f)) {}

    const NormalizedFeeder& feeder;
    double q_per_p;
    NewtonSolver solver;
    ResidualLayout layout;
    PowerFlowState state;
    ConstraintResiduals residuals;
    bool solved = false;
    bool factored = false;
};

SensitivityModel::SensitivityModel(const NormalizedFeeder& feeder, double q_per_p, const PowerFlowOptions& options)
    : impl_(std::make_unique<Impl>(feeder, q_per_p, options)) {}
SensitivityModel::~SensitivityModel() = default;
SensitivityModel::SensitivityModel(SensitivityModel&&) noexcept = default;
SensitivityModel& SensitivityModel::operator=(SensitivityModel&&) noexcept = default;

const PowerFlowState& SensitivityModel::solve(std::span<const double> dg_p) {
    Impl& m = *impl_;
    m.solved = false;
    m.factored = false;
    std::vector<double> dg_q;
    if (m.q_per_p != 0.0) {
        dg_q.resize(dg_p.size());
        for (std::size_t d = 0; d < dg_p.size(); ++d) dg_q[d] = m.q_per_p * dg_p[d];
    }
    m.state = m.solver.solve(dg_p, dg_q);
    m.residuals = constraint_residuals(m.state, m.feeder);
    m.solved = true;
    return m.state;
}

const PowerFlowState& SensitivityModel::state() const { return impl_->state; }
const ConstraintResiduals& SensitivityModel::residuals() const { return impl_->residuals; }

std::vector<double> SensitivityModel::gradient(std::span<const double> weights) {
    Impl& m = *impl_;
    const NormalizedFeeder& feeder = m.feeder;
    const ResidualLayout& layout = m.layout;
    if (!m.solved) throw InputError("gradient requested before a successful solve");
    if (weights.size() != layout.size()) throw InputError("weight vector length does not match the residual count");

    std::vector<double> gradient(feeder.n_loads(), 0.0);
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) return gradient;

    const PowerFlowState& st = m.state;
    const std::size_t nb = feeder.n_buses();
    const std::size_t slack = feeder.slack();

    // seed = d(weights . residuals)/dx, two entries (theta, V) per bus
    std::vector<double> seed(2 * nb, 0.0);
    for (std::size_t i = 0; i < nb; ++i) {
        seed[2 * i + 1] += -weights[layout.v_upper() + i] + weights[layout.v_lower() + i];
    }
    const double wp = -weights[layout.slack_p()] + weights[layout.slack_p() + 1];
    const double wq = -weights[layout.slack_q()] + weights[layout.slack_q() + 1];
    for (std::size_t l = 0; l < feeder.n_lines(); ++l) {
        const auto& line = feeder.lines[l];
        const std::size_t a = line.from;
        const std::size_t b = line.to;
        const double delta = st.theta[a] - st.theta[b];
        const EndFlow fa = end_flow(st.v[a], st.v[b], delta, line.g, line.b);
        const EndFlow fb = end_flow(st.v[b], st.v[a], -delta, line.g, line.b);

        const double wt = weights[layout.thermal() + l];
        const double wr = weights[layout.thermal_reverse() + l];
        seed_flow(seed, a, b, fa.dp, fa.dq, -2.0 * wt * fa.p, -2.0 * wt * fa.q);
        seed_flow(seed, b, a, fb.dp, fb.dq, -2.0 * wr * fb.p, -2.0 * wr * fb.q);

        // slack exchange is the outflow of the slack bus
        if (a == slack) seed_flow(seed, a, b, fa.dp, fa.dq, wp, wq);
        if (b == slack) seed_flow(seed, b, a, fb.dp, fb.dq, wp, wq);

        const double wa = -weights[layout.angle_upper() + l] + weights[layout.angle_lower() + l];
        seed[2 * a] += wa;
        seed[2 * b] -= wa;
    }

    if (!m.factored) {
        m.solver.assemble_jacobian(st);
        m.solver.system().factor();
        m.factored = true;
    }
    m.solver.system().solve_transposed(seed);

    // mismatch f = injection - outflow; df/dp_d = +1 on the P row (and q_per_p on Q),
    // so dx/dp = -J^{-1} df/dp and the gradient is -lambda . df/dp.
    for (std::size_t d = 0; d < feeder.n_loads(); ++d) {
        const std::size_t bus = feeder.load_bus[d];
        if (bus == slack) continue;
        gradient[d] = -(seed[2 * bus] + m.q_per_p * seed[2 * bus + 1]);
    }
    return gradient;
}

SensitivityResult evaluate_with_gradient(const NormalizedFeeder& feeder, std::span<const double> dg_p,
                                         std::span<const double> weights, double q_per_p,
                                         const PowerFlowOptions& options) {
    SensitivityModel model(feeder, q_per_p, options);
    model.solve(dg_p);
    SensitivityResult out;
    out.gradient = model.gradient(weights);
    out.state = model.state();
    out.residuals = model.residuals();
    return out;
}

std::vector<double> adjoint_gradient(const NormalizedFeeder& feeder, std::span<const double> dg_p,
                                     std::span<const double> weights, double q_per_p,
                                     const PowerFlowOptions& options) {
    return evaluate_with_gradient(feeder, dg_p, weights, q_per_p, options).gradient;
}

double min_residual(const NormalizedFeeder& feeder, std::span<const double> dg_p, double q_per_p) {
    try {
        std::vector<double> dg_q;
        if (q_per_p != 0.0) {
            dg_q.resize(dg_p.size());
            for (std::size_t d = 0; d < dg_p.size(); ++d) dg_q[d] = q_per_p * dg_p[d];
        }
        const PowerFlowState st = solve_power_flow(feeder, dg_p, dg_q);
        return constraint_residuals(st, feeder).min_value();
    } catch (const NumericalError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

std::string state_to_json(const PowerFlowState& st, const NormalizedFeeder& feeder) {
    using nlohmann::json;
    json buses = json::array();
    for (std::size_t i = 0; i < feeder.n_buses(); ++i) {
        buses.push_back({{"id", feeder.bus_ids[i]}, {"v_pu", st.v[i]}, {"theta_rad", st.theta[i]}});
    }
    json lines = json::array();
    for (std::size_t l = 0; l < feeder.n_lines(); ++l) {
        lines.push_back({{"from", feeder.bus_ids[feeder.lines[l].from]},
                         {"to", feeder.bus_ids[feeder.lines[l].to]},
                         {"p_from_pu", st.p_from[l]},
                         {"q_from_pu", st.q_from[l]},
                         {"p_to_pu", st.p_to[l]},
                         {"q_to_pu", st.q_to[l]}});
    }
    const ConstraintResiduals res = constraint_residuals(st, feeder);
    const std::vector<double> flat = res.flatten();
    const ResidualLayout layout = residual_layout(feeder);
    const auto worst = std::min_element(flat.begin(), flat.end());
    json doc{{"buses", std::move(buses)},
             {"lines", std::move(lines)},
             {"p_slack_pu", st.p_slack},
             {"q_slack_pu", st.q_slack},
             {"iterations", st.iterations},
             {"max_mismatch_pu", st.max_mismatch},
             {"min_residual", worst == flat.end() ? 0.0 : *worst},
             {"min_residual_id",
              worst == flat.end() ? "" : layout.label(feeder, static_cast<std::size_t>(worst - flat.begin()))},
             {"within_limits", worst == flat.end() || *worst >= 0.0}};
    return doc.dump(2);
}

}  // namespace fairhc
