#include "fairhc/cli.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fairhc/errors.hpp"
#include "fairhc/kpi.hpp"
#include "fairhc/pareto.hpp"
#include "fairhc/powerflow.hpp"
#include "fairhc/solver.hpp"
#include "fairhc/synth.hpp"

#ifndef FAIRHC_VERSION
#define FAIRHC_VERSION "0.0.0"
#endif

namespace fairhc::cli {
namespace {

using nlohmann::json;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot read '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

// SOURCE_DATE_EPOCH pins the timestamp for reproducible output.
std::string timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end && *end == '\0') t = static_cast<std::time_t>(v);
    }
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(t));
}

json options_json(const SolverOptions& o) {
    return {{"tol", o.tol},
            {"optimality_tol", o.optimality_tol},
            {"feasibility_tol", o.feasibility_tol},
            {"max_outer", o.max_outer},
            {"max_inner", o.max_inner},
            {"starts", o.starts},
            {"seed", o.seed},
            {"grid_steps", o.grid_steps},
            {"dg_power_factor", o.dg_power_factor}};
}

struct Context {
    std::span<const std::string> args;
    std::ostream& out;
    SolverOptions options;
    std::string out_path;
};

json manifest(const Context& ctx, const std::string& feeder_text, const std::string& policy) {
    std::string cmd = "fairhc";
    for (const auto& a : ctx.args) cmd += " " + a;
    return {{"command_line", cmd},
            {"feeder_sha256", feeder_text.empty() ? json(nullptr) : json(sha256_hex(feeder_text))},
            {"policy", policy.empty() ? json(nullptr) : json(policy)},
            {"solver_options", options_json(ctx.options)},
            {"tool_version", FAIRHC_VERSION},
            {"timestamp", timestamp()}};
}

void emit(const Context& ctx, const std::string& text) {
    if (ctx.out_path.empty()) {
        ctx.out << text;
        return;
    }
    std::ofstream f(ctx.out_path, std::ios::binary);
    if (!f) throw InputError(fmt::format("cannot write '{}'", ctx.out_path));
    f << text;
}

json point_json(const ParetoPoint& p) {
    return {{"family", std::string(to_string(p.family))},
            {"param", p.param},
            {"hc_kw", p.hc_kw},
            {"pof", p.pof},
            {"gini", p.gini},
            {"status", std::string(to_string(p.status))}};
}

std::string compose_policy(std::string text, const std::optional<double>& alpha, const std::optional<double>& beta,
                           const std::optional<double>& k) {
    if (text.find(':') != std::string::npos) {
        if (alpha || beta || k) throw InputError("give policy parameters either inline or as flags, not both");
        return text;
    }
    std::vector<std::string> params;
    if (alpha) params.push_back(fmt::format("alpha={}", *alpha));
    if (beta) params.push_back(fmt::format("beta={}", *beta));
    if (k) params.push_back(fmt::format("k={}", *k));
    if (!params.empty()) text += ":" + fmt::format("{}", fmt::join(params, ","));
    return text;
}

std::shared_ptr<const NormalizedFeeder> normalized(const std::string& text) {
    return std::make_shared<const NormalizedFeeder>(to_per_unit(parse_feeder(text)));
}

}  // namespace

void init_logging() {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("fairhc");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
        spdlog::set_level(spdlog::level::warn);
        if (const char* env = std::getenv("FAIRHC_LOG"); env && *env)
            spdlog::set_level(spdlog::level::from_str(env));
    });
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    init_logging();
    Context ctx{args, out, {}, {}};
    SolverOptions& so = ctx.options;

    CLI::App app{"Fairness-constrained hosting capacity of radial LV feeders", "fairhc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", FAIRHC_VERSION);

    std::string feeder_path;
    const auto add_solver_flags = [&](CLI::App* sub) {
        sub->add_option("--tol", so.tol, "Constraint-violation tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--max-outer", so.max_outer, "Augmented-Lagrangian outer iterations")->check(CLI::PositiveNumber);
        sub->add_option("--starts", so.starts, "Number of solver starts")->check(CLI::PositiveNumber);
        sub->add_option("--seed", so.seed, "Seed for starts beyond the deterministic ones");
        sub->add_option("--grid-steps", so.grid_steps, "Grid points per load for --oracle")->check(CLI::Range(2, 100000));
        sub->add_option("--dg-pf", so.dg_power_factor, "DG power factor (absorbing); 1 = unity")
            ->check(CLI::Range(0.0, 1.0));
    };
    const auto add_out = [&](CLI::App* sub) { sub->add_option("--out", ctx.out_path, "Write output to this file"); };

    CLI::App* validate = app.add_subcommand("validate", "Parse and validate a feeder file");
    validate->add_option("feeder", feeder_path, "Feeder JSON")->required();

    CLI::App* stats = app.add_subcommand("stats", "Aggregate feeder statistics and electrical distances");
    stats->add_option("feeder", feeder_path, "Feeder JSON")->required();
    add_out(stats);

    std::vector<double> dg_kw;
    CLI::App* pf = app.add_subcommand("pf", "Solve one power flow");
    pf->add_option("feeder", feeder_path, "Feeder JSON")->required();
    pf->add_option("--dg", dg_kw, "DG kW per load, comma separated (default all zero)")->delimiter(',');
    pf->add_option("--dg-pf", so.dg_power_factor, "DG power factor (absorbing); 1 = unity")->check(CLI::Range(0.0, 1.0));
    add_out(pf);

    std::string policy_text = "utilitarian";
    std::optional<double> alpha, beta, kk;
    bool oracle = false;
    CLI::App* solve = app.add_subcommand("solve", "Hosting capacity under one fairness policy");
    solve->add_option("feeder", feeder_path, "Feeder JSON")->required();
    solve->add_option("--policy", policy_text, "utilitarian | egalitarian | bounded:alpha=A,beta=B | bargaining:k=K");
    solve->add_option("--alpha", alpha, "Bounded lower parameter");
    solve->add_option("--beta", beta, "Bounded upper parameter");
    solve->add_option("--k", kk, "Bargaining weight");
    solve->add_flag("--oracle", oracle, "Use the exhaustive grid search (at most three loads)");
    add_solver_flags(solve);
    add_out(solve);

    std::string family_text = "bargaining";
    int steps = 21;
    int jobs = 1;
    CLI::App* pareto = app.add_subcommand("pareto", "Sweep a policy family into a PoF-Gini frontier CSV");
    pareto->add_option("feeder", feeder_path, "Feeder JSON")->required();
    pareto->add_option("--family", family_text, "bounded_lower | bounded_upper | bargaining");
    pareto->add_option("--steps", steps, "Parameter values in [0, 1]")->check(CLI::Range(2, 100000));
    pareto->add_option("--jobs", jobs, "Parallel solves")->check(CLI::Range(1, 1024));
    add_solver_flags(pareto);
    add_out(pareto);

    std::string csv_path;
    CLI::App* knee = app.add_subcommand("knee", "Knee point of a frontier CSV");
    knee->add_option("frontier", csv_path, "CSV written by 'pareto'")->required();
    add_out(knee);

    SynthSpec spec;
    std::string layout_text = "linear";
    const auto add_spec_flags = [&](CLI::App* sub) {
        sub->add_option("--n-loads", spec.n_loads, "Load count")->check(CLI::PositiveNumber);
        sub->add_option("--trunk-m", spec.trunk_len_m, "Trunk length in metres");
        sub->add_option("--branch-m", spec.branch_len_m, "Lateral length in metres");
        sub->add_option("--r-ohm-km", spec.conductor.r_ohm_per_km, "Conductor resistance");
        sub->add_option("--x-ohm-km", spec.conductor.x_ohm_per_km, "Conductor reactance");
        sub->add_option("--i-rated", spec.conductor.i_rated_a, "Conductor rating in A");
        sub->add_option("--load-kw", spec.load_p_kw, "Active demand per load");
        sub->add_option("--load-kvar", spec.load_q_kvar, "Reactive demand per load");
        sub->add_option("--dg-cap", spec.dg_cap_kw, "DG ceiling per load in kW");
    };
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic feeder");
    synth->add_option("--layout", layout_text, "linear | branched");
    add_spec_flags(synth);
    synth->add_option("--seed", spec.seed, "Reserved; layouts are deterministic");
    add_out(synth);

    CLI::App* experiment =
        app.add_subcommand("experiment", "Linear vs branched layouts of equal length and load count");
    add_spec_flags(experiment);
    add_solver_flags(experiment);
    add_out(experiment);

    std::vector<std::string> argv_store{"fairhc"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*validate) {
            const Feeder f = load_feeder_file(feeder_path);
            out << fmt::format("{}: ok ({} buses, {} lines, {} loads)\n", feeder_path, f.buses().size(),
                               f.lines().size(), f.loads().size());
        } else if (*stats) {
            const std::string text = read_text(feeder_path);
            const Feeder f = parse_feeder(text);
            const FeederStats s = feeder_stats(f);
            json dist = json::object();
            const std::vector<double> d = electrical_distances(f);
            for (std::size_t i = 0; i < f.buses().size(); ++i) dist[f.buses()[i].id] = d[i];
            const json doc{{"manifest", manifest(ctx, text, "")},
                           {"stats",
                            {{"total_length_km", s.total_length_km},
                             {"total_resistance_ohm", s.total_resistance},
                             {"total_reactance_ohm", s.total_reactance},
                             {"r_over_x", std::isfinite(s.r_over_x) ? json(s.r_over_x) : json("inf")},
                             {"impedance_ohm", s.impedance},
                             {"n_loads", s.n_loads},
                             {"n_buses", s.n_buses}}},
                           {"electrical_distance_ohm", dist}};
            emit(ctx, doc.dump(2) + "\n");
        } else if (*pf) {
            const std::string text = read_text(feeder_path);
            const auto feeder = normalized(text);
            if (dg_kw.empty()) dg_kw.assign(feeder->n_loads(), 0.0);
            if (dg_kw.size() != feeder->n_loads())
                throw InputError(fmt::format("--dg needs {} values, got {}", feeder->n_loads(), dg_kw.size()));
            std::vector<double> p(dg_kw.size()), q(dg_kw.size());
            const double ratio = reactive_ratio(so);
            for (std::size_t d = 0; d < p.size(); ++d) {
                p[d] = dg_kw[d] / feeder->s_base;
                q[d] = ratio * p[d];
            }
            const PowerFlowState st = solve_power_flow(*feeder, p, q);
            const json doc{{"manifest", manifest(ctx, text, "")}, {"state", json::parse(state_to_json(st, *feeder))}};
            emit(ctx, doc.dump(2) + "\n");
        } else if (*solve) {
            const std::string text = read_text(feeder_path);
            const auto feeder = normalized(text);
            const FairnessPolicy policy = parse_policy(compose_policy(policy_text, alpha, beta, kk));
            const ReferenceSolutions refs = solve_references(feeder, so);
            const HCProblem problem = build_problem(feeder, policy, refs.refs);
            const HCSolution sol = oracle ? brute_force_oracle(problem, so.grid_steps, so) : solve_hc(problem, so);
            const KpiReport kpi = kpi_report(refs.utilitarian.hc_total, sol.allocation);
            const json doc{{"manifest", manifest(ctx, text, to_string(policy))},
                           {"solution", json::parse(solution_to_json(sol, *feeder))},
                           {"kpi", json::parse(kpi_to_json(kpi))}};
            emit(ctx, doc.dump(2) + "\n");
            if (sol.status != SolveStatus::optimal)
                err << fmt::format("warning: solver stopped with status {}\n", to_string(sol.status));
        } else if (*pareto) {
            const std::string text = read_text(feeder_path);
            const Family family = parse_family(family_text);
            if (family == Family::endpoint_uti || family == Family::endpoint_egal)
                throw InputError("--family must be bounded_lower, bounded_upper or bargaining");
            const Frontier fr = sweep(normalized(text), family, steps, so, jobs, feeder_path);
            emit(ctx, frontier_csv(fr.points));
        } else if (*knee) {
            const std::vector<ParetoPoint> points = parse_frontier_csv(read_text(csv_path));
            const ParetoPoint k = knee_point(points);
            const json doc{{"manifest", manifest(ctx, "", "")}, {"knee", point_json(k)}};
            emit(ctx, doc.dump(2) + "\n");
        } else if (*synth) {
            spec.layout = parse_layout(layout_text);
            emit(ctx, serialize_feeder(generate_feeder(spec)) + "\n");
        } else if (*experiment) {
            SynthSpec lin = spec;
            lin.layout = Layout::linear;
            SynthSpec bra = spec;
            bra.layout = Layout::branched;
            bra.trunk_len_m = spec.trunk_len_m - static_cast<double>(spec.n_loads) * spec.branch_len_m;
            if (!(bra.trunk_len_m > 0.0))
                throw InputError("--trunk-m must exceed n_loads * --branch-m so both layouts share one length");
            const TopologyReport r = topology_experiment(lin, bra, so);
            const json doc{{"manifest", manifest(ctx, "", "")},
                           {"linear_trunk_m", lin.trunk_len_m},
                           {"branched_trunk_m", bra.trunk_len_m},
                           {"branch_m", bra.branch_len_m},
                           {"report", json::parse(topology_report_to_json(r))}};
            emit(ctx, doc.dump(2) + "\n");
        }
    } catch (const Infeasible& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace fairhc::cli
