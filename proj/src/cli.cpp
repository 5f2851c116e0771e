#include "porosplit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "porosplit/bdf.hpp"
#include "porosplit/csv.hpp"
#include "porosplit/fem2d.hpp"
#include "porosplit/splitsolve.hpp"
#include "porosplit/stability.hpp"
#include "porosplit/studies.hpp"
#include "porosplit/system.hpp"

namespace porosplit::cli {

namespace {

const std::map<std::string, Command> kCommands{
    {"toy", Command::Toy},         {"biot2d", Command::Biot2d},       {"network", Command::Network},
    {"balance", Command::Balance}, {"iters", Command::Iters},         {"stability", Command::Stability},
    {"convergence", Command::Convergence},
};

const std::map<std::string, Problem> kProblems{
    {"toy", Problem::Toy}, {"biot2d", Problem::Biot2d}, {"network-toy", Problem::NetworkToy}};

const std::map<std::string, ReferenceChoice> kReferences{{"analytic", ReferenceChoice::Analytic},
                                                         {"fine", ReferenceChoice::Fine}};

template <class E>
std::string_view name_of(const std::map<std::string, E>& table, E value) noexcept {
    for (const auto& [name, v] : table)
        if (v == value) return name;
    return "?";
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ValidationError, what); }

bool divides(double tau, double T) {
    const double ratio = T / tau;
    return std::abs(ratio - std::round(ratio)) <= 1e-9 && std::round(ratio) >= 1.0;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += csv::format_double(v[i]);
    }
    return s;
}

/// Fills every setting left open on the command line with its per-command default.
void apply_defaults(RunConfig& cfg) {
    if (cfg.taus.empty()) {
        switch (cfg.command) {
            case Command::Convergence:
            case Command::Balance:
                cfg.taus = studies::halving_taus(3, 7);
                break;
            case Command::Iters:
                cfg.taus = cfg.problem == Problem::Biot2d ? studies::halving_taus(4, 9) : studies::halving_taus(3, 8);
                break;
            default:
                cfg.taus = {0.0625};
        }
    }
    if (cfg.exponents.empty()) {
        if (cfg.command == Command::Balance) {
            for (double d : {0.0, 0.5, 1.0, 1.5, 2.0}) cfg.exponents.push_back(cfg.k + d);
        } else if (cfg.command == Command::Iters && cfg.problem == Problem::Biot2d) {
            cfg.exponents = {1.0, 1.5, 2.0};
        }
    }
    if (!cfg.tol && !cfg.tol_exponent && !cfg.order_tol) cfg.tol_exponent = cfg.k + 1.5;
}

struct ParseOutcome {
    std::optional<RunConfig> config;
    std::string help;
};

ParseOutcome parse_impl(const std::vector<std::string>& args, const std::optional<std::filesystem::path>& file) {
    RunConfig cfg;
    std::string problem = "toy", reference = "fine", out;
    std::vector<double> taus, omegas, gammas, exponents, alphas, ms, kappas;

    CLI::App app{"Iteratively decoupled BDF-k time stepping for coupled elliptic-parabolic systems", "porosplit"};
    app.footer(exit_code_help());
    app.set_config("--config", "", "Flat key = value file; keys are the long flag names");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    app.add_option("--out", out, "Output directory (fallback: $POROSPLIT_OUT, then .)");
    app.add_option("--seed", cfg.seed, "Root seed of randomized checks");
    app.add_option("--threads", cfg.threads, "Worker threads for studies");
    app.add_flag("--dry-run", cfg.dry_run, "Print the resolved configuration and stop");

    app.add_option("--k", cfg.k, "BDF order (1..5)");
    app.add_option("--tau", taus, "Step size, or a comma-separated list for studies")->delimiter(',');
    app.add_option("--T", cfg.T, "Final time");
    app.add_option("--tol", cfg.tol, "Absolute tolerance of the termination functional");
    app.add_option("--tol-exponent", cfg.tol_exponent, "tol = tau^s");
    app.add_flag("--order-tol", cfg.order_tol, "convergence: tol = 10^(-3-3k)");
    app.add_option("--gamma", cfg.gamma, "Prescribed contraction (derives L)");
    app.add_option("--L", cfg.L, "Stabilization parameter");
    app.add_option("--omega", cfg.omega, "Coupling strength of the toy problem");
    app.add_option("--grid", cfg.grid, "Cells per side of the 2D grid");
    app.add_option("--max-inner", cfg.max_inner, "Inner iteration limit per step");
    app.add_option("--tol-tau-exponent", cfg.tol_tau_exponent, "iters (toy): tol = mean implicit error * tau^s");
    app.add_option("--omegas", omegas, "iters: coupling strengths")->delimiter(',');
    app.add_option("--gammas", gammas, "iters: contraction targets")->delimiter(',');
    app.add_option("--exponents", exponents, "balance: s values; iters (biot2d): offsets d in tau^(k+d)")
        ->delimiter(',');
    app.add_option("--alphas", alphas, "network: Biot-Willis coefficients")->delimiter(',');
    app.add_option("--Ms", ms, "network: Biot moduli")->delimiter(',');
    app.add_option("--kappas", kappas, "network: permeabilities")->delimiter(',');
    app.add_option("--beta", cfg.beta, "network: exchange rate between networks");
    app.add_option("--problem", problem, "System for studies: toy, biot2d, network-toy");
    app.add_option("--reference", reference, "Reference for errors: analytic or fine");
    app.add_option("--ref-factor", cfg.ref_factor, "tau_ref = min(tau) / factor");
    app.add_option("--substeps", cfg.substeps, "Substeps of the start-up phase of the fine reference");

    std::map<std::string, CLI::App*> subs;
    subs["toy"] = app.add_subcommand("toy", "Single run on the scalar toy problem");
    subs["biot2d"] = app.add_subcommand("biot2d", "Single run on the manufactured 2D Biot problem");
    subs["network"] = app.add_subcommand("network", "Single run on the multiple-network toy");
    subs["balance"] = app.add_subcommand("balance", "Tolerance/step-size balancing study");
    subs["iters"] = app.add_subcommand("iters", "Mean inner iteration counts");
    subs["stability"] = app.add_subcommand("stability", "Multiplier certificates for k = 1..5");
    subs["convergence"] = app.add_subcommand("convergence", "Temporal convergence study");
    for (auto& [name, sub] : subs) sub->fallthrough();

    std::vector<std::string> argv(args.rbegin(), args.rend());
    const bool has_config =
        std::any_of(args.begin(), args.end(), [](const std::string& a) { return a.rfind("--config", 0) == 0; });
    if (file && !has_config) argv.push_back("--config=" + file->string());

    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        return {std::nullopt, app.help()};
    } catch (const CLI::CallForAllHelp&) {
        return {std::nullopt, app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        throw Error(ErrorCode::UsageError, e.what());
    }

    for (auto& [name, sub] : subs)
        if (sub->parsed()) cfg.command = kCommands.at(name);
    auto lookup = [](const auto& table, const std::string& key, const char* what) {
        const auto it = table.find(key);
        if (it == table.end()) throw Error(ErrorCode::UsageError, std::string("unknown ") + what + " '" + key + "'");
        return it->second;
    };
    cfg.problem = lookup(kProblems, problem, "problem");
    cfg.reference = lookup(kReferences, reference, "reference");
    cfg.taus = taus;
    if (!omegas.empty()) cfg.omegas = omegas;
    if (!gammas.empty()) cfg.gammas = gammas;
    cfg.exponents = exponents;
    if (!alphas.empty()) cfg.alphas = alphas;
    if (!ms.empty()) cfg.Ms = ms;
    if (!kappas.empty()) cfg.kappas = kappas;
    if (!out.empty()) {
        cfg.out = out;
    } else if (const char* env = std::getenv("POROSPLIT_OUT"); env && *env) {
        cfg.out = env;
    }
    if (cfg.command == Command::Biot2d) cfg.problem = Problem::Biot2d;
    if (cfg.command == Command::Network) cfg.problem = Problem::NetworkToy;
    if (cfg.command == Command::Toy) cfg.problem = Problem::Toy;

    validate(cfg);
    apply_defaults(cfg);
    validate(cfg);
    return {std::move(cfg), {}};
}

// -----------------------------------------------------------------------------
// Execution helpers
// -----------------------------------------------------------------------------

NetworkParameters network_parameters(const RunConfig& cfg) {
    NetworkParameters p;
    p.alphas = cfg.alphas;
    p.Ms = cfg.Ms;
    p.kappas = cfg.kappas;
    const std::size_t J = cfg.alphas.size();
    p.betas.assign(J, std::vector<double>(J, cfg.beta));
    for (std::size_t i = 0; i < J; ++i) p.betas[i][i] = 0.0;
    return p;
}

CoupledSystem build_system(const RunConfig& cfg, Problem problem) {
    switch (problem) {
        case Problem::Toy:
            return make_toy(cfg.omega);
        case Problem::Biot2d:
            return fem2d::make_manufactured_biot(cfg.grid, fem2d::BiotParameters::defaults());
        case Problem::NetworkToy:
            return make_network_toy(network_parameters(cfg));
    }
    throw Error(ErrorCode::InvalidParameter, "unknown problem");
}

/// Stabilization and iteration limits shared by all split runs.
SplitConfig base_split(const RunConfig& cfg, Problem problem) {
    SplitConfig sc;
    sc.L = cfg.L;
    sc.gamma_target = cfg.gamma;
    sc.max_inner = cfg.max_inner;
    if (!cfg.L && !cfg.gamma) {
        if (problem == Problem::Biot2d) sc.L = fem2d::fixed_stress_L(fem2d::BiotParameters::defaults());
        if (problem == Problem::NetworkToy) sc.gamma_target = 0.5;
    }
    return sc;
}

double run_tol(const RunConfig& cfg, double tau) {
    if (cfg.tol) return *cfg.tol;
    return std::pow(tau, cfg.tol_exponent.value_or(cfg.k + 1.5));
}

studies::TolRule tol_rule(const RunConfig& cfg) {
    if (cfg.order_tol) return studies::TolRule::order_fixed();
    if (cfg.tol) return studies::TolRule::fixed(*cfg.tol);
    return studies::TolRule::exponent(cfg.tol_exponent.value_or(cfg.k + 1.5));
}

studies::ReferenceKind reference_kind(const RunConfig& cfg, const CoupledSystem& sys) {
    if (cfg.reference == ReferenceChoice::Analytic) {
        if (!sys.has_exact()) invalid("the " + sys.name + " problem has no analytic reference");
        return studies::ReferenceKind::Analytic;
    }
    return studies::ReferenceKind::FineImplicit;
}

std::filesystem::path output_file(const RunConfig& cfg, std::string_view study, const std::string& suffix = "") {
    return cfg.out / (std::string(study) + "_" + std::to_string(cfg.k) + suffix + ".csv");
}

void announce(std::ostream& out, const std::filesystem::path& path) { out << "wrote " << path.string() << '\n'; }

double max_contraction(const Trajectory& traj) {
    double m = 0.0;
    for (const auto& r : traj.reports)
        for (double x : r.contraction_ratios) m = std::max(m, x);
    return m;
}

void print_run_summary(std::ostream& out, const CoupledSystem& sys, const Trajectory& traj) {
    const StepReport* first = nullptr;
    for (const auto& r : traj.reports)
        if (r.iterations > 0) {
            first = &r;
            break;
        }
    out << "problem " << sys.name << ", steps " << traj.steps() << ", tau " << csv::format_double(traj.tau) << '\n';
    if (first) {
        out << "L " << csv::format_double(first->L) << ", predictor gamma " << csv::format_double(first->gamma)
            << '\n';
    }
    out << "mean inner iterations " << std::fixed << std::setprecision(3) << traj.mean_iterations()
        << ", largest contraction ratio " << max_contraction(traj) << std::defaultfloat << '\n';
    if (sys.has_exact()) {
        const auto ref = studies::analytic_reference(sys);
        double worst = 0.0;
        for (std::size_t n = 0; n < traj.times.size(); ++n) {
            const auto [u, p] = ref(traj.times[n]);
            worst = std::max(worst, std::sqrt(weighted_norm_sq(sys.norm_V, subtract(traj.u[n], u))) +
                                        std::sqrt(weighted_norm_sq(sys.norm_H, subtract(traj.p[n], p))));
        }
        out << "max error against the exact solution " << std::scientific << std::setprecision(4) << worst
            << std::defaultfloat << '\n';
    }
}

void run_single(const RunConfig& cfg, std::ostream& out) {
    const CoupledSystem sys = build_system(cfg, cfg.problem);
    SplitConfig sc = base_split(cfg, cfg.problem);
    const double tau = cfg.taus.front();
    sc.tol = run_tol(cfg, tau);
    if (cfg.problem == Problem::Toy) {
        sc.startup = ExactDataStartup{studies::analytic_reference(sys)};
    } else {
        sc.startup = SubstepBootstrap{cfg.substeps};
    }
    const Trajectory traj = integrate(sys, sc, cfg.k, tau, cfg.T, Mode::Split);
    print_run_summary(out, sys, traj);
    if (cfg.problem == Problem::NetworkToy) {
        out << "contraction bound " << csv::format_double(contraction_factor(traj.reports.back().L,
                                                                                   *sys.constants.c_c))
            << '\n';
    }

    const std::string_view study = to_string(cfg.command);
    const auto path = output_file(cfg, study);
    csv::write_table(path, studies::step_report_table(traj));
    announce(out, path);
    if (cfg.problem == Problem::Biot2d) {
        const auto grid = fem2d::Grid2D::unit_square(cfg.grid);
        const auto pressure = output_file(cfg, study, "_pressure");
        fem2d::write_nodal_csv(pressure, grid, traj.p.back());
        announce(out, pressure);
    }
}

void run_convergence(const RunConfig& cfg, std::ostream& out) {
    const CoupledSystem sys = build_system(cfg, cfg.problem);
    studies::ConvergenceOptions opt;
    opt.k = cfg.k;
    opt.taus = cfg.taus;
    opt.tol = tol_rule(cfg);
    opt.reference = reference_kind(cfg, sys);
    opt.T = cfg.T;
    opt.ref_factor = cfg.ref_factor;
    opt.substeps = cfg.substeps;
    opt.base = base_split(cfg, cfg.problem);
    opt.threads = cfg.threads;
    const auto res = studies::convergence_study(sys, opt);

    out << std::setw(12) << "tau" << std::setw(14) << "split" << std::setw(14) << "implicit" << '\n';
    for (std::size_t i = 0; i < res.split_eoc.taus.size(); ++i) {
        out << std::setw(12) << csv::format_double(res.split_eoc.taus[i]) << std::scientific << std::setprecision(4)
            << std::setw(14) << res.split_eoc.errors[i] << std::setw(14) << res.implicit_eoc.errors[i]
            << std::defaultfloat << '\n';
    }
    out << "fitted order: split " << std::fixed << std::setprecision(3) << res.split_eoc.fitted() << ", implicit "
        << res.implicit_eoc.fitted() << std::defaultfloat << '\n';
    out << "predictor bounded on " << res.audit.bounded << " of " << res.audit.steps << " steps\n";
    const auto path = output_file(cfg, "convergence");
    csv::write_table(path, studies::convergence_table(res));
    announce(out, path);
}

void run_balance(const RunConfig& cfg, std::ostream& out) {
    const CoupledSystem sys = build_system(cfg, cfg.problem);
    studies::BalancingOptions opt;
    opt.k = cfg.k;
    opt.taus = cfg.taus;
    opt.exponents = cfg.exponents;
    opt.reference = reference_kind(cfg, sys);
    opt.T = cfg.T;
    opt.ref_factor = cfg.ref_factor;
    opt.substeps = cfg.substeps;
    opt.base = base_split(cfg, cfg.problem);
    opt.threads = cfg.threads;
    const auto res = studies::balancing_study(sys, opt);

    out << "worst split/implicit ratio per exponent:\n";
    for (double s : cfg.exponents) {
        out << "  s = " << csv::format_double(s) << ": " << std::fixed << std::setprecision(3) << res.worst_ratio(s)
            << std::defaultfloat << '\n';
    }
    const auto balanced = static_cast<std::size_t>(std::count(res.balanced.begin(), res.balanced.end(), true));
    out << "s = k + 3/2 within factor 2 on " << balanced << " of " << res.balanced.size() << " step sizes\n";
    const auto path = output_file(cfg, "balancing");
    csv::write_table(path, studies::balancing_table(res));
    announce(out, path);
}

void run_iters(const RunConfig& cfg, std::ostream& out) {
    if (cfg.problem == Problem::Biot2d) {
        const CoupledSystem sys = build_system(cfg, cfg.problem);
        studies::AverageIterationOptions opt;
        opt.k = cfg.k;
        opt.taus = cfg.taus;
        opt.offsets = cfg.exponents;
        opt.T = cfg.T;
        opt.base = base_split(cfg, cfg.problem);
        opt.threads = cfg.threads;
        const auto res = studies::average_iteration_table(sys, opt);
        for (const auto& r : res.records) {
            out << "s = " << csv::format_double(r.s) << ", tau = " << csv::format_double(r.tau) << ": " << std::fixed
                << std::setprecision(2) << r.mean_iterations << std::defaultfloat << '\n';
        }
        const auto path = output_file(cfg, "average_iterations");
        csv::write_table(path, studies::average_iteration_csv(res));
        announce(out, path);
        return;
    }
    studies::IterationOptions opt;
    opt.k = cfg.k;
    opt.omegas = cfg.omegas;
    opt.gammas = cfg.gammas;
    opt.taus = cfg.taus;
    opt.T = cfg.T;
    opt.tol_tau_exponent = cfg.tol_tau_exponent;
    opt.threads = cfg.threads;
    const auto res = studies::iteration_study(opt);
    for (const auto& r : res.records) {
        out << "omega = " << csv::format_double(r.omega) << ", gamma = " << csv::format_double(r.gamma)
            << ", tau = " << csv::format_double(r.tau) << ": " << r.mean_Jn << '\n';
    }
    out << "largest deviation of measured ratios from gamma " << std::scientific << std::setprecision(2)
        << res.max_ratio_deviation << std::defaultfloat << '\n';
    const auto path = output_file(cfg, "iterations");
    csv::write_table(path, studies::iteration_table(res));
    announce(out, path);
}

void run_stability(const RunConfig& cfg, std::ostream& out) {
    csv::Table table({"k", "eta", "min_real_part", "min_real_part_eta0", "identity_relative_residual"});
    for (int k = 1; k <= 5; ++k) {
        const auto cert = stability::find_multiplier(k);
        const double at_zero = stability::criterion_min(k, 0.0, cert.sample_count);
        csv::Cell identity = std::string{};
        std::string identity_text = "-";
        if (k <= 2) {
            const auto res = stability::verify_identity(stability::GStabilityData::reference(k), 1000, 20, cfg.seed);
            identity = res.max_relative;
            std::ostringstream s;
            s << std::scientific << std::setprecision(2) << res.max_relative;
            identity_text = s.str();
        }
        table.add_row({static_cast<std::int64_t>(k), cert.eta, cert.min_real_part, at_zero, identity});
        out << "k = " << k << ": eta = " << csv::format_double(cert.eta) << std::scientific << std::setprecision(3)
            << ", min Re = " << cert.min_real_part << ", at eta = 0: " << at_zero << std::defaultfloat
            << ", identity residual " << identity_text << '\n';
    }
    const auto path = cfg.out / "stability.csv";
    csv::write_table(path, table);
    announce(out, path);
}

}  // namespace

std::string_view to_string(Command c) noexcept { return name_of(kCommands, c); }
std::string_view to_string(Problem p) noexcept { return name_of(kProblems, p); }

RunConfig parse_config(const std::vector<std::string>& args, const std::optional<std::filesystem::path>& file) {
    ParseOutcome outcome = parse_impl(args, file);
    if (!outcome.config) throw Error(ErrorCode::UsageError, "help requested");
    return std::move(*outcome.config);
}

void validate(const RunConfig& cfg) {
    if (cfg.k < 1 || cfg.k > 5) {
        invalid(std::string(porosplit::to_string(ErrorCode::UnsupportedOrder)) + ": k = " + std::to_string(cfg.k) +
                " is outside 1..5");
    }
    if (cfg.gamma && cfg.L) invalid("--gamma and --L are mutually exclusive");
    if (cfg.gamma && !(*cfg.gamma > 0.0 && *cfg.gamma < 1.0)) invalid("gamma must lie in (0, 1)");
    if (cfg.L && !(*cfg.L > 0.0)) invalid("L must be positive");
    if (!(cfg.T > 0.0)) invalid("T must be positive");
    for (double tau : cfg.taus) {
        if (!(tau > 0.0)) invalid("tau must be positive");
        if (!divides(tau, cfg.T)) invalid("tau = " + csv::format_double(tau) + " does not divide T");
    }
    if (cfg.tol && !(*cfg.tol > 0.0)) invalid("tol must be positive");
    if (cfg.tol && cfg.tol_exponent) invalid("--tol and --tol-exponent are mutually exclusive");
    if (cfg.order_tol && (cfg.tol || cfg.tol_exponent)) invalid("--order-tol excludes --tol and --tol-exponent");
    if (!(cfg.omega > 0.0)) invalid("omega must be positive");
    if (cfg.grid < 2) invalid("grid must be at least 2");
    if (cfg.max_inner < 1) invalid("max-inner must be at least 1");
    if (cfg.threads < 1) invalid("threads must be at least 1");
    if (cfg.ref_factor < 1 || cfg.substeps < 1) invalid("ref-factor and substeps must be at least 1");
    for (double w : cfg.omegas)
        if (!(w > 0.0)) invalid("omegas must be positive");
    for (double g : cfg.gammas)
        if (!(g > 0.0 && g < 1.0)) invalid("gammas must lie in (0, 1)");
    if (cfg.alphas.size() < 2 || cfg.Ms.size() != cfg.alphas.size() || cfg.kappas.size() != cfg.alphas.size()) {
        invalid("alphas, Ms and kappas need equal lengths of at least 2");
    }
    if (!(cfg.beta >= 0.0)) invalid("beta must be non-negative");

    const bool study = cfg.command == Command::Convergence || cfg.command == Command::Balance;
    if (study) {
        for (std::size_t i = 1; i < cfg.taus.size(); ++i)
            if (std::abs(cfg.taus[i - 1] / cfg.taus[i] - 2.0) > 1e-12) invalid("study step sizes must halve");
    }
    if (cfg.command == Command::Iters && cfg.problem == Problem::NetworkToy) {
        invalid("iters supports the toy and biot2d problems");
    }
    if (cfg.command == Command::Balance && !cfg.exponents.empty()) {
        auto has = [&](double s) {
            return std::any_of(cfg.exponents.begin(), cfg.exponents.end(),
                               [s](double e) { return std::abs(e - s) < 1e-12; });
        };
        if (!has(cfg.k) || !has(cfg.k + 1.5)) invalid("balance exponents must include k and k + 1.5");
    }
}

std::string describe(const RunConfig& cfg) {
    std::ostringstream s;
    auto line = [&s](std::string_view key, const std::string& value) { s << key << " = " << value << '\n'; };
    auto num = [](double v) { return csv::format_double(v); };
    s << "# command: " << to_string(cfg.command) << '\n';
    line("problem", std::string(to_string(cfg.problem)));
    line("k", std::to_string(cfg.k));
    line("tau", join(cfg.taus));
    line("T", num(cfg.T));
    if (cfg.tol) line("tol", num(*cfg.tol));
    if (cfg.tol_exponent) line("tol-exponent", num(*cfg.tol_exponent));
    if (cfg.order_tol) line("order-tol", "true");
    if (cfg.gamma) line("gamma", num(*cfg.gamma));
    if (cfg.L) line("L", num(*cfg.L));
    line("omega", num(cfg.omega));
    line("grid", std::to_string(cfg.grid));
    line("max-inner", std::to_string(cfg.max_inner));
    line("tol-tau-exponent", num(cfg.tol_tau_exponent));
    line("omegas", join(cfg.omegas));
    line("gammas", join(cfg.gammas));
    if (!cfg.exponents.empty()) line("exponents", join(cfg.exponents));
    line("alphas", join(cfg.alphas));
    line("Ms", join(cfg.Ms));
    line("kappas", join(cfg.kappas));
    line("beta", num(cfg.beta));
    line("reference", std::string(name_of(kReferences, cfg.reference)));
    line("ref-factor", std::to_string(cfg.ref_factor));
    line("substeps", std::to_string(cfg.substeps));
    line("out", cfg.out.string());
    line("seed", std::to_string(cfg.seed));
    line("threads", std::to_string(cfg.threads));
    return s.str();
}

void run(const RunConfig& cfg, std::ostream& out) {
    validate(cfg);
    switch (cfg.command) {
        case Command::Toy:
        case Command::Biot2d:
        case Command::Network:
            run_single(cfg, out);
            return;
        case Command::Convergence:
            run_convergence(cfg, out);
            return;
        case Command::Balance:
            run_balance(cfg, out);
            return;
        case Command::Iters:
            run_iters(cfg, out);
            return;
        case Command::Stability:
            run_stability(cfg, out);
            return;
    }
}

int exit_code(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UsageError: return 2;
        case ErrorCode::ValidationError: return 3;
        case ErrorCode::IoError: return 4;
        case ErrorCode::SingularMatrix: return 5;
        case ErrorCode::NotConverged: return 6;
        case ErrorCode::NotSymmetric: return 7;
        case ErrorCode::DimensionMismatch: return 8;
        case ErrorCode::UnsupportedOrder: return 9;
        case ErrorCode::IncompleteHistory: return 10;
        case ErrorCode::NotFound: return 11;
        case ErrorCode::InvalidParameter: return 12;
        case ErrorCode::MissingConstants: return 13;
        case ErrorCode::NotScalarPressure: return 14;
        case ErrorCode::MaxInnerExceeded: return 15;
        case ErrorCode::SolverFailure: return 16;
    }
    return 1;
}

std::string exit_code_help() {
    std::ostringstream s;
    s << "Exit status:\n  0  success\n  1  unexpected failure\n";
    for (ErrorCode c : {ErrorCode::UsageError, ErrorCode::ValidationError, ErrorCode::IoError,
                        ErrorCode::SingularMatrix, ErrorCode::NotConverged, ErrorCode::NotSymmetric,
                        ErrorCode::DimensionMismatch, ErrorCode::UnsupportedOrder, ErrorCode::IncompleteHistory,
                        ErrorCode::NotFound, ErrorCode::InvalidParameter, ErrorCode::MissingConstants,
                        ErrorCode::NotScalarPressure, ErrorCode::MaxInnerExceeded, ErrorCode::SolverFailure}) {
        s << "  " << std::setw(2) << std::left << exit_code(c) << std::right << ' ' << porosplit::to_string(c)
          << '\n';
    }
    return s.str();
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
    try {
        ParseOutcome parsed = parse_impl(args, std::nullopt);
        if (!parsed.config) {
            out << parsed.help;
            return 0;
        }
        const RunConfig& cfg = *parsed.config;
        if (cfg.dry_run) {
            out << describe(cfg);
            return 0;
        }
        run(cfg, out);
        return 0;
    } catch (const Error& e) {
        err << "porosplit: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "porosplit: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace porosplit::cli
