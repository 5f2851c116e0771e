#include "porosplit/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "porosplit/error.hpp"

namespace porosplit::studies {

double TolRule::tol(double tau, int k) const {
    switch (kind) {
        case Kind::Exponent: return std::pow(tau, value);
        case Kind::Fixed: return value;
        case Kind::OrderFixed: return std::pow(10.0, -3.0 - 3.0 * k);
    }
    return value;
}

std::vector<double> EocTable::pairwise() const {
    std::vector<double> r;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        r.push_back(std::log(errors[i] / errors[i + 1]) / std::log(taus[i] / taus[i + 1]));
    }
    return r;
}

double EocTable::fitted() const {
    const std::size_t n = std::min(taus.size(), errors.size());
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(taus[i]), y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

void PredictorAudit::add(const Trajectory& traj) {
    for (const auto& r : traj.reports) {
        ++steps;
        if (r.predicted >= r.iterations) ++bounded;
        if (r.predicted + 1 >= r.iterations) ++within_one;
    }
}

void PredictorAudit::merge(const PredictorAudit& other) {
    steps += other.steps;
    bounded += other.bounded;
    within_one += other.within_one;
}

// ---------------------------------------------------------------------------
// References and errors
// ---------------------------------------------------------------------------

Reference analytic_reference(const CoupledSystem& sys) {
    if (!sys.has_exact()) throw Error(ErrorCode::NotFound, "system '" + sys.name + "' has no exact solution");
    return [eu = sys.exact_u, ep = sys.exact_p](double t) { return std::make_pair(eu(t), ep(t)); };
}

namespace {

Reference trajectory_reference(std::shared_ptr<const Trajectory> traj) {
    return [traj](double t) {
        const double pos = t / traj->tau;
        const double idx = std::round(pos);
        if (std::abs(pos - idx) > 1e-6 || idx < 0 || static_cast<std::size_t>(idx) >= traj->times.size()) {
            throw Error(ErrorCode::InvalidParameter,
                        "reference queried at t = " + std::to_string(t) + " off its time grid");
        }
        const auto i = static_cast<std::size_t>(idx);
        return std::make_pair(traj->u[i], traj->p[i]);
    };
}

Reference make_reference(const CoupledSystem& sys, ReferenceKind kind, int k, double tau_min, int ref_factor,
                         double T, int substeps) {
    if (kind == ReferenceKind::Analytic) return analytic_reference(sys);
    return fine_implicit_reference(sys, k, tau_min / ref_factor, T, substeps);
}

double min_tau(const std::vector<double>& taus) {
    if (taus.empty()) throw Error(ErrorCode::InvalidParameter, "empty tau list");
    return *std::min_element(taus.begin(), taus.end());
}

}  // namespace

Reference fine_implicit_reference(const CoupledSystem& sys, int k, double tau_ref, double T, int substeps) {
    SplitConfig cfg;
    cfg.startup = SubstepBootstrap{substeps};
    auto traj = std::make_shared<const Trajectory>(integrate(sys, cfg, k, tau_ref, T, Mode::Implicit));
    return trajectory_reference(std::move(traj));
}

ErrorRecord measure_error(const CoupledSystem& sys, const Trajectory& traj, const Reference& ref, int k) {
    ErrorRecord rec;
    rec.k = k;
    rec.tau = traj.tau;
    rec.mode = traj.reports.empty() ? Mode::Implicit : Mode::Split;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t n = static_cast<std::size_t>(k); n < traj.times.size(); ++n) {
        const auto [u, p] = ref(traj.times[n]);
        const double eu = std::sqrt(weighted_norm_sq(sys.norm_V, subtract(traj.u[n], u)));
        const double ep = std::sqrt(weighted_norm_sq(sys.norm_H, subtract(traj.p[n], p)));
        rec.err_u_V = std::max(rec.err_u_V, eu);
        rec.err_p_H = std::max(rec.err_p_H, ep);
        sum += eu + ep;
        ++count;
    }
    rec.combined = rec.err_u_V + rec.err_p_H;
    rec.mean_combined = count ? sum / static_cast<double>(count) : 0.0;
    return rec;
}

std::pair<ErrorRecord, Trajectory> run_against_reference(const CoupledSystem& sys, const SplitConfig& cfg, int k,
                                                         double tau, double T, Mode mode, const Reference& ref) {
    SplitConfig run_cfg = cfg;
    run_cfg.startup = ExactDataStartup{ref};
    Trajectory traj = integrate(sys, run_cfg, k, tau, T, mode);
    ErrorRecord rec = measure_error(sys, traj, ref, k);
    rec.mode = mode;
    rec.tol = mode == Mode::Split ? cfg.tol : 0.0;
    return {rec, std::move(traj)};
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!first) first = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------------------
// Convergence
// ---------------------------------------------------------------------------

ConvergenceResult convergence_study(const CoupledSystem& sys, const ConvergenceOptions& opt) {
    const Reference ref =
        make_reference(sys, opt.reference, opt.k, min_tau(opt.taus), opt.ref_factor, opt.T, opt.substeps);
    const std::size_t nt = opt.taus.size();
    const std::size_t runs = opt.include_implicit ? 2 * nt : nt;
    std::vector<ErrorRecord> recs(runs);
    std::vector<PredictorAudit> audits(runs);
    parallel_for(runs, opt.threads, [&](std::size_t i) {
        const double tau = opt.taus[i % nt];
        const Mode mode = i < nt ? Mode::Split : Mode::Implicit;
        SplitConfig cfg = opt.base;
        cfg.tol = opt.tol.tol(tau, opt.k);
        auto [rec, traj] = run_against_reference(sys, cfg, opt.k, tau, opt.T, mode, ref);
        recs[i] = rec;
        audits[i].add(traj);
    });

    ConvergenceResult res;
    for (std::size_t i = 0; i < runs; ++i) {
        res.audit.merge(audits[i]);
        EocTable& table = recs[i].mode == Mode::Split ? res.split_eoc : res.implicit_eoc;
        table.taus.push_back(recs[i].tau);
        table.errors.push_back(recs[i].combined);
    }
    res.records = std::move(recs);
    return res;
}

// ---------------------------------------------------------------------------
// Balancing
// ---------------------------------------------------------------------------

double BalancingResult::worst_ratio(double s) const {
    double worst = 0.0;
    for (const auto& r : records)
        if (std::abs(r.s - s) < 1e-12 && r.implicit_error > 0.0) worst = std::max(worst, r.error / r.implicit_error);
    return worst;
}

BalancingResult balancing_study(const CoupledSystem& sys, const BalancingOptions& opt) {
    const Reference ref =
        make_reference(sys, opt.reference, opt.k, min_tau(opt.taus), opt.ref_factor, opt.T, opt.substeps);
    const std::size_t nt = opt.taus.size(), ns = opt.exponents.size();
    // Cells: implicit baseline per τ, then (τ, s) split runs.
    std::vector<double> implicit_err(nt);
    std::vector<double> split_err(nt * ns);
    std::vector<PredictorAudit> audits(nt * ns);
    parallel_for(nt + nt * ns, opt.threads, [&](std::size_t i) {
        if (i < nt) {
            SplitConfig cfg = opt.base;
            implicit_err[i] = run_against_reference(sys, cfg, opt.k, opt.taus[i], opt.T, Mode::Implicit, ref)
                                  .first.combined;
            return;
        }
        const std::size_t c = i - nt;
        const double tau = opt.taus[c / ns];
        SplitConfig cfg = opt.base;
        cfg.tol = std::pow(tau, opt.exponents[c % ns]);
        auto [rec, traj] = run_against_reference(sys, cfg, opt.k, tau, opt.T, Mode::Split, ref);
        split_err[c] = rec.combined;
        audits[c].add(traj);
    });

    BalancingResult res;
    const double s_bal = opt.k + 1.5;
    res.balanced.assign(nt, true);
    for (std::size_t a = 0; a < nt; ++a)
        for (std::size_t b = 0; b < ns; ++b) {
            const std::size_t c = a * ns + b;
            res.records.push_back({opt.k, opt.taus[a], opt.exponents[b], split_err[c], implicit_err[a]});
            res.audit.merge(audits[c]);
            if (std::abs(opt.exponents[b] - s_bal) < 1e-12 && split_err[c] > opt.factor * implicit_err[a]) {
                res.balanced[a] = false;
            }
        }
    return res;
}

// ---------------------------------------------------------------------------
// Iteration counts
// ---------------------------------------------------------------------------

IterationResult iteration_study(const IterationOptions& opt) {
    struct Cell {
        double omega, gamma, tau;
    };
    std::vector<Cell> cells;
    for (double w : opt.omegas)
        for (double g : opt.gammas)
            for (double tau : opt.taus) cells.push_back({w, g, tau});

    std::vector<IterationRecord> recs(cells.size());
    std::vector<PredictorAudit> audits(cells.size());
    std::vector<double> deviation(cells.size(), 0.0);
    parallel_for(cells.size(), opt.threads, [&](std::size_t i) {
        const Cell& c = cells[i];
        const CoupledSystem sys = make_toy(c.omega);
        const Reference exact = analytic_reference(sys);
        SplitConfig cfg;
        cfg.startup = LowerOrderBootstrap{};
        const Trajectory implicit = integrate(sys, cfg, opt.k, c.tau, opt.T, Mode::Implicit);
        const double ebar = measure_error(sys, implicit, exact, opt.k).mean_combined;

        cfg.gamma_target = c.gamma;
        cfg.tol = ebar * std::pow(c.tau, opt.tol_tau_exponent);
        const Trajectory split = integrate(sys, cfg, opt.k, c.tau, opt.T, Mode::Split);

        IterationRecord& r = recs[i];
        r.k = opt.k;
        r.omega = c.omega;
        r.gamma = c.gamma;
        r.tau = c.tau;
        r.L = L_from_gamma(sys, c.gamma, c.tau, BdfScheme::without_multiplier(opt.k).xi0());
        r.tol = cfg.tol;
        r.implicit_error = ebar;
        r.mean_iterations = split.mean_iterations();
        r.mean_Jn = std::llround(r.mean_iterations);
        audits[i].add(split);
        for (const auto& rep : split.reports)
            for (double q : rep.pressure_ratios) deviation[i] = std::max(deviation[i], std::abs(q - c.gamma));
    });

    IterationResult res;
    res.records = std::move(recs);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        res.audit.merge(audits[i]);
        res.max_ratio_deviation = std::max(res.max_ratio_deviation, deviation[i]);
    }
    return res;
}

AverageIterationResult average_iteration_table(const CoupledSystem& sys, const AverageIterationOptions& opt) {
    const Reference exact = analytic_reference(sys);
    const std::size_t nt = opt.taus.size(), ns = opt.offsets.size();
    std::vector<AverageIterationRecord> recs(nt * ns);
    std::vector<PredictorAudit> audits(nt * ns);
    parallel_for(nt * ns, opt.threads, [&](std::size_t i) {
        const double s = opt.k + opt.offsets[i / nt];
        const double tau = opt.taus[i % nt];
        SplitConfig cfg = opt.base;
        cfg.tol = std::pow(tau, s);
        cfg.startup = ExactDataStartup{exact};
        const Trajectory traj = integrate(sys, cfg, opt.k, tau, opt.T, Mode::Split);
        recs[i] = {opt.k, s, tau, traj.mean_iterations()};
        audits[i].add(traj);
    });
    AverageIterationResult res;
    res.records = std::move(recs);
    for (const auto& a : audits) res.audit.merge(a);
    return res;
}

// ---------------------------------------------------------------------------
// CSV views
// ---------------------------------------------------------------------------

namespace {
std::string mode_name(Mode m) { return m == Mode::Split ? "split" : "implicit"; }
}  // namespace

csv::Table convergence_table(const ConvergenceResult& r) {
    csv::Table t({"k", "tau", "tol", "err_u_V", "err_p_H", "mode"});
    for (const auto& e : r.records) t.add_row({std::int64_t{e.k}, e.tau, e.tol, e.err_u_V, e.err_p_H, mode_name(e.mode)});
    return t;
}

csv::Table balancing_table(const BalancingResult& r) {
    csv::Table t({"k", "tau", "s", "error", "implicit_error"});
    for (const auto& e : r.records) t.add_row({std::int64_t{e.k}, e.tau, e.s, e.error, e.implicit_error});
    return t;
}

csv::Table iteration_table(const IterationResult& r) {
    csv::Table t({"k", "omega", "gamma", "tau", "L", "mean_Jn"});
    for (const auto& e : r.records) {
        t.add_row({std::int64_t{e.k}, e.omega, e.gamma, e.tau, e.L, static_cast<std::int64_t>(e.mean_Jn)});
    }
    return t;
}

csv::Table average_iteration_csv(const AverageIterationResult& r) {
    csv::Table t({"k", "s", "tau", "mean_Jn"});
    for (const auto& e : r.records) t.add_row({std::int64_t{e.k}, e.s, e.tau, e.mean_iterations});
    return t;
}

csv::Table step_report_table(const Trajectory& traj) {
    csv::Table t({"n", "t", "J_n", "predicted_J_n", "terminal_functional", "contraction_ratio_median"});
    for (const auto& r : traj.reports) {
        t.add_row({static_cast<std::int64_t>(r.n), r.t, static_cast<std::int64_t>(r.iterations),
                   static_cast<std::int64_t>(r.predicted), r.terminal_functional, r.median_contraction()});
    }
    return t;
}

std::vector<double> halving_taus(int first, int last) {
    std::vector<double> taus;
    for (int e = first; e <= last; ++e) taus.push_back(std::ldexp(1.0, -e));
    return taus;
}

}  // namespace porosplit::studies
