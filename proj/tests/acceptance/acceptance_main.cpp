// One line per acceptance criterion. Exit status 0 iff the set of failing
// criteria equals the set given with --expect-fail (comma list, default none).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "porosplit/bdf.hpp"
#include "porosplit/fem2d.hpp"
#include "porosplit/stability.hpp"
#include "porosplit/studies.hpp"

using namespace porosplit;
using namespace porosplit::studies;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string title;
    double budget_seconds;
    std::function<Outcome()> body;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

PredictorAudit g_audit;

// Combined error ‖Δu‖_V + ‖Δp‖_H, maximized over all stored states.
double combined_gap(const CoupledSystem& sys, const Trajectory& a, const Trajectory& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.u.size(); ++n) {
        const double eu = std::sqrt(weighted_norm_sq(sys.norm_V, subtract(a.u[n], b.u[n])));
        const double ep = std::sqrt(weighted_norm_sq(sys.norm_H, subtract(a.p[n], b.p[n])));
        m = std::max(m, eu + ep);
    }
    return m;
}

// ---------------------------------------------------------------------------

Outcome bdf_coefficients() {
    // Independent table, written out by hand.
    const std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> table{
        {{1, 1}, {-1, 1}},
        {{3, 2}, {-2, 1}, {1, 2}},
        {{11, 6}, {-3, 1}, {3, 2}, {-1, 3}},
        {{25, 12}, {-4, 1}, {3, 1}, {-4, 3}, {1, 4}},
        {{137, 60}, {-5, 1}, {5, 1}, {-10, 3}, {5, 4}, {-1, 5}},
    };
    bool ok = true;
    double worst = 0.0;
    for (int k = 1; k <= 5; ++k) {
        const auto& row = table[static_cast<std::size_t>(k - 1)];
        const auto tab = tabulated_coefficients(k);
        const auto poly = polynomial_coefficients(k);
        const auto xi = coefficients(k);
        if (tab.size() != row.size() || xi.size() != row.size()) return {false, "wrong length at k=" + std::to_string(k)};
        for (std::size_t l = 0; l < row.size(); ++l) {
            const Rational r = make_rational(row[l].first, row[l].second);
            ok = ok && tab[l] == r && poly[l] == r;
            worst = std::max(worst, std::abs(xi[l] - poly[l].value()));
        }
    }
    ok = ok && worst <= 1e-14;
    return {ok, "rational match " + std::string(ok ? "yes" : "no") + ", max |double - poly| " + fmt("%.1e", worst)};
}

Outcome identity() {
    double worst = 0.0;
    for (int k = 1; k <= 2; ++k) {
        const auto r = stability::verify_identity(stability::GStabilityData::reference(k), 1000, 20,
                                                  static_cast<std::uint64_t>(2024 + k));
        worst = std::max(worst, r.max_relative);
    }
    return {worst <= 1e-10, "max relative residual " + fmt("%.2e", worst)};
}

Outcome multipliers() {
    std::ostringstream s;
    bool ok = true;
    for (int k = 3; k <= 5; ++k) {
        const auto cert = stability::find_multiplier(k);
        const double at_eta = stability::criterion_min(k, cert.eta, 100000);
        const double at_zero = stability::criterion_min(k, 0.0, 100000);
        ok = ok && cert.eta < 1.0 && at_eta >= -1e-12 && at_zero < 0.0;
        s << "k=" << k << " eta=" << fmt("%.4f", cert.eta) << " min=" << fmt("%.1e", at_eta)
          << " min(eta=0)=" << fmt("%.2e", at_zero) << (k < 5 ? "; " : "");
    }
    return {ok, s.str()};
}

Outcome toy_contraction_exact() {
    double worst = 0.0;
    std::size_t ratios = 0;
    for (double w : {2.0, 4.0})
        for (double g : {0.5, 0.1})
            for (int k : {1, 2}) {
                const CoupledSystem sys = make_toy(w);
                SplitConfig cfg;
                cfg.gamma_target = g;
                cfg.tol = 1e-9;
                cfg.startup = ExactDataStartup{[&sys](double t) { return std::make_pair(sys.exact_u(t), sys.exact_p(t)); }};
                const Trajectory tr = integrate(sys, cfg, k, 1.0 / 64.0, 1.0, Mode::Split);
                g_audit.add(tr);
                for (const auto& r : tr.reports)
                    for (double x : r.pressure_ratios) {
                        worst = std::max(worst, std::abs(x - g));
                        ++ratios;
                    }
            }
    return {worst <= 1e-10 && ratios > 0,
            std::to_string(ratios) + " ratios, max |ratio - gamma| " + fmt("%.2e", worst)};
}

Outcome table_reproduction() {
    // Rounded mean inner iterations, rows (k, ω, γ), columns τ = 2^-3..2^-8.
    const std::map<std::tuple<int, double, double>, std::vector<int>> target{
        {{1, 2.0, 0.5}, {9, 13, 13, 16, 19, 22}}, {{1, 2.0, 0.1}, {5, 6, 7, 7, 8, 9}},
        {{1, 4.0, 0.5}, {9, 12, 15, 17, 20, 23}}, {{1, 4.0, 0.1}, {5, 6, 7, 7, 8, 9}},
        {{2, 2.0, 0.5}, {13, 15, 18, 22, 26, 30}}, {{2, 2.0, 0.1}, {6, 7, 8, 9, 11, 12}},
        {{2, 4.0, 0.5}, {12, 16, 20, 24, 28, 32}}, {{2, 4.0, 0.1}, {6, 7, 8, 9, 10, 12}},
    };
    std::map<std::tuple<int, double, double>, std::vector<double>> measured;
    const auto taus = halving_taus(3, 8);
    for (int k = 1; k <= 2; ++k) {
        IterationOptions opt;
        opt.k = k;
        opt.taus = taus;
        const IterationResult r = iteration_study(opt);
        g_audit.merge(r.audit);
        for (const auto& rec : r.records) {
            auto& row = measured[{k, rec.omega, rec.gamma}];
            row.resize(taus.size());
            const auto it = std::find(taus.begin(), taus.end(), rec.tau);
            row[static_cast<std::size_t>(it - taus.begin())] = static_cast<double>(rec.mean_Jn);
        }
    }
    int within = 0, cells = 0;
    double worst = 0.0;
    bool gamma_trend = true, tau_trend = true;
    std::ostringstream worst_cell;
    for (const auto& [key, pub] : target) {
        const auto& got = measured.at(key);
        for (std::size_t j = 0; j < pub.size(); ++j) {
            const double d = std::abs(got[j] - pub[j]);
            ++cells;
            if (d <= 2.0) ++within;
            if (d > worst) {
                worst = d;
                worst_cell.str("");
                worst_cell << "k=" << std::get<0>(key) << " w=" << std::get<1>(key) << " g=" << std::get<2>(key)
                           << " tau=2^-" << j + 3 << ": " << got[j] << " vs " << pub[j];
            }
            if (j > 0 && got[j] < got[j - 1]) tau_trend = false;
        }
        if (std::get<2>(key) == 0.1) {
            const auto& loose = measured.at({std::get<0>(key), std::get<1>(key), 0.5});
            for (std::size_t j = 0; j < got.size(); ++j)
                if (got[j] >= loose[j]) gamma_trend = false;
        }
    }
    const bool ok = within == cells && gamma_trend && tau_trend;
    return {ok, std::to_string(within) + "/" + std::to_string(cells) + " cells within 2, worst " + worst_cell.str() +
                    ", trends gamma " + (gamma_trend ? "ok" : "broken") + " tau " + (tau_trend ? "ok" : "broken")};
}

Outcome temporal_orders() {
    const auto prm = fem2d::BiotParameters::defaults();
    const CoupledSystem sys = fem2d::make_manufactured_biot(16, prm);
    std::ostringstream s;
    bool ok = true;
    for (int k = 1; k <= 3; ++k) {
        ConvergenceOptions opt;
        opt.k = k;
        opt.taus = halving_taus(3, 7);
        opt.tol = TolRule::exponent(k + 1.5);
        opt.ref_factor = 8;
        opt.include_implicit = false;
        opt.base.L = fem2d::fixed_stress_L(prm);
        opt.threads = 4;
        const ConvergenceResult r = convergence_study(sys, opt);
        g_audit.merge(r.audit);
        const double eoc = r.split_eoc.fitted();
        ok = ok && std::abs(eoc - k) <= 0.2;
        s << "k=" << k << " EOC " << fmt("%.3f", eoc) << (k < 3 ? "; " : "");
    }
    return {ok, s.str()};
}

Outcome balancing() {
    const auto prm = fem2d::BiotParameters::defaults();
    const CoupledSystem sys = fem2d::make_manufactured_biot(16, prm);
    std::ostringstream s;
    bool ok = true;
    for (int k = 1; k <= 2; ++k) {
        BalancingOptions opt;
        opt.k = k;
        opt.taus = halving_taus(3, 7);
        opt.exponents = {k + 0.0, k + 1.5, k + 2.0};
        opt.base.L = fem2d::fixed_stress_L(prm);
        opt.threads = 4;
        const BalancingResult r = balancing_study(sys, opt);
        g_audit.merge(r.audit);
        const double tight = std::max(r.worst_ratio(k + 1.5), r.worst_ratio(k + 2.0));
        const double loose = r.worst_ratio(k + 0.0);
        ok = ok && tight <= 2.0 && loose > 5.0;
        s << "k=" << k << " worst ratio s>=k+1.5 " << fmt("%.3f", tight) << ", s=k " << fmt("%.1f", loose)
          << (k < 2 ? "; " : "");
    }
    return {ok, s.str()};
}

Outcome predictor_soundness() {
    const double frac = g_audit.fraction();
    const bool ok = g_audit.steps > 0 && g_audit.sound();
    return {ok, std::to_string(g_audit.bounded) + "/" + std::to_string(g_audit.steps) + " bounded (" +
                    fmt("%.2f%%", 100.0 * frac) + "), " + std::to_string(g_audit.within_one) + " within one"};
}

Outcome fixed_point_consistency() {
    const auto prm = fem2d::BiotParameters::defaults();
    std::vector<std::pair<std::string, CoupledSystem>> systems;
    systems.emplace_back("toy", make_toy(2.0));
    systems.emplace_back("biot n=8", fem2d::make_manufactured_biot(8, prm));
    double worst = 0.0;
    std::ostringstream s;
    for (auto& [name, sys] : systems)
        for (int k = 1; k <= 2; ++k) {
            SplitConfig cfg;
            cfg.tol = 1e-13;
            cfg.max_inner = 500;
            if (name == "toy")
                cfg.gamma_target = 0.5;
            else
                cfg.L = fem2d::fixed_stress_L(prm);
            const Trajectory a = integrate(sys, cfg, k, 1.0 / 32.0, 1.0, Mode::Split);
            const Trajectory b = integrate(sys, cfg, k, 1.0 / 32.0, 1.0, Mode::Implicit);
            const double gap = combined_gap(sys, a, b);
            worst = std::max(worst, gap);
            s << name << " k=" << k << " " << fmt("%.1e", gap) << "; ";
        }
    return {worst <= 1e-9, s.str() + "max " + fmt("%.1e", worst)};
}

Outcome networks() {
    // Two identical networks without exchange carry p_1 = p_2 = p/√2, where
    // (u, p) solves the single-network problem with α√2 and source √2 g.
    NetworkParameters twin{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, {{0.0, 0.0}, {0.0, 0.0}}, {}};
    const CoupledSystem net = make_network_toy(twin);
    CoupledSystem single = make_toy(2.0);
    single.g = [](double t) { return Vector{std::sqrt(2.0) * 100.0 * std::sin(t)}; };
    project_consistent_initial(single);
    double decoupled = 0.0;
    for (int k = 1; k <= 2; ++k) {
        SplitConfig cfg;
        cfg.L = 4.0;
        cfg.tol = 1e-12;
        const Trajectory tn = integrate(net, cfg, k, 1.0 / 16.0, 1.0, Mode::Split);
        const Trajectory ts = integrate(single, cfg, k, 1.0 / 16.0, 1.0, Mode::Split);
        for (std::size_t n = 0; n < tn.u.size(); ++n) {
            decoupled = std::max(decoupled, norm_inf(subtract(tn.u[n], ts.u[n])));
            for (double p : tn.p[n]) decoupled = std::max(decoupled, std::abs(p - ts.p[n][0] / std::sqrt(2.0)));
        }
    }
    // With exchange: measured contraction against the abstract bound.
    NetworkParameters coupled{{1.0, 0.5}, {1.0, 2.0}, {1.0, 3.0}, {{0.0, 0.5}, {0.5, 0.0}}, {}};
    const CoupledSystem sys = make_network_toy(coupled);
    double excess = -1.0;
    for (double L : {1.0, 2.0, 4.0}) {
        SplitConfig cfg;
        cfg.L = L;
        cfg.tol = 1e-10;
        const Trajectory tr = integrate(sys, cfg, 2, 1.0 / 16.0, 1.0, Mode::Split);
        const double bound = contraction_factor(L, *sys.constants.c_c);
        for (const auto& r : tr.reports)
            for (double x : r.contraction_ratios) excess = std::max(excess, x - bound);
    }
    const bool ok = decoupled <= 1e-8 && excess <= 1e-6;
    return {ok, "beta=0 max deviation " + fmt("%.1e", decoupled) + ", beta>0 max(ratio - bound) " + fmt("%.3f", excess)};
}

std::set<int> parse_ids(const std::string& list) {
    std::set<int> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> expected;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--expect-fail" && i + 1 < argc) {
            expected = parse_ids(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: acceptance [--expect-fail ID[,ID...]]\n");
            return 2;
        }
    }
    std::setvbuf(stdout, nullptr, _IOLBF, 0);

    const std::vector<Criterion> criteria{
        {1, "BDF coefficients", 1.0, bdf_coefficients},
        {2, "G-stability identity k=1,2", 10.0, identity},
        {3, "multiplier certificates k=3..5", 30.0, multipliers},
        {4, "exact toy contraction", 5.0, toy_contraction_exact},
        {5, "toy iteration table", 120.0, table_reproduction},
        {6, "temporal orders on Biot n=16", 300.0, temporal_orders},
        {7, "balancing rule", 300.0, balancing},
        {8, "iteration predictor soundness", 1e9, predictor_soundness},
        {9, "fixed-point consistency", 60.0, fixed_point_consistency},
        {10, "network sanity", 1e9, networks},
    };

    std::set<int> failed;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_seconds;
        const bool pass = o.pass && in_time;
        if (!pass) failed.insert(c.id);
        std::string budget = c.budget_seconds < 1e8 ? " / " + fmt("%.0f s", c.budget_seconds) : "";
        std::printf("[%s] AC%-2d %-32s %s (%.2f s%s%s)\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                    o.detail.c_str(), secs, budget.c_str(), in_time ? "" : ", over budget");
    }

    std::printf("%zu/%zu criteria pass", criteria.size() - failed.size(), criteria.size());
    if (!expected.empty()) {
        std::printf("; expected failures:");
        for (int id : expected) std::printf(" AC%d", id);
    }
    std::printf("\n");
    if (failed != expected) {
        for (int id : failed)
            if (!expected.count(id)) std::printf("unexpected failure: AC%d\n", id);
        for (int id : expected)
            if (!failed.count(id)) std::printf("expected failure now passes: AC%d\n", id);
        return 1;
    }
    return 0;
}
