#include "porosplit/splitsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "porosplit/error.hpp"

namespace porosplit {

namespace {

double weight_or(const std::optional<double>& override_value, const std::optional<double>& fallback,
                 const char* name) {
    if (override_value) return *override_value;
    if (fallback) return *fallback;
    throw Error(ErrorCode::MissingConstants, std::string("termination weight ") + name + " unavailable");
}

/// D A⁻¹ Dᵀ for a scalar pressure.
double schur_scalar(const CoupledSystem& sys) {
    if (sys.np() != 1) {
        throw Error(ErrorCode::NotScalarPressure,
                    "closed-form toy stabilization needs a scalar pressure, got dimension " +
                        std::to_string(sys.np()));
    }
    const Vector dt = sys.D.apply_transpose(Vector{1.0});
    return dot(dt, solve_dense(sys.A.to_dense(), dt));
}

}  // namespace

double StepReport::median_contraction() const {
    if (contraction_ratios.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> r = contraction_ratios;
    const std::size_t mid = r.size() / 2;
    std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(mid), r.end());
    if (r.size() % 2 == 1) return r[mid];
    const double hi = r[mid];
    const double lo = *std::max_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

double Trajectory::mean_iterations() const {
    if (reports.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : reports) s += static_cast<double>(r.iterations);
    return s / static_cast<double>(reports.size());
}

// ---------------------------------------------------------------------------
// Stabilization and predictors
// ---------------------------------------------------------------------------

double default_L(const CoupledSystem& sys) {
    const auto& c = sys.constants;
    if (!c.c_a || !c.C_a || !c.C_d) {
        throw Error(ErrorCode::MissingConstants, "default_L needs c_a, C_a and C_d");
    }
    return (*c.C_a) * (*c.C_a) * (*c.C_d) * (*c.C_d) / std::pow(*c.c_a, 3);
}

double L_from_gamma(const CoupledSystem& sys, double gamma, double tau, double xi0) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidParameter, "gamma must lie in (0, 1)");
    const double dad = schur_scalar(sys);
    const double c = sys.C.at(0, 0), b = sys.B.at(0, 0);
    return dad / (1.0 - gamma) + gamma / (1.0 - gamma) * (c + tau / xi0 * b);
}

double L_from_contraction(double gamma, double c_c) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidParameter, "gamma must lie in (0, 1)");
    return 2.0 * gamma * gamma * c_c / (1.0 - gamma * gamma);
}

double contraction_factor(double L, double c_c) { return std::sqrt(L / (2.0 * c_c + L)); }

double toy_contraction(const CoupledSystem& sys, double L, double tau, double xi0) {
    const double dad = schur_scalar(sys);
    return (L - dad) / (L + sys.C.at(0, 0) + tau / xi0 * sys.B.at(0, 0));
}

double termination_value(const SplitConfig& cfg, const CoupledSystem& sys, std::span<const double> du,
                         std::span<const double> dp, double tau, double xi0, double L) {
    const double c_a = weight_or(cfg.weights.c_a, sys.constants.c_a, "c_a");
    const double c_c = weight_or(cfg.weights.c_c, sys.constants.c_c, "c_c");
    const double c_b = weight_or(cfg.weights.c_b, sys.constants.c_b, "c_b");
    return 0.5 * c_a * weighted_norm_sq(sys.norm_V, du) + (c_c + 0.5 * L) * weighted_norm_sq(sys.norm_H, dp) +
           tau / xi0 * c_b * weighted_norm_sq(sys.norm_Q, dp);
}

std::size_t predict_iterations(double tol, double eps1, double gamma) {
    if (!(tol > 0.0 && eps1 > 0.0)) return 1;
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidParameter, "gamma must lie in (0, 1)");
    if (tol >= eps1) return 1;
    const double ratio = (std::log(tol) - std::log(eps1)) / std::log(gamma);
    return static_cast<std::size_t>(std::ceil(ratio)) + 1;
}

double resolve_L(const CoupledSystem& sys, const SplitConfig& cfg, double tau, double xi0) {
    if (cfg.L && cfg.gamma_target) {
        throw Error(ErrorCode::ValidationError, "L and gamma_target are mutually exclusive");
    }
    if (cfg.L) {
        if (!(*cfg.L >= 0.0)) throw Error(ErrorCode::InvalidParameter, "L must be non-negative");
        return *cfg.L;
    }
    if (cfg.gamma_target) {
        if (sys.np() == 1) return L_from_gamma(sys, *cfg.gamma_target, tau, xi0);
        return L_from_contraction(*cfg.gamma_target, weight_or(cfg.weights.c_c, sys.constants.c_c, "c_c"));
    }
    return default_L(sys);
}

double resolve_predictor_gamma(const CoupledSystem& sys, const SplitConfig& cfg, double L) {
    if (cfg.predictor_gamma) return *cfg.predictor_gamma;
    if (cfg.gamma_target) return *cfg.gamma_target;
    return contraction_factor(L, weight_or(cfg.weights.c_c, sys.constants.c_c, "c_c"));
}

// ---------------------------------------------------------------------------
// SplitStepper
// ---------------------------------------------------------------------------

SplitStepper::SplitStepper(const CoupledSystem& sys, SplitConfig cfg, SolverOptions solver)
    : sys_(sys), cfg_(std::move(cfg)), solver_(solver) {
    sys_.check_dimensions();
    if (!(cfg_.tol > 0.0)) throw Error(ErrorCode::InvalidParameter, "tol must be positive");
    if (cfg_.max_inner < 1) throw Error(ErrorCode::InvalidParameter, "max_inner must be at least 1");
    elastic_ = std::make_shared<LinearSolver>(sys_.A, solver_);
}

const SplitStepper::Cache& SplitStepper::cache_for(const BdfScheme& scheme, double tau) {
    const auto key = std::make_pair(tau, scheme.xi0());
    auto it = caches_.find(key);
    if (it != caches_.end()) return it->second;
    Cache c;
    c.L = resolve_L(sys_, cfg_, tau, scheme.xi0());
    c.gamma = resolve_predictor_gamma(sys_, cfg_, c.L);
    const double s = scheme.xi0() / tau;
    const SparseMatrix stab = linear_combination(s, sys_.C, s * c.L, sys_.norm_H);
    c.pressure = std::make_shared<LinearSolver>(linear_combination(1.0, stab, 1.0, sys_.B), solver_);
    return caches_.emplace(key, std::move(c)).first->second;
}

StepResult SplitStepper::step(const BdfScheme& scheme, double tau, const History& hist_u, const History& hist_p,
                              double t_n, std::size_t n) {
    const Cache& cache = cache_for(scheme, tau);
    const double xi0 = scheme.xi0();
    const double s = xi0 / tau;
    const double L = cache.L;

    const Vector hu = history_sum(scheme, hist_u);
    const Vector hp = history_sum(scheme, hist_p);
    const Vector& p_prev = hist_p.at(0);
    const Vector f = sys_.f(t_n);
    Vector u_prev = hist_u.at(0);
    if (cfg_.initial_guess == InitialGuess::ElasticLift) {
        Vector ut0 = sys_.D.apply_transpose(p_prev);
        axpy(1.0, f, ut0);
        u_prev = elastic_->solve(ut0);
    }

    StepResult out;
    StepReport& rep = out.report;
    rep.n = n;
    rep.t = t_n;
    rep.L = L;
    rep.gamma = cache.gamma;

    // First sweep from iterate 0 = (u⁰, p^{n−1}):
    //   S δ = g − (1/τ) D(ξ₀ u⁰ + hu) − (1/τ) C(ξ₀ p^{n−1} + hp) − B p^{n−1}.
    Vector rhs = sys_.g(t_n);
    Vector du_hist = scaled(xi0, u_prev);
    axpy(1.0, hu, du_hist);
    axpy(-1.0 / tau, sys_.D.apply(du_hist), rhs);
    Vector dp_hist = scaled(xi0, p_prev);
    axpy(1.0, hp, dp_hist);
    axpy(-1.0 / tau, sys_.C.apply(dp_hist), rhs);
    axpy(-1.0, sys_.B.apply(p_prev), rhs);

    Vector delta = cache.pressure->solve(rhs);
    Vector p = add(p_prev, delta);
    Vector ut = sys_.D.apply_transpose(p);
    axpy(1.0, f, ut);
    Vector u = elastic_->solve(ut);
    Vector du = subtract(u, u_prev);

    const double tol_sq = cfg_.tol * cfg_.tol;
    double F = termination_value(cfg_, sys_, du, delta, tau, xi0, L);
    double dp_norm = std::sqrt(weighted_norm_sq(sys_.norm_H, delta));
    rep.eps1 = std::sqrt(F);
    std::size_t i = 1;
    while (F > tol_sq) {
        if (i >= cfg_.max_inner) {
            throw Error(ErrorCode::MaxInnerExceeded,
                        "step " + std::to_string(n) + " at t = " + std::to_string(t_n) + ": functional " +
                            std::to_string(std::sqrt(F)) + " above tol " + std::to_string(cfg_.tol) + " after " +
                            std::to_string(i) + " iterations");
        }
        // Increment form: S δ_i = (ξ₀/τ)(L M_H δ_{i−1} − D Δu_{i−1}), Δu_i = A⁻¹ Dᵀ δ_i.
        Vector r = scaled(s * L, sys_.norm_H.apply(delta));
        axpy(-s, sys_.D.apply(du), r);
        delta = cache.pressure->solve(r);
        du = elastic_->solve(sys_.D.apply_transpose(delta));
        axpy(1.0, delta, p);
        axpy(1.0, du, u);
        ++i;

        const double F_new = termination_value(cfg_, sys_, du, delta, tau, xi0, L);
        const double dp_new = std::sqrt(weighted_norm_sq(sys_.norm_H, delta));
        if (F > 0.0) rep.contraction_ratios.push_back(std::sqrt(F_new / F));
        if (dp_norm > 0.0) rep.pressure_ratios.push_back(dp_new / dp_norm);
        F = F_new;
        dp_norm = dp_new;
    }
    rep.iterations = i;
    rep.terminal_functional = F;
    rep.predicted = predict_iterations(cfg_.tol, rep.eps1, cache.gamma);
    out.u = std::move(u);
    out.p = std::move(p);
    return out;
}

// ---------------------------------------------------------------------------
// ImplicitStepper
// ---------------------------------------------------------------------------

struct ImplicitStepper::Factor {
    double s = 0.0;
    std::optional<LuFactorization> block;
};

ImplicitStepper::ImplicitStepper(const CoupledSystem& sys, SolverOptions solver) : sys_(sys), solver_(solver) {
    sys_.check_dimensions();
}

const ImplicitStepper::Factor& ImplicitStepper::factor_for(double s) {
    auto it = factors_.find(s);
    if (it != factors_.end()) return *it->second;
    auto f = std::make_shared<Factor>();
    f->s = s;
    const std::size_t dim = sys_.nu() + sys_.np();
    if (dim <= solver_.dense_threshold) {
        const SparseMatrix minus_dt = linear_combination(-1.0, sys_.D.transpose(), 0.0, sys_.D.transpose());
        const SparseMatrix pp = linear_combination(s, sys_.C, 1.0, sys_.B);
        const SparseMatrix up = linear_combination(s, sys_.D, 0.0, sys_.D);
        f->block.emplace(block_matrix(sys_.A, minus_dt, up, pp).to_dense());
    } else {
        if (!sys_.B.is_symmetric()) {
            throw Error(ErrorCode::SolverFailure, "Schur-complement CG needs a symmetric B");
        }
        if (!elastic_) elastic_ = std::make_shared<LinearSolver>(sys_.A, solver_);
    }
    return *factors_.emplace(s, std::move(f)).first->second;
}

std::pair<Vector, Vector> ImplicitStepper::step(const BdfScheme& scheme, double tau, const History& hist_u,
                                                const History& hist_p, double t_n) {
    const double s = scheme.xi0() / tau;
    const Factor& fac = factor_for(s);

    const Vector hu = history_sum(scheme, hist_u);
    const Vector hp = history_sum(scheme, hist_p);
    const Vector f = sys_.f(t_n);
    Vector rp = sys_.g(t_n);
    axpy(-1.0 / tau, sys_.D.apply(hu), rp);
    axpy(-1.0 / tau, sys_.C.apply(hp), rp);

    const std::size_t nu = sys_.nu(), np = sys_.np();
    if (fac.block) {
        const Vector x = fac.block->solve(concat(f, rp));
        return {Vector(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nu)),
                Vector(x.begin() + static_cast<std::ptrdiff_t>(nu), x.end())};
    }
    // (D A⁻¹ Dᵀ + C + B/s) p = rp/s − D A⁻¹ f,  u = A⁻¹ (f + Dᵀ p)
    const Vector ainv_f = elastic_->solve(f);
    Vector rhs = scaled(1.0 / s, rp);
    axpy(-1.0, sys_.D.apply(ainv_f), rhs);
    const LinearOperator op = [this, s](std::span<const double> x) {
        Vector y = sys_.D.apply(elastic_->solve(sys_.D.apply_transpose(x)));
        axpy(1.0, sys_.C.apply(x), y);
        axpy(1.0 / s, sys_.B.apply(x), y);
        return y;
    };
    const CgResult res = conjugate_gradient(op, rhs, solver_.cg_rel_tol, 10 * np);
    if (res.relative_residual > 100 * solver_.cg_rel_tol) {
        throw Error(ErrorCode::SolverFailure, "Schur-complement CG did not converge");
    }
    Vector ut = sys_.D.apply_transpose(res.x);
    axpy(1.0, f, ut);
    return {elastic_->solve(ut), res.x};
}

StepResult step_split(const CoupledSystem& sys, const SplitConfig& cfg, const BdfScheme& scheme, double tau,
                      const History& hist_u, const History& hist_p, double t_n) {
    SplitStepper stepper(sys, cfg);
    return stepper.step(scheme, tau, hist_u, hist_p, t_n);
}

std::pair<Vector, Vector> step_implicit(const CoupledSystem& sys, const BdfScheme& scheme, double tau,
                                        const History& hist_u, const History& hist_p, double t_n) {
    ImplicitStepper stepper(sys);
    return stepper.step(scheme, tau, hist_u, hist_p, t_n);
}

// ---------------------------------------------------------------------------
// integrate
// ---------------------------------------------------------------------------

std::size_t step_count(double tau, double T) {
    if (!(tau > 0.0) || !(T > 0.0)) throw Error(ErrorCode::InvalidParameter, "tau and T must be positive");
    const double ratio = T / tau;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 || rounded < 1.0) {
        throw Error(ErrorCode::InvalidParameter, "T / tau = " + std::to_string(ratio) + " is not an integer");
    }
    return static_cast<std::size_t>(rounded);
}

namespace {

/// States for n = 1..count produced by implicit BDF-min(n, k) with step tau,
/// starting from (u0, p0). Returns the full list including n = 0.
std::pair<std::vector<Vector>, std::vector<Vector>> implicit_bootstrap(ImplicitStepper& stepper, int k,
                                                                       double tau, std::size_t count,
                                                                       const Vector& u0, const Vector& p0) {
    std::vector<Vector> us{u0}, ps{p0};
    History hu(static_cast<std::size_t>(k)), hp(static_cast<std::size_t>(k));
    hu.push(u0);
    hp.push(p0);
    std::vector<BdfScheme> schemes;
    for (int j = 1; j <= k; ++j) schemes.push_back(BdfScheme::without_multiplier(j));
    for (std::size_t n = 1; n <= count; ++n) {
        const int order = std::min<int>(static_cast<int>(n), k);
        auto [u, p] = stepper.step(schemes[static_cast<std::size_t>(order - 1)], tau, hu, hp,
                                   static_cast<double>(n) * tau);
        hu.push(u);
        hp.push(p);
        us.push_back(std::move(u));
        ps.push_back(std::move(p));
    }
    return {std::move(us), std::move(ps)};
}

}  // namespace

Trajectory integrate(const CoupledSystem& sys, const SplitConfig& cfg, int k, double tau, double T, Mode mode,
                     SolverOptions solver) {
    const std::size_t N = step_count(tau, T);
    const BdfScheme scheme = BdfScheme::without_multiplier(k);
    const auto kk = static_cast<std::size_t>(k);

    Trajectory traj;
    traj.tau = tau;
    traj.times.reserve(N + 1);
    for (std::size_t n = 0; n <= N; ++n) traj.times.push_back(static_cast<double>(n) * tau);

    ImplicitStepper implicit(sys, solver);
    const std::size_t seeded = std::min(kk - 1, N);

    if (const auto* exact = std::get_if<ExactDataStartup>(&cfg.startup)) {
        if (!exact->provider) throw Error(ErrorCode::InvalidParameter, "exact-data startup without provider");
        for (std::size_t n = 0; n <= seeded; ++n) {
            auto [u, p] = exact->provider(traj.times[n]);
            traj.u.push_back(std::move(u));
            traj.p.push_back(std::move(p));
        }
    } else if (const auto* sub = std::get_if<SubstepBootstrap>(&cfg.startup)) {
        const auto m = static_cast<std::size_t>(std::max(1, sub->substeps));
        auto [us, ps] = implicit_bootstrap(implicit, k, tau / static_cast<double>(m), seeded * m, sys.u0, sys.p0);
        for (std::size_t n = 0; n <= seeded; ++n) {
            traj.u.push_back(std::move(us[n * m]));
            traj.p.push_back(std::move(ps[n * m]));
        }
    } else {
        auto [us, ps] = implicit_bootstrap(implicit, k, tau, seeded, sys.u0, sys.p0);
        traj.u = std::move(us);
        traj.p = std::move(ps);
    }

    History hu(kk), hp(kk);
    for (std::size_t n = 0; n <= seeded; ++n) {
        hu.push(traj.u[n]);
        hp.push(traj.p[n]);
    }

    std::optional<SplitStepper> split;
    if (mode == Mode::Split) split.emplace(sys, cfg, solver);

    for (std::size_t n = seeded + 1; n <= N; ++n) {
        const double t = traj.times[n];
        Vector u, p;
        if (split) {
            StepResult r = split->step(scheme, tau, hu, hp, t, n);
            u = std::move(r.u);
            p = std::move(r.p);
            traj.reports.push_back(std::move(r.report));
        } else {
            std::tie(u, p) = implicit.step(scheme, tau, hu, hp, t);
        }
        hu.push(u);
        hp.push(p);
        traj.u.push_back(std::move(u));
        traj.p.push_back(std::move(p));
    }
    return traj;
}

}  // namespace porosplit
