#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "porosplit/bdf.hpp"
#include "porosplit/linalg.hpp"
#include "porosplit/system.hpp"

namespace porosplit {

// -----------------------------------------------------------------------------
// Configuration and reports
// -----------------------------------------------------------------------------

/// Weights of the termination functional. Empty entries fall back to the
/// system constants.
struct NormWeights {
    std::optional<double> c_a, c_c, c_b;
};

/// Seeds the first k states from a provider t -> (u, p), e.g. the analytic
/// solution or samples of a finer reference trajectory.
struct ExactDataStartup {
    std::function<std::pair<Vector, Vector>(double)> provider;
};

/// States 1..k−1 from implicit BDF-1, BDF-2, ... with the same step size.
struct LowerOrderBootstrap {};

/// States 1..k−1 from implicit BDF-k at step τ/m (itself bootstrapped from
/// lower orders), sampled every m sub-steps.
struct SubstepBootstrap {
    int substeps = 64;
};

using Startup = std::variant<LowerOrderBootstrap, ExactDataStartup, SubstepBootstrap>;

/// Inner iterate 0 at step n.
enum class InitialGuess {
    /// (A⁻¹(Dᵀ p^{n−1} + f^n), p^{n−1}): the previous pressure with the
    /// displacement balanced against it, so Δu_i = A⁻¹ Dᵀ Δp_i for all i.
    ElasticLift,
    /// (u^{n−1}, p^{n−1}).
    PreviousStep,
};

struct SplitConfig {
    /// Explicit stabilization. Mutually exclusive with gamma_target.
    std::optional<double> L;
    /// Prescribed contraction; L is derived from it.
    std::optional<double> gamma_target;
    /// Absolute tolerance of the termination functional (compared with tol²).
    double tol = 1e-8;
    std::size_t max_inner = 200;
    NormWeights weights;
    /// Contraction used by the iteration-count predictor; defaults to
    /// gamma_target, else contraction_factor(L, c_c).
    std::optional<double> predictor_gamma;
    Startup startup = LowerOrderBootstrap{};
    InitialGuess initial_guess = InitialGuess::ElasticLift;
};

struct StepReport {
    std::size_t n = 0;
    double t = 0.0;
    std::size_t iterations = 0;
    double terminal_functional = 0.0;
    /// sqrt(F_i / F_{i−1}) for i >= 2.
    std::vector<double> contraction_ratios;
    /// ‖Δp_i‖_H / ‖Δp_{i−1}‖_H for i >= 2.
    std::vector<double> pressure_ratios;
    /// sqrt(F_1).
    double eps1 = 0.0;
    std::size_t predicted = 0;
    double gamma = 0.0;
    double L = 0.0;

    [[nodiscard]] double median_contraction() const;
};

struct Trajectory {
    double tau = 0.0;
    std::vector<double> times;
    std::vector<Vector> u, p;
    /// Reports of split steps (empty for implicit runs).
    std::vector<StepReport> reports;

    [[nodiscard]] std::size_t steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
    [[nodiscard]] double mean_iterations() const;
};

enum class Mode { Split, Implicit };

// -----------------------------------------------------------------------------
// Stabilization and predictors
// -----------------------------------------------------------------------------

/// C_a² C_d² / c_a³. Throws MissingConstants.
[[nodiscard]] double default_L(const CoupledSystem& sys);

/// L = (D A⁻¹ Dᵀ)/(1−γ) + γ/(1−γ) (C + (τ/ξ₀) B) for scalar-pressure systems
/// (D already carries the √ω scaling). Throws NotScalarPressure.
[[nodiscard]] double L_from_gamma(const CoupledSystem& sys, double gamma, double tau, double xi0);

/// Inverse of contraction_factor: L = 2γ² c_c / (1 − γ²).
[[nodiscard]] double L_from_contraction(double gamma, double c_c);

/// √(L / (2 c_c + L)).
[[nodiscard]] double contraction_factor(double L, double c_c);

/// (L − D A⁻¹ Dᵀ) / (L + C + (τ/ξ₀) B) for scalar-pressure systems.
[[nodiscard]] double toy_contraction(const CoupledSystem& sys, double L, double tau, double xi0);

/// (c_a/2)‖du‖²_V + (c_c + L/2)‖dp‖²_H + (τ/ξ₀) c_b ‖dp‖²_Q.
[[nodiscard]] double termination_value(const SplitConfig& cfg, const CoupledSystem& sys,
                                       std::span<const double> du, std::span<const double> dp,
                                       double tau, double xi0, double L);

/// ⌈(ln tol − ln eps1)/ln γ⌉ + 1, clamped to 1 when tol >= eps1.
[[nodiscard]] std::size_t predict_iterations(double tol, double eps1, double gamma);

/// L resolved from cfg (explicit L, γ target or default_L).
[[nodiscard]] double resolve_L(const CoupledSystem& sys, const SplitConfig& cfg, double tau, double xi0);

/// Contraction used for predictions (see SplitConfig::predictor_gamma).
[[nodiscard]] double resolve_predictor_gamma(const CoupledSystem& sys, const SplitConfig& cfg, double L);

// -----------------------------------------------------------------------------
// Steppers
// -----------------------------------------------------------------------------

struct StepResult {
    Vector u, p;
    StepReport report;
};

/// Fixed-stress iteration for one BDF-k step. Factorizations of A and of the
/// stabilized pressure operator are cached per (τ, k, L).
class SplitStepper {
public:
    SplitStepper(const CoupledSystem& sys, SplitConfig cfg, SolverOptions solver = {});

    /// hist_u/hist_p hold u^{n−1}, ..., u^{n−k}. Throws MaxInnerExceeded.
    [[nodiscard]] StepResult step(const BdfScheme& scheme, double tau, const History& hist_u,
                                  const History& hist_p, double t_n, std::size_t n = 0);

private:
    struct Cache {
        double L = 0.0;
        double gamma = 0.0;
        std::shared_ptr<LinearSolver> pressure;
    };
    const Cache& cache_for(const BdfScheme& scheme, double tau);

    const CoupledSystem& sys_;
    SplitConfig cfg_;
    SolverOptions solver_;
    std::shared_ptr<LinearSolver> elastic_;
    std::map<std::pair<double, double>, Cache> caches_;
};

/// Monolithic BDF-k step of the block system
///   [[A, −Dᵀ], [(ξ₀/τ) D, (ξ₀/τ) C + B]].
/// Dense LU up to the solver threshold, Schur-complement CG above it.
class ImplicitStepper {
public:
    explicit ImplicitStepper(const CoupledSystem& sys, SolverOptions solver = {});

    [[nodiscard]] std::pair<Vector, Vector> step(const BdfScheme& scheme, double tau, const History& hist_u,
                                                 const History& hist_p, double t_n);

private:
    struct Factor;
    const Factor& factor_for(double xi0_over_tau);

    const CoupledSystem& sys_;
    SolverOptions solver_;
    std::shared_ptr<LinearSolver> elastic_;
    std::map<double, std::shared_ptr<Factor>> factors_;
};

/// One split step with fresh steppers.
[[nodiscard]] StepResult step_split(const CoupledSystem& sys, const SplitConfig& cfg, const BdfScheme& scheme,
                                    double tau, const History& hist_u, const History& hist_p, double t_n);

/// One implicit step with fresh steppers.
[[nodiscard]] std::pair<Vector, Vector> step_implicit(const CoupledSystem& sys, const BdfScheme& scheme,
                                                      double tau, const History& hist_u,
                                                      const History& hist_p, double t_n);

/// Runs N = T/τ steps from the system's initial data. Steps n < k come from
/// the configured startup; steps n >= k use the requested mode. Throws
/// InvalidParameter when T/τ is not an integer within 1e-9.
[[nodiscard]] Trajectory integrate(const CoupledSystem& sys, const SplitConfig& cfg, int k, double tau,
                                   double T, Mode mode, SolverOptions solver = {});

/// Number of steps T/τ, validated.
[[nodiscard]] std::size_t step_count(double tau, double T);

}  // namespace porosplit
