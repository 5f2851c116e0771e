#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "porosplit/csv.hpp"
#include "porosplit/fem2d.hpp"
#include "porosplit/splitsolve.hpp"
#include "porosplit/system.hpp"

namespace porosplit::studies {

// -----------------------------------------------------------------------------
// Tolerance rules and error bookkeeping
// -----------------------------------------------------------------------------

/// tol as a function of (τ, k): τ^s, a fixed value, or 10^{−3−3k}.
struct TolRule {
    enum class Kind { Exponent, Fixed, OrderFixed };
    Kind kind = Kind::Exponent;
    double value = 1.5;

    [[nodiscard]] static TolRule exponent(double s) { return {Kind::Exponent, s}; }
    [[nodiscard]] static TolRule fixed(double tol) { return {Kind::Fixed, tol}; }
    [[nodiscard]] static TolRule order_fixed() { return {Kind::OrderFixed, 0.0}; }

    [[nodiscard]] double tol(double tau, int k) const;
};

/// Errors of one run, maxima over the accepted steps n >= k.
struct ErrorRecord {
    int k = 1;
    double tau = 0.0;
    double tol = 0.0;
    double err_u_V = 0.0;
    double err_p_H = 0.0;
    /// err_u_V + err_p_H.
    double combined = 0.0;
    /// Mean over steps n >= k of ‖u − u_ref‖_V + ‖p − p_ref‖_H.
    double mean_combined = 0.0;
    Mode mode = Mode::Split;
};

/// (τ, error) pairs with τ halving.
struct EocTable {
    std::vector<double> taus;
    std::vector<double> errors;

    /// log₂(e_i / e_{i+1}).
    [[nodiscard]] std::vector<double> pairwise() const;
    /// Least-squares slope of log e against log τ.
    [[nodiscard]] double fitted() const;
};

/// Fraction of split steps where the iteration-count prediction bounds the
/// observed count.
struct PredictorAudit {
    std::size_t steps = 0;
    std::size_t bounded = 0;
    std::size_t within_one = 0;

    void add(const Trajectory& traj);
    void merge(const PredictorAudit& other);
    [[nodiscard]] double fraction() const noexcept {
        return steps ? static_cast<double>(bounded) / static_cast<double>(steps) : 1.0;
    }
    [[nodiscard]] bool sound() const noexcept { return fraction() >= 0.99 && within_one == steps; }
};

/// Reference solution sampled on demand, t -> (u, p).
using Reference = std::function<std::pair<Vector, Vector>(double)>;

/// Analytic reference from the system's exact evaluators. Throws NotFound.
[[nodiscard]] Reference analytic_reference(const CoupledSystem& sys);

/// Fully implicit BDF-k run with step tau_ref (start states from implicit
/// BDF-k at tau_ref/substeps). Lookups must hit multiples of tau_ref.
[[nodiscard]] Reference fine_implicit_reference(const CoupledSystem& sys, int k, double tau_ref, double T,
                                                int substeps = 64);

/// Errors of a trajectory against a reference over n >= k.
[[nodiscard]] ErrorRecord measure_error(const CoupledSystem& sys, const Trajectory& traj, const Reference& ref,
                                        int k);

/// One run with the start states taken from the reference. Split mode uses
/// cfg (its startup is replaced); implicit mode ignores the split settings.
[[nodiscard]] std::pair<ErrorRecord, Trajectory> run_against_reference(const CoupledSystem& sys,
                                                                       const SplitConfig& cfg, int k,
                                                                       double tau, double T, Mode mode,
                                                                       const Reference& ref);

/// Runs fn(0..count−1) on up to `threads` workers; the first exception is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

// -----------------------------------------------------------------------------
// Studies
// -----------------------------------------------------------------------------

enum class ReferenceKind { Analytic, FineImplicit };

struct ConvergenceOptions {
    int k = 1;
    std::vector<double> taus;
    TolRule tol = TolRule::exponent(2.5);
    ReferenceKind reference = ReferenceKind::FineImplicit;
    double T = 1.0;
    /// τ_ref = min(taus) / ref_factor.
    int ref_factor = 8;
    int substeps = 64;
    /// Stabilization and weights; tol and startup are overwritten per run.
    SplitConfig base;
    bool include_implicit = true;
    std::size_t threads = 1;
};

struct ConvergenceResult {
    std::vector<ErrorRecord> records;
    EocTable split_eoc, implicit_eoc;
    PredictorAudit audit;
};

[[nodiscard]] ConvergenceResult convergence_study(const CoupledSystem& sys, const ConvergenceOptions& opt);

struct BalancingOptions {
    int k = 1;
    std::vector<double> taus;
    std::vector<double> exponents;
    ReferenceKind reference = ReferenceKind::FineImplicit;
    double T = 1.0;
    int ref_factor = 8;
    int substeps = 64;
    /// Allowed ratio split/implicit for s = k + 3/2.
    double factor = 2.0;
    SplitConfig base;
    std::size_t threads = 1;
};

struct BalancingRecord {
    int k = 1;
    double tau = 0.0;
    double s = 0.0;
    double error = 0.0;
    double implicit_error = 0.0;
};

struct BalancingResult {
    std::vector<BalancingRecord> records;
    /// Per τ (same order as the options): s = k + 3/2 within the factor.
    std::vector<bool> balanced;
    PredictorAudit audit;

    /// Largest error / implicit_error over τ for the given exponent.
    [[nodiscard]] double worst_ratio(double s) const;
};

[[nodiscard]] BalancingResult balancing_study(const CoupledSystem& sys, const BalancingOptions& opt);

struct IterationOptions {
    int k = 1;
    std::vector<double> omegas{2.0, 4.0};
    std::vector<double> gammas{0.5, 0.1};
    std::vector<double> taus;
    double T = 1.0;
    /// tol = ē · τ^s with ē the mean implicit combined error; s = 0 is the
    /// bare average-error rule.
    double tol_tau_exponent = 1.5;
    std::size_t threads = 1;
};

struct IterationRecord {
    int k = 1;
    double omega = 0.0;
    double gamma = 0.0;
    double tau = 0.0;
    double L = 0.0;
    double tol = 0.0;
    double implicit_error = 0.0;
    double mean_iterations = 0.0;
    long long mean_Jn = 0;
};

struct IterationResult {
    std::vector<IterationRecord> records;
    PredictorAudit audit;
    /// Largest |J − ratio| over steps past the first inner iteration.
    double max_ratio_deviation = 0.0;
};

/// Table of mean inner iterations on the toy problem with L tuned to γ.
[[nodiscard]] IterationResult iteration_study(const IterationOptions& opt);

struct AverageIterationOptions {
    int k = 1;
    std::vector<double> taus;
    /// Offsets d with tol = τ^{k+d}.
    std::vector<double> offsets{1.0, 1.5, 2.0};
    double T = 1.0;
    SplitConfig base;
    std::size_t threads = 1;
};

struct AverageIterationRecord {
    int k = 1;
    double s = 0.0;
    double tau = 0.0;
    double mean_iterations = 0.0;
};

struct AverageIterationResult {
    std::vector<AverageIterationRecord> records;
    PredictorAudit audit;
};

/// Mean inner iterations on a system with analytic start data.
[[nodiscard]] AverageIterationResult average_iteration_table(const CoupledSystem& sys,
                                                             const AverageIterationOptions& opt);

// -----------------------------------------------------------------------------
// CSV views
// -----------------------------------------------------------------------------

[[nodiscard]] csv::Table convergence_table(const ConvergenceResult& r);
[[nodiscard]] csv::Table balancing_table(const BalancingResult& r);
[[nodiscard]] csv::Table iteration_table(const IterationResult& r);
[[nodiscard]] csv::Table average_iteration_csv(const AverageIterationResult& r);
[[nodiscard]] csv::Table step_report_table(const Trajectory& traj);

/// τ = 2^{−first}, ..., 2^{−last}.
[[nodiscard]] std::vector<double> halving_taus(int first, int last);

}  // namespace porosplit::studies
