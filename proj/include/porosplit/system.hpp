#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "porosplit/linalg.hpp"

namespace porosplit {

/// Time-dependent source or field evaluator, t -> vector.
using SourceFn = std::function<Vector(double)>;

/// Coercivity and continuity constants of the bilinear forms with respect to
/// the norm matrices. Unknown constants stay empty.
struct SystemConstants {
    std::optional<double> c_a, C_a;
    std::optional<double> c_b, C_b;
    std::optional<double> c_c, C_c;
    std::optional<double> C_d;
};

/// Assembled linear elliptic–parabolic system
///   A u − Dᵀ p = f(t),   D u̇ + C ṗ + B p = g(t).
/// D maps the displacement space to the pressure space (rows = pressure dofs).
struct CoupledSystem {
    std::string name;
    SparseMatrix A, B, C, D;
    /// Norm matrices for ‖·‖_V (displacement), ‖·‖_H and ‖·‖_Q (pressure).
    SparseMatrix norm_V, norm_H, norm_Q;
    SystemConstants constants;
    SourceFn f, g;
    Vector u0, p0;
    /// Optional exact solution (empty when unknown).
    SourceFn exact_u, exact_p;

    [[nodiscard]] std::size_t nu() const noexcept { return A.rows(); }
    [[nodiscard]] std::size_t np() const noexcept { return C.rows(); }
    [[nodiscard]] bool has_exact() const noexcept { return static_cast<bool>(exact_u) && static_cast<bool>(exact_p); }

    /// ω = C_d² / (c_a c_c). Throws MissingConstants.
    [[nodiscard]] double coupling_strength() const;

    /// Throws DimensionMismatch when block sizes are inconsistent.
    void check_dimensions() const;
};

/// Replaces u0 by the solution of A u0 = Dᵀ p0 + f(0).
void project_consistent_initial(CoupledSystem& sys);

/// Sets c_a, C_a from the extreme generalized eigenvalues of (A, norm_V).
/// Intended for small systems (dense eigen-solve).
void compute_elastic_constants(CoupledSystem& sys);

/// r_u = A u − Dᵀ p − f(t),  r_p = D du + C dp + B p − g(t).
[[nodiscard]] std::pair<Vector, Vector> residual_coupled(const CoupledSystem& sys,
                                                         std::span<const double> u,
                                                         std::span<const double> p,
                                                         std::span<const double> du,
                                                         std::span<const double> dp, double t);

/// Unscaled coupling row of the scalar toy problem.
[[nodiscard]] Vector toy_coupling_row();

/// 3×3 elastic block (1/(2−√2)) tridiag(−1, 2, −1) of the toy problem.
[[nodiscard]] SparseMatrix toy_elastic_block();

/// Scalar toy problem: A = toy_elastic_block(), B = C = 1, D = √ω [2/3, 1/3, 2/3],
/// f ≡ [1, 1, 1], g(t) = 100 sin t, p0 = 0 and consistent u0.
/// The closed-form solution is attached as exact_u / exact_p.
[[nodiscard]] CoupledSystem make_toy(double omega);

/// Exchange matrix E with E_ii = Σ_{j≠i} β_ij and E_ij = −β_ij.
[[nodiscard]] SparseMatrix exchange_matrix(const std::vector<std::vector<double>>& betas);

struct NetworkParameters {
    std::vector<double> alphas;
    std::vector<double> Ms;
    std::vector<double> kappas;
    /// J×J exchange rates; the diagonal is ignored.
    std::vector<std::vector<double>> betas;
    /// Source amplitudes, g_i(t) = amplitude_i sin t. Defaults to 100 each.
    std::vector<double> amplitudes;

    [[nodiscard]] std::size_t networks() const noexcept { return alphas.size(); }
};

/// Multiple-network toy: the toy elastic block shared by J pressures with
/// D rows α_i [2/3, 1/3, 2/3], C = diag(1/M_i), B = diag(κ_i) + exchange.
/// Throws InvalidParameter for J < 2, non-positive α, M, κ or negative β.
[[nodiscard]] CoupledSystem make_network_toy(const NetworkParameters& params);

}  // namespace porosplit
