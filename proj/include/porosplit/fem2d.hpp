#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

#include "porosplit/linalg.hpp"
#include "porosplit/system.hpp"

namespace porosplit::fem2d {

/// Scalar field f(t, x, y).
using ScalarField = std::function<double(double, double, double)>;

/// Uniform n×n square grid on (0,1)², each cell split into two right
/// triangles along the (0,0)–(1,1) diagonal direction. Boundary nodes are
/// eliminated; interior nodes carry the degrees of freedom.
struct Grid2D {
    int n = 0;
    double h = 0.0;
    /// Node coordinates, node id = i + (n+1) j.
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<std::size_t, 3>> triangles;
    /// dof index per node, −1 on the boundary.
    std::vector<long> dof_of_node;
    /// node id per dof.
    std::vector<std::size_t> interior_nodes;

    [[nodiscard]] static Grid2D unit_square(int n);

    [[nodiscard]] std::size_t node_count() const noexcept { return nodes.size(); }
    [[nodiscard]] std::size_t triangle_count() const noexcept { return triangles.size(); }
    [[nodiscard]] std::size_t dof_count() const noexcept { return interior_nodes.size(); }
};

struct BiotParameters {
    double lambda = 0.5;
    double mu = 0.125;
    double kappa_over_nu = 0.05;
    double inv_M = 4.0;
    double alpha = 0.75;

    /// Parameter set of the two-dimensional convergence study.
    [[nodiscard]] static BiotParameters defaults() { return {}; }
    /// Throws InvalidParameter unless every field is positive (alpha may be
    /// zero to switch the coupling off).
    void validate() const;
};

/// Analytic fields and matching sources on the unit square:
/// u = −10 e^{−t/5} S (1, 1), p = 10 e^{−t/5} S, S = sin(πx) sin(πy).
struct ManufacturedSolution {
    ScalarField ux, uy, p;
    ScalarField dux_dt, duy_dt, dp_dt;
    ScalarField fx, fy, g;
};

[[nodiscard]] ManufacturedSolution manufactured(const BiotParameters& params);

/// Nodal interpolation onto interior dofs.
[[nodiscard]] Vector interpolate(const Grid2D& grid, const ScalarField& field, double t);
/// Vector field in [x-components..., y-components...] ordering.
[[nodiscard]] Vector interpolate(const Grid2D& grid, const ScalarField& fx, const ScalarField& fy,
                                 double t);

/// ∫ f φ_a over the domain for interior dofs, edge-midpoint rule per triangle.
[[nodiscard]] Vector load_vector(const Grid2D& grid, const ScalarField& field, double t);

/// Scalar P1 matrices over interior dofs.
[[nodiscard]] SparseMatrix mass_matrix(const Grid2D& grid);
[[nodiscard]] SparseMatrix stiffness_matrix(const Grid2D& grid);

/// P1–P1 Biot assembly with sources set to zero and zero initial data.
/// Norm matrices: V = blockdiag(K, K), Q = K, H = M. Constants are the
/// physical surrogates c_a = 2μ, C_a = 2μ + 2λ, c_b = C_b = κ/ν,
/// c_c = C_c = 1/M, C_d = α√2.
[[nodiscard]] CoupledSystem assemble_biot(const Grid2D& grid, const BiotParameters& params);

/// Initial state of the manufactured problem.
enum class InitialData {
    /// p⁰ = nodal interpolant, u⁰ from A u⁰ = Dᵀ p⁰ + f(0).
    Interpolated,
    /// The discrete state (U, P) with A U − Dᵀ P = F and
    /// −(1/5)(D U + C P) + B P = G, where f = e^{−t/5} F and g = e^{−t/5} G.
    /// The semi-discrete solution is then exactly e^{−t/5} (U, P), free of
    /// the stiff initial layer an interpolant excites.
    Separable,
};

/// assemble_biot plus manufactured sources, initial data and interpolated
/// exact fields.
[[nodiscard]] CoupledSystem make_manufactured_biot(int n, const BiotParameters& params,
                                                   InitialData initial = InitialData::Separable);

/// Classical fixed-stress stabilization α² / (λ + 2μ/d) with d = 2.
[[nodiscard]] double fixed_stress_L(const BiotParameters& params);

/// Writes "x,y,value" rows for every node (boundary nodes get 0).
void write_nodal_csv(const std::filesystem::path& path, const Grid2D& grid, std::span<const double> dof_values);

}  // namespace porosplit::fem2d
