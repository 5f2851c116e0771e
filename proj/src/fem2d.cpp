#include "porosplit/fem2d.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "porosplit/csv.hpp"
#include "porosplit/error.hpp"

namespace porosplit::fem2d {

namespace {

constexpr double kPi = std::numbers::pi;

/// Geometry of one P1 triangle: area and constant basis gradients.
struct Element {
    double area;
    std::array<std::array<double, 2>, 3> grad;
};

Element element(const Grid2D& g, const std::array<std::size_t, 3>& tri) {
    const auto& p0 = g.nodes[tri[0]];
    const auto& p1 = g.nodes[tri[1]];
    const auto& p2 = g.nodes[tri[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    Element e;
    e.area = 0.5 * std::abs(det);
    e.grad[0] = {(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det};
    e.grad[1] = {(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det};
    e.grad[2] = {(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det};
    return e;
}

/// Scalar P1 matrices: weight_mass * M + weight_stiff * K.
SparseMatrix scalar_matrix(const Grid2D& grid, double weight_mass, double weight_stiff) {
    std::vector<Triplet> t;
    t.reserve(grid.triangle_count() * 9);
    for (const auto& tri : grid.triangles) {
        const Element e = element(grid, tri);
        for (int a = 0; a < 3; ++a) {
            const long ra = grid.dof_of_node[tri[a]];
            if (ra < 0) continue;
            for (int b = 0; b < 3; ++b) {
                const long cb = grid.dof_of_node[tri[b]];
                if (cb < 0) continue;
                const double mass = e.area / 12.0 * (a == b ? 2.0 : 1.0);
                const double stiff = e.area * (e.grad[a][0] * e.grad[b][0] + e.grad[a][1] * e.grad[b][1]);
                t.push_back({static_cast<std::size_t>(ra), static_cast<std::size_t>(cb),
                             weight_mass * mass + weight_stiff * stiff});
            }
        }
    }
    const std::size_t n = grid.dof_count();
    return SparseMatrix::from_triplets(n, n, std::move(t)).marked_symmetric();
}

}  // namespace

Grid2D Grid2D::unit_square(int n) {
    if (n < 2) throw Error(ErrorCode::InvalidParameter, "grid needs at least 2 cells per side");
    Grid2D g;
    g.n = n;
    g.h = 1.0 / n;
    const auto stride = static_cast<std::size_t>(n) + 1;
    g.nodes.reserve(stride * stride);
    g.dof_of_node.assign(stride * stride, -1);
    for (std::size_t j = 0; j < stride; ++j)
        for (std::size_t i = 0; i < stride; ++i) {
            g.nodes.push_back({static_cast<double>(i) * g.h, static_cast<double>(j) * g.h});
            const bool boundary = i == 0 || j == 0 || i == stride - 1 || j == stride - 1;
            if (!boundary) {
                g.dof_of_node[i + stride * j] = static_cast<long>(g.interior_nodes.size());
                g.interior_nodes.push_back(i + stride * j);
            }
        }
    for (std::size_t j = 0; j + 1 < stride; ++j)
        for (std::size_t i = 0; i + 1 < stride; ++i) {
            const std::size_t a = i + stride * j, b = a + 1, c = b + stride, d = a + stride;
            g.triangles.push_back({a, b, c});
            g.triangles.push_back({a, c, d});
        }
    return g;
}

void BiotParameters::validate() const {
    if (!(lambda > 0 && mu > 0 && kappa_over_nu > 0 && inv_M > 0 && alpha >= 0)) {
        throw Error(ErrorCode::InvalidParameter, "Biot parameters must be positive");
    }
}

ManufacturedSolution manufactured(const BiotParameters& prm) {
    const double lam = prm.lambda, mu = prm.mu, kap = prm.kappa_over_nu, inv_m = prm.inv_M, al = prm.alpha;
    auto S = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
    auto Sx = [](double x, double y) { return kPi * std::cos(kPi * x) * std::sin(kPi * y); };
    auto Sy = [](double x, double y) { return kPi * std::sin(kPi * x) * std::cos(kPi * y); };
    auto Sxy = [](double x, double y) { return kPi * kPi * std::cos(kPi * x) * std::cos(kPi * y); };
    auto E = [](double t) { return std::exp(-t / 5.0); };

    ManufacturedSolution m;
    m.ux = [=](double t, double x, double y) { return -10.0 * E(t) * S(x, y); };
    m.uy = m.ux;
    m.p = [=](double t, double x, double y) { return 10.0 * E(t) * S(x, y); };
    m.dux_dt = [=](double t, double x, double y) { return 2.0 * E(t) * S(x, y); };
    m.duy_dt = m.dux_dt;
    m.dp_dt = [=](double t, double x, double y) { return -2.0 * E(t) * S(x, y); };
    // −∇·σ(u) + α∇p with σ(u) = μ(∇u + ∇uᵀ) + λ(∇·u)I.
    m.fx = [=](double t, double x, double y) {
        const double e = E(t), s = S(x, y);
        return -20.0 * mu * kPi * kPi * e * s + 10.0 * (mu + lam) * e * (-kPi * kPi * s + Sxy(x, y)) +
               10.0 * al * e * Sx(x, y);
    };
    m.fy = [=](double t, double x, double y) {
        const double e = E(t), s = S(x, y);
        return -20.0 * mu * kPi * kPi * e * s + 10.0 * (mu + lam) * e * (-kPi * kPi * s + Sxy(x, y)) +
               10.0 * al * e * Sy(x, y);
    };
    // ∂t(α∇·u + p/M) − ∇·((κ/ν)∇p)
    m.g = [=](double t, double x, double y) {
        const double e = E(t), s = S(x, y);
        return -0.2 * e * (-10.0 * al * (Sx(x, y) + Sy(x, y)) + 10.0 * inv_m * s) +
               20.0 * kPi * kPi * kap * e * s;
    };
    return m;
}

Vector interpolate(const Grid2D& grid, const ScalarField& field, double t) {
    Vector v(grid.dof_count());
    for (std::size_t d = 0; d < v.size(); ++d) {
        const auto& xy = grid.nodes[grid.interior_nodes[d]];
        v[d] = field(t, xy[0], xy[1]);
    }
    return v;
}

Vector interpolate(const Grid2D& grid, const ScalarField& fx, const ScalarField& fy, double t) {
    return concat(interpolate(grid, fx, t), interpolate(grid, fy, t));
}

Vector load_vector(const Grid2D& grid, const ScalarField& field, double t) {
    Vector b(grid.dof_count(), 0.0);
    for (const auto& tri : grid.triangles) {
        const Element e = element(grid, tri);
        std::array<double, 3> fm{};  // f at the midpoint of the edge opposite vertex a
        for (int a = 0; a < 3; ++a) {
            const auto& p = grid.nodes[tri[(a + 1) % 3]];
            const auto& q = grid.nodes[tri[(a + 2) % 3]];
            fm[a] = field(t, 0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]));
        }
        for (int a = 0; a < 3; ++a) {
            const long r = grid.dof_of_node[tri[a]];
            if (r < 0) continue;
            // φ_a is 1/2 on the two edges touching vertex a and 0 on the opposite one.
            b[static_cast<std::size_t>(r)] += e.area / 3.0 * 0.5 * (fm[(a + 1) % 3] + fm[(a + 2) % 3]);
        }
    }
    return b;
}

SparseMatrix mass_matrix(const Grid2D& grid) { return scalar_matrix(grid, 1.0, 0.0); }

SparseMatrix stiffness_matrix(const Grid2D& grid) { return scalar_matrix(grid, 0.0, 1.0); }

CoupledSystem assemble_biot(const Grid2D& grid, const BiotParameters& prm) {
    prm.validate();
    const std::size_t N = grid.dof_count();
    std::vector<Triplet> ta, td;
    ta.reserve(grid.triangle_count() * 36);
    td.reserve(grid.triangle_count() * 18);
    for (const auto& tri : grid.triangles) {
        const Element e = element(grid, tri);
        for (int a = 0; a < 3; ++a) {
            const long ra = grid.dof_of_node[tri[a]];
            for (int b = 0; b < 3; ++b) {
                const long rb = grid.dof_of_node[tri[b]];
                if (rb < 0) continue;
                const auto& ga = e.grad[a];
                const auto& gb = e.grad[b];
                // Divergence coupling: row = pressure dof at a, column = (b, j).
                if (ra >= 0) {
                    for (std::size_t j = 0; j < 2; ++j) {
                        td.push_back({static_cast<std::size_t>(ra), j * N + static_cast<std::size_t>(rb),
                                      prm.alpha * gb[j] * e.area / 3.0});
                    }
                }
                if (ra < 0) continue;
                const double gg = ga[0] * gb[0] + ga[1] * gb[1];
                for (std::size_t i = 0; i < 2; ++i)
                    for (std::size_t j = 0; j < 2; ++j) {
                        const double v = e.area * (prm.mu * ((i == j ? gg : 0.0) + ga[j] * gb[i]) +
                                                   prm.lambda * ga[i] * gb[j]);
                        ta.push_back({i * N + static_cast<std::size_t>(ra), j * N + static_cast<std::size_t>(rb), v});
                    }
            }
        }
    }

    const SparseMatrix K = stiffness_matrix(grid);
    const SparseMatrix M = mass_matrix(grid);

    CoupledSystem sys;
    sys.name = "biot2d";
    sys.A = SparseMatrix::from_triplets(2 * N, 2 * N, std::move(ta)).marked_symmetric();
    sys.D = SparseMatrix::from_triplets(N, 2 * N, std::move(td));
    sys.B = linear_combination(prm.kappa_over_nu, K, 0.0, K);
    sys.C = linear_combination(prm.inv_M, M, 0.0, M);
    sys.norm_V = block_diagonal(K, K);
    sys.norm_H = M;
    sys.norm_Q = K;
    sys.f = [N](double) { return Vector(2 * N, 0.0); };
    sys.g = [N](double) { return Vector(N, 0.0); };
    sys.u0.assign(2 * N, 0.0);
    sys.p0.assign(N, 0.0);

    sys.constants.c_a = 2.0 * prm.mu;
    sys.constants.C_a = 2.0 * prm.mu + 2.0 * prm.lambda;
    sys.constants.c_b = sys.constants.C_b = prm.kappa_over_nu;
    sys.constants.c_c = sys.constants.C_c = prm.inv_M;
    sys.constants.C_d = prm.alpha * std::numbers::sqrt2;
    return sys;
}

CoupledSystem make_manufactured_biot(int n, const BiotParameters& params, InitialData initial) {
    const Grid2D grid = Grid2D::unit_square(n);
    CoupledSystem sys = assemble_biot(grid, params);
    const ManufacturedSolution ms = manufactured(params);
    sys.f = [grid, ms](double t) { return concat(load_vector(grid, ms.fx, t), load_vector(grid, ms.fy, t)); };
    sys.g = [grid, ms](double t) { return load_vector(grid, ms.g, t); };
    sys.exact_u = [grid, ms](double t) { return interpolate(grid, ms.ux, ms.uy, t); };
    sys.exact_p = [grid, ms](double t) { return interpolate(grid, ms.p, t); };
    if (initial == InitialData::Interpolated) {
        sys.p0 = sys.exact_p(0.0);
        project_consistent_initial(sys);
        return sys;
    }
    const SparseMatrix dt = sys.D.transpose();
    const SparseMatrix minus_dt = linear_combination(-1.0, dt, 0.0, dt);
    const SparseMatrix up = linear_combination(-0.2, sys.D, 0.0, sys.D);
    const SparseMatrix pp = linear_combination(-0.2, sys.C, 1.0, sys.B);
    const Vector x = LuFactorization(block_matrix(sys.A, minus_dt, up, pp).to_dense())
                         .solve(concat(sys.f(0.0), sys.g(0.0)));
    const auto nu = static_cast<std::ptrdiff_t>(sys.nu());
    sys.u0.assign(x.begin(), x.begin() + nu);
    sys.p0.assign(x.begin() + nu, x.end());
    return sys;
}

double fixed_stress_L(const BiotParameters& params) {
    return params.alpha * params.alpha / (params.lambda + params.mu);
}

void write_nodal_csv(const std::filesystem::path& path, const Grid2D& grid, std::span<const double> dof_values) {
    if (dof_values.size() != grid.dof_count()) {
        throw Error(ErrorCode::DimensionMismatch, "nodal export expects one value per interior node");
    }
    csv::Table table({"x", "y", "value"});
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        const long d = grid.dof_of_node[node];
        const double v = d < 0 ? 0.0 : dof_values[static_cast<std::size_t>(d)];
        table.add_row({grid.nodes[node][0], grid.nodes[node][1], v});
    }
    csv::write_table(path, table);
}

}  // namespace porosplit::fem2d
