#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "porosplit/error.hpp"
#include "porosplit/fem2d.hpp"
#include "porosplit/system.hpp"

using namespace porosplit;
using namespace porosplit::fem2d;

namespace {

std::size_t dof(const Grid2D& g, std::size_t i, std::size_t j) {
    const long d = g.dof_of_node[i + (static_cast<std::size_t>(g.n) + 1) * j];
    EXPECT_GE(d, 0);
    return static_cast<std::size_t>(d);
}

}  // namespace

TEST(Grid, Counts) {
    for (int n : {2, 5, 8}) {
        const Grid2D g = Grid2D::unit_square(n);
        EXPECT_EQ(g.node_count(), static_cast<std::size_t>((n + 1) * (n + 1)));
        EXPECT_EQ(g.triangle_count(), static_cast<std::size_t>(2 * n * n));
        EXPECT_EQ(g.dof_count(), static_cast<std::size_t>((n - 1) * (n - 1)));
        for (std::size_t node = 0; node < g.node_count(); ++node) {
            const auto [x, y] = g.nodes[node];
            const bool boundary = x == 0.0 || y == 0.0 || std::abs(x - 1.0) < 1e-14 || std::abs(y - 1.0) < 1e-14;
            EXPECT_EQ(boundary, g.dof_of_node[node] < 0);
        }
    }
    EXPECT_THROW((void)Grid2D::unit_square(1), Error);
}

TEST(Assembly, ZeroAlphaGivesZeroCoupling) {
    BiotParameters p;
    p.alpha = 0.0;
    const CoupledSystem sys = assemble_biot(Grid2D::unit_square(4), p);
    for (double v : sys.D.values()) EXPECT_EQ(v, 0.0);
}

TEST(Assembly, StorageMatrixMatchesHandAssembly) {
    const Grid2D g = Grid2D::unit_square(4);
    const BiotParameters p = BiotParameters::defaults();
    const CoupledSystem sys = assemble_biot(g, p);
    const double h = 0.25, area = h * h / 2.0;
    // Element mass area/12 [[2,1,1],[1,2,1],[1,1,2]]; interior nodes touch six
    // triangles, an axis-aligned edge is shared by two.
    const std::size_t c = dof(g, 2, 2);
    EXPECT_NEAR(sys.C.at(c, c), p.inv_M * 6.0 * area * 2.0 / 12.0, 1e-15);
    EXPECT_NEAR(sys.C.at(c, dof(g, 3, 2)), p.inv_M * 2.0 * area / 12.0, 1e-15);
    EXPECT_NEAR(sys.C.at(c, dof(g, 3, 3)), p.inv_M * 2.0 * area / 12.0, 1e-15);
    EXPECT_EQ(sys.C.at(c, dof(g, 1, 3)), 0.0);
    const SparseMatrix m = mass_matrix(g);
    for (std::size_t i = 0; i < g.dof_count(); ++i)
        for (std::size_t j = 0; j < g.dof_count(); ++j) EXPECT_NEAR(sys.C.at(i, j), p.inv_M * m.at(i, j), 1e-15);
}

TEST(Assembly, SymmetryAndNorms) {
    const CoupledSystem sys = assemble_biot(Grid2D::unit_square(6), BiotParameters::defaults());
    EXPECT_TRUE(sys.A.is_symmetric(1e-12));
    EXPECT_TRUE(sys.B.is_symmetric(1e-12));
    EXPECT_TRUE(sys.C.is_symmetric(1e-12));
    EXPECT_EQ(sys.D.rows(), sys.np());
    EXPECT_EQ(sys.D.cols(), sys.nu());
    EXPECT_EQ(sys.norm_V.rows(), sys.nu());
    EXPECT_EQ(sys.norm_H.rows(), sys.np());
    EXPECT_DOUBLE_EQ(*sys.constants.c_a, 0.25);
    EXPECT_DOUBLE_EQ(*sys.constants.c_c, 4.0);
    EXPECT_DOUBLE_EQ(*sys.constants.c_b, 0.05);
    EXPECT_NEAR(*sys.constants.C_d, 0.75 * std::sqrt(2.0), 1e-15);
}

TEST(Assembly, RigidTranslationHasNoInteriorElasticForce) {
    const Grid2D g = Grid2D::unit_square(8);
    const CoupledSystem sys = assemble_biot(g, BiotParameters::defaults());
    const std::size_t N = g.dof_count();
    Vector u(2 * N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        u[i] = 1.0;
        u[N + i] = -2.0;
    }
    const Vector r = sys.A.apply(u);
    const std::size_t centre = dof(g, 4, 4);
    EXPECT_NEAR(r[centre], 0.0, 1e-13);
    EXPECT_NEAR(r[N + centre], 0.0, 1e-13);
}

TEST(Manufactured, FieldValues) {
    const ManufacturedSolution ms = manufactured(BiotParameters::defaults());
    EXPECT_NEAR(ms.p(0.0, 0.5, 0.5), 10.0, 1e-12);
    EXPECT_NEAR(ms.ux(0.0, 0.5, 0.5), -10.0, 1e-12);
    for (double t : {0.0, 0.4, 1.0})
        for (double s : {0.0, 0.3, 1.0}) {
            EXPECT_NEAR(ms.ux(t, 0.0, s), 0.0, 1e-12);
            EXPECT_NEAR(ms.uy(t, 1.0, s), 0.0, 1e-12);
            EXPECT_NEAR(ms.p(t, s, 1.0), 0.0, 1e-12);
        }
}

TEST(Manufactured, SourcesSatisfyPdeByFiniteDifferences) {
    const BiotParameters prm = BiotParameters::defaults();
    const ManufacturedSolution ms = manufactured(prm);
    const double t = 0.3, x = 0.37, y = 0.61, h = 1e-4;
    auto d_x = [&](const ScalarField& f, double tt, double xx, double yy) {
        return (f(tt, xx + h, yy) - f(tt, xx - h, yy)) / (2 * h);
    };
    auto d_y = [&](const ScalarField& f, double tt, double xx, double yy) {
        return (f(tt, xx, yy + h) - f(tt, xx, yy - h)) / (2 * h);
    };
    const double lam = prm.lambda, mu = prm.mu;
    // σ components as fields, differentiated once more.
    const ScalarField div = [&](double tt, double xx, double yy) {
        return d_x(ms.ux, tt, xx, yy) + d_y(ms.uy, tt, xx, yy);
    };
    const ScalarField sxx = [&](double tt, double xx, double yy) {
        return 2 * mu * d_x(ms.ux, tt, xx, yy) + lam * div(tt, xx, yy);
    };
    const ScalarField syy = [&](double tt, double xx, double yy) {
        return 2 * mu * d_y(ms.uy, tt, xx, yy) + lam * div(tt, xx, yy);
    };
    const ScalarField sxy = [&](double tt, double xx, double yy) {
        return mu * (d_y(ms.ux, tt, xx, yy) + d_x(ms.uy, tt, xx, yy));
    };
    const double rx = -(d_x(sxx, t, x, y) + d_y(sxy, t, x, y)) + prm.alpha * d_x(ms.p, t, x, y) - ms.fx(t, x, y);
    const double ry = -(d_x(sxy, t, x, y) + d_y(syy, t, x, y)) + prm.alpha * d_y(ms.p, t, x, y) - ms.fy(t, x, y);
    const ScalarField storage = [&](double tt, double xx, double yy) {
        return prm.alpha * div(tt, xx, yy) + prm.inv_M * ms.p(tt, xx, yy);
    };
    const ScalarField px = [&](double tt, double xx, double yy) { return d_x(ms.p, tt, xx, yy); };
    const ScalarField py = [&](double tt, double xx, double yy) { return d_y(ms.p, tt, xx, yy); };
    const double dt_storage = (storage(t + h, x, y) - storage(t - h, x, y)) / (2 * h);
    const double rg =
        dt_storage - prm.kappa_over_nu * (d_x(px, t, x, y) + d_y(py, t, x, y)) - ms.g(t, x, y);
    EXPECT_LE(std::abs(rx), 1e-5);
    EXPECT_LE(std::abs(ry), 1e-5);
    EXPECT_LE(std::abs(rg), 1e-6);
}

TEST(Interpolation, Examples) {
    const Grid2D g2 = Grid2D::unit_square(2);
    const ManufacturedSolution ms = manufactured(BiotParameters::defaults());
    const Vector p = interpolate(g2, ms.p, 0.0);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_NEAR(p[0], 10.0, 1e-12);
    const Grid2D g = Grid2D::unit_square(5);
    EXPECT_EQ(interpolate(g, [](double, double, double) { return 0.0; }, 0.0), Vector(16, 0.0));
    const ScalarField f = [](double t, double x, double y) { return std::cos(3 * x) * y + t; };
    const ScalarField k = [](double, double x, double y) { return x * x - std::exp(y); };
    const ScalarField sum = [&](double t, double x, double y) { return f(t, x, y) + k(t, x, y); };
    const Vector lhs = interpolate(g, sum, 0.2);
    const Vector rhs = add(interpolate(g, f, 0.2), interpolate(g, k, 0.2));
    EXPECT_LE(norm_inf(subtract(lhs, rhs)), 1e-15);
    EXPECT_EQ(interpolate(g, f, k, 0.1).size(), 32u);
}

TEST(LoadVector, ConstantFieldGivesHatIntegrals) {
    const Grid2D g = Grid2D::unit_square(6);
    const Vector l = load_vector(g, [](double, double, double) { return 1.0; }, 0.0);
    const double h = g.h;
    for (double v : l) EXPECT_NEAR(v, h * h, 1e-15);
}

TEST(ManufacturedBiot, SeparableInitialDataGivesExactSemiDiscreteSolution) {
    const CoupledSystem sys = make_manufactured_biot(6, BiotParameters::defaults());
    for (double t : {0.0, 0.35, 1.0}) {
        const double e = std::exp(-t / 5.0);
        const Vector u = scaled(e, sys.u0), p = scaled(e, sys.p0);
        const auto [ru, rp] = residual_coupled(sys, u, p, scaled(-0.2, u), scaled(-0.2, p), t);
        EXPECT_LE(norm_inf(ru), 1e-11 * (1.0 + norm_inf(sys.f(t))));
        EXPECT_LE(norm_inf(rp), 1e-11 * (1.0 + norm_inf(sys.g(t))));
    }
    // The discrete initial state approaches the interpolated fields under refinement.
    auto gap = [](int n) {
        const CoupledSystem s = make_manufactured_biot(n, BiotParameters::defaults());
        const Vector pi = s.exact_p(0.0);
        return norm_inf(subtract(s.p0, pi)) / norm_inf(pi);
    };
    const double g8 = gap(8), g16 = gap(16);
    EXPECT_LE(g16, 0.1);
    EXPECT_GE(g8 / g16, 2.5);
}

TEST(ManufacturedBiot, InterpolatedInitialDataIsConsistent) {
    const CoupledSystem sys = make_manufactured_biot(6, BiotParameters::defaults(), InitialData::Interpolated);
    EXPECT_EQ(sys.p0, sys.exact_p(0.0));
    const auto [ru, rp] = residual_coupled(sys, sys.u0, sys.p0, Vector(sys.nu(), 0.0), Vector(sys.np(), 0.0), 0.0);
    EXPECT_LE(norm_inf(ru), 1e-10 * norm_inf(sys.f(0.0)));
}

TEST(ManufacturedBiot, SpatialConvergenceOfElasticSolve) {
    std::vector<double> errors;
    for (int n : {8, 16, 32}) {
        const CoupledSystem sys = make_manufactured_biot(n, BiotParameters::defaults(), InitialData::Interpolated);
        const Vector ui = sys.exact_u(0.0);
        errors.push_back(std::sqrt(weighted_norm_sq(sys.norm_V, subtract(sys.u0, ui)) /
                                   weighted_norm_sq(sys.norm_V, ui)));
    }
    EXPECT_GE(std::log2(errors[0] / errors[1]), 0.9);
    EXPECT_GE(std::log2(errors[1] / errors[2]), 0.9);
}

TEST(FixedStress, ParameterValue) { EXPECT_NEAR(fixed_stress_L(BiotParameters::defaults()), 0.9, 1e-15); }

TEST(NodalCsv, WritesEveryNode) {
    const Grid2D g = Grid2D::unit_square(3);
    const auto dir = std::filesystem::temp_directory_path() / "porosplit_fem2d_test";
    const auto path = dir / "p.csv";
    write_nodal_csv(path, g, Vector(g.dof_count(), 1.5));
    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0;
    std::getline(in, line);
    EXPECT_EQ(line, "x,y,value");
    while (std::getline(in, line)) ++lines;
    EXPECT_EQ(lines, g.node_count());
    std::filesystem::remove_all(dir);
    EXPECT_THROW(write_nodal_csv(path, g, Vector(2, 0.0)), Error);
}
