#include "porosplit/system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "porosplit/error.hpp"

namespace porosplit {

double CoupledSystem::coupling_strength() const {
    if (!constants.C_d || !constants.c_a || !constants.c_c) {
        throw Error(ErrorCode::MissingConstants, "coupling strength needs C_d, c_a and c_c");
    }
    return (*constants.C_d) * (*constants.C_d) / ((*constants.c_a) * (*constants.c_c));
}

void CoupledSystem::check_dimensions() const {
    auto expect = [](bool ok, const std::string& what) {
        if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
    };
    const std::size_t n_u = nu(), n_p = np();
    expect(A.cols() == n_u, "A must be square");
    expect(B.rows() == n_p && B.cols() == n_p, "B must match the pressure space");
    expect(C.cols() == n_p, "C must be square");
    expect(D.rows() == n_p && D.cols() == n_u, "D must map displacement to pressure space");
    expect(norm_V.rows() == n_u && norm_V.cols() == n_u, "V-norm matrix size");
    expect(norm_H.rows() == n_p && norm_H.cols() == n_p, "H-norm matrix size");
    expect(norm_Q.rows() == n_p && norm_Q.cols() == n_p, "Q-norm matrix size");
    expect(u0.size() == n_u && p0.size() == n_p, "initial data size");
}

void project_consistent_initial(CoupledSystem& sys) {
    Vector rhs = sys.D.apply_transpose(sys.p0);
    axpy(1.0, sys.f(0.0), rhs);
    sys.u0 = LinearSolver(sys.A).solve(rhs);
}

void compute_elastic_constants(CoupledSystem& sys) {
    const auto [lo, hi] = generalized_extreme_eigenvalues(sys.A.to_dense(), sys.norm_V.to_dense());
    sys.constants.c_a = lo;
    sys.constants.C_a = hi;
}

std::pair<Vector, Vector> residual_coupled(const CoupledSystem& sys, std::span<const double> u,
                                           std::span<const double> p, std::span<const double> du,
                                           std::span<const double> dp, double t) {
    if (u.size() != sys.nu() || du.size() != sys.nu() || p.size() != sys.np() || dp.size() != sys.np()) {
        throw Error(ErrorCode::DimensionMismatch, "residual_coupled: state sizes do not match the system");
    }
    Vector r_u = sys.A.apply(u);
    axpy(-1.0, sys.D.apply_transpose(p), r_u);
    axpy(-1.0, sys.f(t), r_u);

    Vector r_p = sys.D.apply(du);
    axpy(1.0, sys.C.apply(dp), r_p);
    axpy(1.0, sys.B.apply(p), r_p);
    axpy(-1.0, sys.g(t), r_p);
    return {std::move(r_u), std::move(r_p)};
}

// ---------------------------------------------------------------------------
// Toy problems
// ---------------------------------------------------------------------------

Vector toy_coupling_row() { return {2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0}; }

SparseMatrix toy_elastic_block() {
    const double s = 1.0 / (2.0 - std::numbers::sqrt2);
    return SparseMatrix::from_triplets(3, 3,
                                       {{0, 0, 2 * s}, {0, 1, -s}, {1, 0, -s}, {1, 1, 2 * s},
                                        {1, 2, -s}, {2, 1, -s}, {2, 2, 2 * s}},
                                       true);
}

CoupledSystem make_toy(double omega) {
    if (!(omega > 0.0)) throw Error(ErrorCode::InvalidParameter, "omega must be positive");
    CoupledSystem sys;
    sys.name = "toy";
    sys.A = toy_elastic_block();
    sys.B = SparseMatrix::identity(1);
    sys.C = SparseMatrix::identity(1);
    const Vector d0 = toy_coupling_row();
    const double sw = std::sqrt(omega);
    sys.D = SparseMatrix::from_triplets(1, 3, {{0, 0, sw * d0[0]}, {0, 1, sw * d0[1]}, {0, 2, sw * d0[2]}});
    sys.norm_V = SparseMatrix::identity(3);
    sys.norm_H = SparseMatrix::identity(1);
    sys.norm_Q = SparseMatrix::identity(1);
    sys.f = [](double) { return Vector{1.0, 1.0, 1.0}; };
    sys.g = [](double t) { return Vector{100.0 * std::sin(t)}; };
    sys.p0 = {0.0};
    project_consistent_initial(sys);

    compute_elastic_constants(sys);
    sys.constants.c_b = sys.constants.C_b = 1.0;
    sys.constants.c_c = sys.constants.C_c = 1.0;
    sys.constants.C_d = sw * norm2(d0);

    // m ṗ + p = 100 sin t with m = 1 + D A⁻¹ Dᵀ and p(0) = 0.
    const Vector dt = sys.D.apply_transpose(Vector{1.0});
    const Vector ainv_dt = solve_dense(sys.A.to_dense(), dt);
    const double m = 1.0 + dot(dt, ainv_dt);
    const double a = 100.0 / (1.0 + m * m);
    sys.exact_p = [a, m](double t) {
        return Vector{a * (std::sin(t) - m * std::cos(t)) + a * m * std::exp(-t / m)};
    };
    const Vector ainv_f = solve_dense(sys.A.to_dense(), Vector{1.0, 1.0, 1.0});
    sys.exact_u = [ainv_f, ainv_dt, p = sys.exact_p](double t) {
        Vector u = ainv_f;
        axpy(p(t)[0], ainv_dt, u);
        return u;
    };
    return sys;
}

SparseMatrix exchange_matrix(const std::vector<std::vector<double>>& betas) {
    const std::size_t J = betas.size();
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < J; ++i) {
        if (betas[i].size() != J) throw Error(ErrorCode::DimensionMismatch, "betas must be J x J");
        double diag = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            if (j == i) continue;
            diag += betas[i][j];
            t.push_back({i, j, -betas[i][j]});
        }
        t.push_back({i, i, diag});
    }
    return SparseMatrix::from_triplets(J, J, std::move(t));
}

CoupledSystem make_network_toy(const NetworkParameters& params) {
    const std::size_t J = params.networks();
    if (J < 2) throw Error(ErrorCode::InvalidParameter, "network toy needs at least two networks");
    if (params.Ms.size() != J || params.kappas.size() != J || params.betas.size() != J) {
        throw Error(ErrorCode::DimensionMismatch, "network parameter lists must all have length J");
    }
    auto positive = [](const std::vector<double>& v, const char* what) {
        for (double x : v)
            if (!(x > 0.0)) throw Error(ErrorCode::InvalidParameter, std::string(what) + " must be positive");
    };
    positive(params.alphas, "alpha");
    positive(params.Ms, "M");
    positive(params.kappas, "kappa");
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            if (i != j && !(params.betas[i][j] >= 0.0)) {
                throw Error(ErrorCode::InvalidParameter, "exchange rates must be non-negative");
            }
    Vector amplitudes = params.amplitudes.empty() ? Vector(J, 100.0) : params.amplitudes;
    if (amplitudes.size() != J) throw Error(ErrorCode::DimensionMismatch, "amplitudes must have length J");

    CoupledSystem sys;
    sys.name = "network";
    sys.A = toy_elastic_block();
    const Vector d0 = toy_coupling_row();
    std::vector<Triplet> dt;
    Vector inv_m(J), kappa(J);
    for (std::size_t i = 0; i < J; ++i) {
        for (std::size_t c = 0; c < 3; ++c) dt.push_back({i, c, params.alphas[i] * d0[c]});
        inv_m[i] = 1.0 / params.Ms[i];
        kappa[i] = params.kappas[i];
    }
    sys.D = SparseMatrix::from_triplets(J, 3, std::move(dt));
    sys.C = SparseMatrix::diagonal(inv_m);
    const SparseMatrix E = exchange_matrix(params.betas);
    const SparseMatrix Bm = linear_combination(1.0, SparseMatrix::diagonal(kappa), 1.0, E);
    sys.B = Bm.is_symmetric() ? Bm.marked_symmetric() : Bm;
    sys.norm_V = SparseMatrix::identity(3);
    sys.norm_H = SparseMatrix::identity(J);
    sys.norm_Q = SparseMatrix::identity(J);
    sys.f = [](double) { return Vector{1.0, 1.0, 1.0}; };
    sys.g = [amplitudes](double t) { return scaled(std::sin(t), amplitudes); };
    sys.p0.assign(J, 0.0);
    project_consistent_initial(sys);

    compute_elastic_constants(sys);
    sys.constants.c_c = 1.0 / *std::max_element(params.Ms.begin(), params.Ms.end());
    sys.constants.C_c = 1.0 / *std::min_element(params.Ms.begin(), params.Ms.end());
    DenseMatrix bsym = sys.B.to_dense();
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = i + 1; j < J; ++j) {
            const double avg = 0.5 * (bsym(i, j) + bsym(j, i));
            bsym(i, j) = bsym(j, i) = avg;
        }
    const Vector bev = symmetric_eigenvalues(bsym);
    sys.constants.c_b = bev.front();
    sys.constants.C_b = bev.back();
    sys.constants.C_d = norm2(params.alphas) * norm2(d0);
    return sys;
}

}  // namespace porosplit
