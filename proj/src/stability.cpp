#include "porosplit/stability.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "porosplit/bdf.hpp"
#include "porosplit/error.hpp"

namespace porosplit::stability {

namespace {

using cplx = std::complex<double>;

/// Uniform in [0, 1) from the top 53 bits, independent of the standard
/// library's distribution implementation.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Boundary samples ζ_j and ξ(ζ_j), shared by all η evaluations.
struct BoundarySamples {
    std::vector<cplx> zeta;
    std::vector<cplx> xi;
};

BoundarySamples boundary_samples(int k, std::size_t samples) {
    const auto c = coefficients(k);
    BoundarySamples b;
    b.zeta.resize(samples);
    b.xi.resize(samples);
    for (std::size_t j = 0; j < samples; ++j) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(samples);
        const cplx z = std::polar(1.0, theta);
        cplx acc = 0.0;  // Horner in ζ
        for (std::size_t l = c.size(); l-- > 0;) acc = acc * z + c[l];
        b.zeta[j] = z;
        b.xi[j] = acc;
    }
    return b;
}

double criterion_on(const BoundarySamples& b, double eta) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.zeta.size(); ++j) m = std::min(m, (b.xi[j] / (1.0 - eta * b.zeta[j])).real());
    return m;
}

}  // namespace

double criterion_min(int k, double eta, std::size_t samples) {
    if (samples == 0) throw Error(ErrorCode::InvalidParameter, "samples must be positive");
    if (!(eta >= 0.0 && eta < 1.0)) throw Error(ErrorCode::InvalidParameter, "eta must lie in [0, 1)");
    return criterion_on(boundary_samples(k, samples), eta);
}

MultiplierCertificate find_multiplier(int k, std::size_t samples) {
    const auto b = boundary_samples(k, samples);
    constexpr double kFeasible = -1e-12;
    constexpr int kFinePerCoarse = 100;  // 1e-2 / 1e-4

    int coarse = -1;
    for (int i = 0; i < 100; ++i) {
        if (criterion_on(b, i * 1e-2) >= kFeasible) {
            coarse = i;
            break;
        }
    }
    if (coarse < 0) {
        throw Error(ErrorCode::NotFound, "no multiplier below 1 for BDF-" + std::to_string(k));
    }
    int fine = coarse * kFinePerCoarse;
    for (int i = std::max(0, (coarse - 1) * kFinePerCoarse + 1); i <= coarse * kFinePerCoarse; ++i) {
        if (criterion_on(b, i * 1e-4) >= kFeasible) {
            fine = i;
            break;
        }
    }
    MultiplierCertificate cert;
    cert.k = k;
    cert.eta = fine * 1e-4;
    cert.min_real_part = criterion_on(b, cert.eta);
    cert.sample_count = samples;
    return cert;
}

GStabilityData GStabilityData::reference(int k) {
    GStabilityData d;
    d.k = k;
    d.eta = 0.0;
    if (k == 1) {
        d.G = DenseMatrix(1, 1, {0.5});
        d.gamma_vec = {1.0 / std::numbers::sqrt2, -1.0 / std::numbers::sqrt2};
    } else if (k == 2) {
        d.G = DenseMatrix(2, 2, {1.25, -0.5, -0.5, 0.25});
        d.gamma_vec = {0.5, -1.0, 0.5};
    } else {
        throw Error(ErrorCode::UnsupportedOrder, "G matrices are only available for k = 1, 2");
    }
    return d;
}

IdentitySides identity_sides(const GStabilityData& data, const DenseMatrix& m,
                             const std::vector<Vector>& seq, double tau) {
    const auto k = static_cast<std::size_t>(data.k);
    if (seq.size() != k + 1) throw Error(ErrorCode::IncompleteHistory, "sequence must hold k + 1 states");
    const auto xi = coefficients(data.k);
    const std::size_t n = m.rows();

    auto inner = [&](const Vector& a, const Vector& b) { return dot(a, m.apply(b)); };

    // τ ∂_τ y^n = Σ ξ_ℓ y^{n−ℓ}, formed through the scaled operator.
    Vector bdf(n, 0.0);
    for (std::size_t l = 0; l <= k; ++l) axpy(xi[l] / tau, seq[l], bdf);
    for (double& v : bdf) v *= tau;
    Vector tested = seq[0];
    if (k >= 1) axpy(-data.eta, seq[1], tested);
    const double lhs = inner(bdf, tested);

    auto g_norm = [&](std::size_t offset) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) s += data.G(i, j) * inner(seq[offset + i], seq[offset + j]);
        return s;
    };
    const double g_new = g_norm(0);
    const double g_old = g_norm(1);
    Vector comb(n, 0.0);
    for (std::size_t l = 0; l <= k; ++l) axpy(data.gamma_vec[l], seq[l], comb);
    const double tail = inner(comb, comb);

    IdentitySides s;
    s.lhs = lhs;
    s.rhs = g_new - g_old + tail;
    s.scale = std::max({std::abs(lhs), std::abs(g_new), std::abs(g_old), std::abs(tail)});
    return s;
}

IdentityResidual verify_identity(const GStabilityData& data, std::size_t trials, std::size_t dim,
                                 std::uint64_t seed, double tau, double sequence_scale) {
    if (dim == 0) throw Error(ErrorCode::InvalidParameter, "dim must be positive");
    IdentityResidual r;
    for (std::size_t t = 0; t < trials; ++t) {
        std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(ss);

        DenseMatrix raw(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) raw(i, j) = 2.0 * uniform01(rng) - 1.0;
        const DenseMatrix q = orthogonal_factor(raw);
        DenseMatrix lam(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) lam(i, i) = 0.1 + 9.9 * uniform01(rng);
        DenseMatrix m = multiply(q.transpose(), multiply(lam, q));
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i + 1; j < dim; ++j) {
                const double avg = 0.5 * (m(i, j) + m(j, i));
                m(i, j) = avg;
                m(j, i) = avg;
            }

        std::vector<Vector> seq(static_cast<std::size_t>(data.k) + 1, Vector(dim));
        for (auto& y : seq)
            for (double& v : y) v = sequence_scale * (2.0 * uniform01(rng) - 1.0);

        const IdentitySides s = identity_sides(data, m, seq, tau);
        const double abs_res = std::abs(s.lhs - s.rhs);
        r.max_absolute = std::max(r.max_absolute, abs_res);
        if (s.scale > 0.0) r.max_relative = std::max(r.max_relative, abs_res / s.scale);
    }
    return r;
}

}  // namespace porosplit::stability
