#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "porosplit/linalg.hpp"

namespace porosplit::stability {

/// Result of the multiplier search for one order.
struct MultiplierCertificate {
    int k = 0;
    double eta = 0.0;
    /// Smallest sampled Re(ξ(ζ)/(1−ηζ)) over |ζ| = 1.
    double min_real_part = 0.0;
    std::size_t sample_count = 0;

    [[nodiscard]] bool valid() const noexcept { return min_real_part >= -1e-12; }
};

/// Multiplier, G matrix and γ vector of the tested quadratic-form identity
///   <Σ ξ_ℓ y^{n−ℓ}, M(y^n − η y^{n−1})>
///     = |Y^n|²_{G⊗M} − |Y^{n−1}|²_{G⊗M} + ‖Σ γ_{ℓ+1} y^{n−ℓ}‖²_M,
/// with Y^n = (y^n, ..., y^{n+1−k}).
struct GStabilityData {
    int k = 1;
    DenseMatrix G;
    Vector gamma_vec;
    double eta = 0.0;

    /// Known data for k = 1 and k = 2. For k = 2 the γ vector is
    /// [1/2, −1, 1/2]; the variant [1/2, 1, 1/2] does not satisfy the identity.
    [[nodiscard]] static GStabilityData reference(int k);
};

/// min over θ_j = 2πj/samples of Re(ξ(e^{iθ})/(1−η e^{iθ})).
[[nodiscard]] double criterion_min(int k, double eta, std::size_t samples);

/// Smallest η on a 1e-4 grid with criterion_min(k, η, 1e5) >= −1e-12, located
/// by a 1e-2 coarse pass followed by a 1e-4 refinement. Throws NotFound.
[[nodiscard]] MultiplierCertificate find_multiplier(int k, std::size_t samples = 100000);

struct IdentityResidual {
    double max_absolute = 0.0;
    /// max |lhs − rhs| / scale, with scale the largest magnitude among the terms.
    double max_relative = 0.0;
};

/// Random SPD M of size dim (QᵀΛQ, Λ uniform in [0.1, 10]) and random
/// sequences y^{n−k}..y^n; evaluates both sides of the identity with step
/// size tau. Deterministic for a given seed.
[[nodiscard]] IdentityResidual verify_identity(const GStabilityData& data, std::size_t trials,
                                               std::size_t dim, std::uint64_t seed = 1,
                                               double tau = 1.0, double sequence_scale = 1.0);

/// Evaluates both sides for a given M and sequence (seq[0] = y^n, seq[ℓ] = y^{n−ℓ}).
/// Returns {lhs, rhs, scale}.
struct IdentitySides {
    double lhs = 0.0;
    double rhs = 0.0;
    double scale = 0.0;
};
[[nodiscard]] IdentitySides identity_sides(const GStabilityData& data, const DenseMatrix& m,
                                           const std::vector<Vector>& seq, double tau = 1.0);

}  // namespace porosplit::stability
