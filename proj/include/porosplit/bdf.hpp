#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "porosplit/linalg.hpp"

namespace porosplit {

inline constexpr int kMaxBdfOrder = 5;

/// Exact rational number with a positive denominator, always reduced.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    [[nodiscard]] double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

[[nodiscard]] Rational make_rational(std::int64_t num, std::int64_t den);
[[nodiscard]] Rational operator+(Rational a, Rational b);
[[nodiscard]] Rational operator*(Rational a, Rational b);

/// Coefficients ξ_0..ξ_k from expanding ξ(s) = Σ_{ℓ=1..k} (1−s)^ℓ/ℓ in powers
/// of s. Throws UnsupportedOrder outside 1..5.
[[nodiscard]] std::vector<Rational> polynomial_coefficients(int k);

/// Hard-coded reference table of the same coefficients.
[[nodiscard]] std::vector<Rational> tabulated_coefficients(int k);

/// ξ_0..ξ_k as doubles. The polynomial expansion is checked against the
/// table on every call.
[[nodiscard]] std::vector<double> coefficients(int k);

/// BDF-k coefficients and multiplier.
struct BdfScheme {
    int k = 1;
    std::vector<double> xi;
    /// Nevanlinna–Odeh multiplier; 0 for k <= 2, numerically searched for k >= 3.
    double eta = 0.0;

    /// Builds the scheme. For k >= 3 the multiplier comes from a cached
    /// stability search (first call takes a moment).
    [[nodiscard]] static BdfScheme make(int k);
    /// Same as make() but skips the multiplier search (eta left at 0).
    [[nodiscard]] static BdfScheme without_multiplier(int k);

    [[nodiscard]] double xi0() const noexcept { return xi.front(); }
};

/// Most recent accepted states, newest first: at(0) = y^{n-1}, at(k-1) = y^{n-k}.
class History {
public:
    explicit History(std::size_t capacity = 1) : capacity_(capacity) {}

    void push(Vector y);
    void clear() { ring_.clear(); }

    [[nodiscard]] const Vector& at(std::size_t lag) const;
    [[nodiscard]] std::size_t size() const noexcept { return ring_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] bool complete() const noexcept { return ring_.size() == capacity_; }
    /// Keeps the newest entries and changes the capacity (used when a
    /// bootstrap moves to a higher order).
    void set_capacity(std::size_t capacity);

private:
    std::size_t capacity_;
    std::deque<Vector> ring_;
};

/// Σ_{ℓ=1..k} ξ_ℓ y^{n−ℓ}. Throws IncompleteHistory or DimensionMismatch.
[[nodiscard]] Vector history_sum(const BdfScheme& scheme, const History& hist);

/// (1/τ) Σ_{ℓ=0..k} ξ_ℓ y^{n−ℓ} with y^n = newest.
[[nodiscard]] Vector apply_bdf(const BdfScheme& scheme, double tau, std::span<const double> newest,
                               const History& hist);

/// |(1/τ) Σ ξ_ℓ f(t−ℓτ) − f′(t)|.
[[nodiscard]] double defect_order_probe(const BdfScheme& scheme, double tau,
                                        const std::function<double(double)>& f,
                                        const std::function<double(double)>& df, double t);

}  // namespace porosplit
