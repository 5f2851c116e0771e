#include "porosplit/bdf.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <numeric>
#include <string>

#include "porosplit/error.hpp"
#include "porosplit/stability.hpp"

namespace porosplit {

namespace {

void check_order(int k) {
    if (k < 1 || k > kMaxBdfOrder) {
        throw Error(ErrorCode::UnsupportedOrder,
                    "BDF order " + std::to_string(k) + " outside 1.." + std::to_string(kMaxBdfOrder));
    }
}

std::int64_t binomial(int n, int r) {
    std::int64_t b = 1;
    for (int i = 1; i <= r; ++i) b = b * (n - r + i) / i;
    return b;
}

}  // namespace

Rational make_rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error(ErrorCode::InvalidParameter, "zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    return {num / (g ? g : 1), den / (g ? g : 1)};
}

Rational operator+(Rational a, Rational b) {
    return make_rational(a.num * b.den + b.num * a.den, a.den * b.den);
}

Rational operator*(Rational a, Rational b) { return make_rational(a.num * b.num, a.den * b.den); }

std::vector<Rational> polynomial_coefficients(int k) {
    check_order(k);
    // (1−s)^ℓ/ℓ contributes (−1)^j C(ℓ, j)/ℓ to the s^j coefficient.
    std::vector<Rational> xi(static_cast<std::size_t>(k) + 1, Rational{0, 1});
    for (int l = 1; l <= k; ++l)
        for (int j = 0; j <= l; ++j) {
            const std::int64_t sign = (j % 2 == 0) ? 1 : -1;
            xi[static_cast<std::size_t>(j)] = xi[static_cast<std::size_t>(j)] + make_rational(sign * binomial(l, j), l);
        }
    return xi;
}

std::vector<Rational> tabulated_coefficients(int k) {
    check_order(k);
    static const std::array<std::vector<Rational>, 5> table = {{
        {{1, 1}, {-1, 1}},
        {{3, 2}, {-2, 1}, {1, 2}},
        {{11, 6}, {-3, 1}, {3, 2}, {-1, 3}},
        {{25, 12}, {-4, 1}, {3, 1}, {-4, 3}, {1, 4}},
        {{137, 60}, {-5, 1}, {5, 1}, {-10, 3}, {5, 4}, {-1, 5}},
    }};
    return table[static_cast<std::size_t>(k - 1)];
}

std::vector<double> coefficients(int k) {
    const auto poly = polynomial_coefficients(k);
    if (poly != tabulated_coefficients(k)) {
        throw Error(ErrorCode::ValidationError,
                    "BDF-" + std::to_string(k) + " expansion disagrees with the coefficient table");
    }
    std::vector<double> xi;
    xi.reserve(poly.size());
    for (const auto& r : poly) xi.push_back(r.value());
    return xi;
}

BdfScheme BdfScheme::without_multiplier(int k) {
    BdfScheme s;
    s.k = k;
    s.xi = coefficients(k);
    s.eta = 0.0;
    return s;
}

BdfScheme BdfScheme::make(int k) {
    BdfScheme s = without_multiplier(k);
    if (k >= 3) {
        static std::array<std::once_flag, kMaxBdfOrder + 1> flags;
        static std::array<double, kMaxBdfOrder + 1> cache{};
        const auto idx = static_cast<std::size_t>(k);
        std::call_once(flags[idx], [&] { cache[idx] = stability::find_multiplier(k).eta; });
        s.eta = cache[idx];
    }
    return s;
}

// ---------------------------------------------------------------------------
// History
// ---------------------------------------------------------------------------

void History::push(Vector y) {
    if (!ring_.empty() && ring_.front().size() != y.size()) {
        throw Error(ErrorCode::DimensionMismatch, "history entry dimension changed");
    }
    ring_.push_front(std::move(y));
    while (ring_.size() > capacity_) ring_.pop_back();
}

const Vector& History::at(std::size_t lag) const {
    if (lag >= ring_.size()) {
        throw Error(ErrorCode::IncompleteHistory,
                    "lag " + std::to_string(lag + 1) + " requested, " + std::to_string(ring_.size()) +
                        " stored");
    }
    return ring_[lag];
}

void History::set_capacity(std::size_t capacity) {
    capacity_ = capacity;
    while (ring_.size() > capacity_) ring_.pop_back();
}

Vector history_sum(const BdfScheme& scheme, const History& hist) {
    const auto k = static_cast<std::size_t>(scheme.k);
    if (hist.size() < k) {
        throw Error(ErrorCode::IncompleteHistory, "BDF-" + std::to_string(scheme.k) + " needs " +
                                                      std::to_string(k) + " past states, have " +
                                                      std::to_string(hist.size()));
    }
    Vector s(hist.at(0).size(), 0.0);
    for (std::size_t l = 1; l <= k; ++l) axpy(scheme.xi[l], hist.at(l - 1), s);
    return s;
}

Vector apply_bdf(const BdfScheme& scheme, double tau, std::span<const double> newest,
                 const History& hist) {
    if (!(tau > 0.0)) throw Error(ErrorCode::InvalidParameter, "tau must be positive");
    Vector s = history_sum(scheme, hist);
    if (s.size() != newest.size()) {
        throw Error(ErrorCode::DimensionMismatch, "newest state does not match history dimension");
    }
    axpy(scheme.xi0(), newest, s);
    for (double& v : s) v /= tau;
    return s;
}

double defect_order_probe(const BdfScheme& scheme, double tau,
                          const std::function<double(double)>& f,
                          const std::function<double(double)>& df, double t) {
    double s = 0.0;
    for (int l = 0; l <= scheme.k; ++l) s += scheme.xi[static_cast<std::size_t>(l)] * f(t - l * tau);
    return std::abs(s / tau - df(t));
}

}  // namespace porosplit
