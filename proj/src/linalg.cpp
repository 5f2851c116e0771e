#include "porosplit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "porosplit/error.hpp"

namespace porosplit {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_size(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require_same_size(x.size(), y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector add(std::span<const double> a, std::span<const double> b) {
    require_same_size(a.size(), b.size(), "add");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
    require_same_size(a.size(), b.size(), "subtract");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vector scaled(double alpha, std::span<const double> a) {
    Vector r(a.begin(), a.end());
    for (double& v : r) v *= alpha;
    return r;
}

Vector concat(std::span<const double> a, std::span<const double> b) {
    Vector r;
    r.reserve(a.size() + b.size());
    r.insert(r.end(), a.begin(), a.end());
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

// ---------------------------------------------------------------------------
// DenseMatrix
// ---------------------------------------------------------------------------

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    require_same_size(data_.size(), rows * cols, "DenseMatrix entries");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector DenseMatrix::apply(std::span<const double> x) const {
    require_same_size(x.size(), cols_, "DenseMatrix::apply");
    Vector y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += data_[i * cols_ + j] * x[j];
        y[i] = s;
    }
    return y;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_size(a.cols(), b.rows(), "multiply");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double ail = a(i, l);
            if (ail == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += ail * b(l, j);
        }
    return c;
}

// ---------------------------------------------------------------------------
// LU
// ---------------------------------------------------------------------------

LuFactorization::LuFactorization(DenseMatrix m) : lu_(std::move(m)) {
    const std::size_t n = lu_.rows();
    require_same_size(n, lu_.cols(), "LU of non-square matrix");
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});

    // Row scales of the original matrix for the relative pivot threshold.
    std::vector<double> row_scale(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) row_scale[i] = norm_inf(lu_.row(i));

    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        double best = std::abs(lu_(c, c));
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(lu_(r, c)) > best) {
                best = std::abs(lu_(r, c));
                piv = r;
            }
        }
        if (best == 0.0 || best < 1e-12 * row_scale[perm_[piv]]) {
            throw Error(ErrorCode::SingularMatrix, "pivot " + std::to_string(c) + " below threshold");
        }
        if (piv != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(c, j), lu_(piv, j));
            std::swap(perm_[c], perm_[piv]);
        }
        const double d = lu_(c, c);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = lu_(r, c) / d;
            lu_(r, c) = f;
            if (f == 0.0) continue;
            for (std::size_t j = c + 1; j < n; ++j) lu_(r, j) -= f * lu_(c, j);
        }
    }
}

Vector LuFactorization::solve(std::span<const double> rhs) const {
    const std::size_t n = lu_.rows();
    require_same_size(rhs.size(), n, "LU solve");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = rhs[perm_[i]];
        for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
        x[i] = s / lu_(i, i);
    }
    return x;
}

Vector solve_dense(const DenseMatrix& m, std::span<const double> rhs) {
    require_same_size(m.rows(), m.cols(), "solve_dense of non-square matrix");
    require_same_size(rhs.size(), m.rows(), "solve_dense rhs");
    return LuFactorization(m).solve(rhs);
}

DenseMatrix cholesky(const DenseMatrix& m) {
    const std::size_t n = m.rows();
    require_same_size(n, m.cols(), "cholesky");
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = m(j, j);
        for (std::size_t p = 0; p < j; ++p) d -= l(j, p) * l(j, p);
        if (!(d > 1e-14 * std::abs(m(j, j)))) {
            throw Error(ErrorCode::SingularMatrix, "cholesky: matrix not positive definite");
        }
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

Vector symmetric_eigenvalues(const DenseMatrix& m) {
    const std::size_t n = m.rows();
    require_same_size(n, m.cols(), "symmetric_eigenvalues");
    DenseMatrix a = m;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                total += a(i, j) * a(i, j);
                if (i != j) off += a(i, j) * a(i, j);
            }
        if (off <= 1e-30 * total) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
    }
    Vector ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

std::pair<double, double> generalized_extreme_eigenvalues(const DenseMatrix& a,
                                                          const DenseMatrix& m) {
    const std::size_t n = a.rows();
    require_same_size(n, m.rows(), "generalized eigenproblem");
    const DenseMatrix l = cholesky(m);
    // Form L^{-1} A L^{-T} column by column with triangular solves.
    auto lower_solve = [&](std::span<const double> b) {
        Vector x(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[i];
            for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * x[j];
            x[i] = s / l(i, i);
        }
        return x;
    };
    DenseMatrix w(n, n);  // W = L^{-1} A, stored row-major
    const DenseMatrix at = a.transpose();
    for (std::size_t j = 0; j < n; ++j) {
        const Vector col = lower_solve(at.row(j));
        for (std::size_t i = 0; i < n; ++i) w(i, j) = col[i];
    }
    DenseMatrix s(n, n);  // S = W L^{-T} = (L^{-1} W^T)^T
    for (std::size_t i = 0; i < n; ++i) {
        const Vector col = lower_solve(w.row(i));
        for (std::size_t j = 0; j < n; ++j) s(i, j) = col[j];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (s(i, j) + s(j, i));
            s(i, j) = avg;
            s(j, i) = avg;
        }
    const Vector ev = symmetric_eigenvalues(s);
    return {ev.front(), ev.back()};
}

DenseMatrix orthogonal_factor(const DenseMatrix& m) {
    const std::size_t n = m.rows();
    require_same_size(n, m.cols(), "orthogonal_factor");
    DenseMatrix r = m;
    DenseMatrix q = DenseMatrix::identity(n);
    Vector v(n);
    for (std::size_t c = 0; c + 1 < n; ++c) {
        double alpha = 0.0;
        for (std::size_t i = c; i < n; ++i) alpha += r(i, c) * r(i, c);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (r(c, c) > 0) alpha = -alpha;
        std::fill(v.begin(), v.end(), 0.0);
        for (std::size_t i = c; i < n; ++i) v[i] = r(i, c);
        v[c] -= alpha;
        const double vv = dot(v, v);
        if (vv == 0.0) continue;
        // r <- (I - 2vv^T/vv) r,  q <- q (I - 2vv^T/vv)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = c; i < n; ++i) s += v[i] * r(i, j);
            s *= 2.0 / vv;
            for (std::size_t i = c; i < n; ++i) r(i, j) -= s * v[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = c; j < n; ++j) s += q(i, j) * v[j];
            s *= 2.0 / vv;
            for (std::size_t j = c; j < n; ++j) q(i, j) -= s * v[j];
        }
    }
    return q;
}

// ---------------------------------------------------------------------------
// SparseMatrix
// ---------------------------------------------------------------------------

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
                           std::vector<std::size_t> indices, std::vector<double> values,
                           bool symmetric)
    : rows_(rows),
      cols_(cols),
      offsets_(std::move(offsets)),
      indices_(std::move(indices)),
      values_(std::move(values)),
      symmetric_(symmetric) {
    require_same_size(offsets_.size(), rows_ + 1, "CSR offsets");
    require_same_size(indices_.size(), values_.size(), "CSR indices/values");
    if (offsets_.front() != 0 || offsets_.back() != indices_.size()) {
        throw Error(ErrorCode::InvalidParameter, "CSR offsets do not span the index array");
    }
    for (std::size_t i = 0; i < rows_; ++i) {
        if (offsets_[i] > offsets_[i + 1]) {
            throw Error(ErrorCode::InvalidParameter, "CSR offsets not monotone");
        }
        for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) {
            if (indices_[p] >= cols_ || (p > offsets_[i] && indices_[p] <= indices_[p - 1])) {
                throw Error(ErrorCode::InvalidParameter,
                            "CSR column indices not strictly increasing in row " + std::to_string(i));
            }
        }
    }
    if (symmetric_ && !is_symmetric()) {
        throw Error(ErrorCode::NotSymmetric, "matrix flagged symmetric fails value check");
    }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets, bool symmetric) {
    for (const auto& t : triplets) {
        if (t.row >= rows || t.col >= cols) {
            throw Error(ErrorCode::DimensionMismatch, "triplet outside matrix bounds");
        }
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> offsets(rows + 1, 0);
    std::vector<std::size_t> indices;
    std::vector<double> values;
    indices.reserve(triplets.size());
    values.reserve(triplets.size());
    for (std::size_t p = 0; p < triplets.size(); ++p) {
        const auto& t = triplets[p];
        if (p > 0 && triplets[p - 1].row == t.row && triplets[p - 1].col == t.col) {
            values.back() += t.value;
            continue;
        }
        indices.push_back(t.col);
        values.push_back(t.value);
        ++offsets[t.row + 1];
    }
    for (std::size_t i = 0; i < rows; ++i) offsets[i + 1] += offsets[i];
    return SparseMatrix(rows, cols, std::move(offsets), std::move(indices), std::move(values),
                        symmetric);
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    const Vector ones(n, 1.0);
    return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> d) {
    const std::size_t n = d.size();
    std::vector<std::size_t> offsets(n + 1), indices(n);
    for (std::size_t i = 0; i < n; ++i) {
        offsets[i + 1] = i + 1;
        indices[i] = i;
    }
    return SparseMatrix(n, n, std::move(offsets), std::move(indices),
                        std::vector<double>(d.begin(), d.end()), true);
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& m, bool symmetric) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) t.push_back({i, j, m(i, j)});
    return from_triplets(m.rows(), m.cols(), std::move(t), symmetric);
}

SparseMatrix SparseMatrix::zero(std::size_t rows, std::size_t cols) {
    return SparseMatrix(rows, cols, std::vector<std::size_t>(rows + 1, 0), {}, {}, rows == cols);
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) throw Error(ErrorCode::DimensionMismatch, "entry out of range");
    const auto first = indices_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
    const auto last = indices_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - indices_.begin())];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    require_same_size(x.size(), cols_, "SparseMatrix::multiply input");
    require_same_size(y.size(), rows_, "SparseMatrix::multiply output");
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) s += values_[p] * x[indices_[p]];
        y[i] = s;
    }
}

Vector SparseMatrix::apply(std::span<const double> x) const {
    Vector y(rows_);
    multiply(x, y);
    return y;
}

Vector SparseMatrix::apply_transpose(std::span<const double> x) const {
    require_same_size(x.size(), rows_, "SparseMatrix::apply_transpose");
    Vector y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) y[indices_[p]] += values_[p] * x[i];
    return y;
}

SparseMatrix SparseMatrix::transpose() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) t.push_back({indices_[p], i, values_[p]});
    return from_triplets(cols_, rows_, std::move(t), symmetric_);
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix m(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) m(i, indices_[p]) = values_[p];
    return m;
}

Vector SparseMatrix::diagonal_entries() const {
    Vector d(std::min(rows_, cols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
}

SparseMatrix SparseMatrix::marked_symmetric() const {
    return SparseMatrix(rows_, cols_, offsets_, indices_, values_, true);
}

bool SparseMatrix::is_symmetric(double rel_tol) const {
    if (rows_ != cols_) return false;
    const double scale = norm_inf(values_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) {
            const std::size_t j = indices_[p];
            if (std::abs(values_[p] - at(j, i)) > rel_tol * scale) return false;
        }
    return true;
}

SparseMatrix linear_combination(double alpha, const SparseMatrix& a, double beta,
                                const SparseMatrix& b) {
    require_same_size(a.rows(), b.rows(), "linear_combination rows");
    require_same_size(a.cols(), b.cols(), "linear_combination cols");
    std::vector<Triplet> t;
    t.reserve(a.nnz() + b.nnz());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t p = a.offsets()[i]; p < a.offsets()[i + 1]; ++p)
            t.push_back({i, a.indices()[p], alpha * a.values()[p]});
        for (std::size_t p = b.offsets()[i]; p < b.offsets()[i + 1]; ++p)
            t.push_back({i, b.indices()[p], beta * b.values()[p]});
    }
    return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t),
                                       a.symmetric() && b.symmetric());
}

SparseMatrix block_matrix(const SparseMatrix& a, const SparseMatrix& b, const SparseMatrix& c,
                          const SparseMatrix& d) {
    require_same_size(a.rows(), b.rows(), "block_matrix top rows");
    require_same_size(c.rows(), d.rows(), "block_matrix bottom rows");
    require_same_size(a.cols(), c.cols(), "block_matrix left cols");
    require_same_size(b.cols(), d.cols(), "block_matrix right cols");
    const std::size_t r0 = a.rows(), c0 = a.cols();
    std::vector<Triplet> t;
    t.reserve(a.nnz() + b.nnz() + c.nnz() + d.nnz());
    auto put = [&t](const SparseMatrix& m, std::size_t ro, std::size_t co) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t p = m.offsets()[i]; p < m.offsets()[i + 1]; ++p)
                t.push_back({ro + i, co + m.indices()[p], m.values()[p]});
    };
    put(a, 0, 0);
    put(b, 0, c0);
    put(c, r0, 0);
    put(d, r0, c0);
    return SparseMatrix::from_triplets(r0 + c.rows(), c0 + b.cols(), std::move(t));
}

SparseMatrix block_diagonal(const SparseMatrix& a, const SparseMatrix& b) {
    SparseMatrix m = block_matrix(a, SparseMatrix::zero(a.rows(), b.cols()),
                                  SparseMatrix::zero(b.rows(), a.cols()), b);
    return a.symmetric() && b.symmetric() ? m.marked_symmetric() : m;
}

double weighted_norm_sq(const SparseMatrix& m, std::span<const double> x) {
    require_same_size(m.cols(), x.size(), "weighted_norm_sq");
    require_same_size(m.rows(), x.size(), "weighted_norm_sq");
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (x[i] == 0.0) continue;
        double r = 0.0;
        for (std::size_t p = m.offsets()[i]; p < m.offsets()[i + 1]; ++p)
            r += m.values()[p] * x[m.indices()[p]];
        s += x[i] * r;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Conjugate gradients
// ---------------------------------------------------------------------------

CgResult conjugate_gradient(const SparseMatrix& m, std::span<const double> rhs, double rel_tol,
                            const CgOptions& options) {
    const std::size_t n = m.rows();
    require_same_size(n, m.cols(), "CG on non-square matrix");
    require_same_size(rhs.size(), n, "CG rhs");

    CgResult res;
    res.x.assign(n, 0.0);
    const double bnorm = norm2(rhs);
    if (bnorm == 0.0) return res;

    Vector inv_diag;
    if (options.jacobi) {
        inv_diag = m.diagonal_entries();
        for (double& d : inv_diag) d = d != 0.0 ? 1.0 / d : 1.0;
    }
    auto precondition = [&](const Vector& r, Vector& z) {
        if (options.jacobi) {
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        } else {
            z = r;
        }
    };

    const std::size_t cap = options.max_iterations ? options.max_iterations : 10 * n;
    Vector r(rhs.begin(), rhs.end()), z(n), p(n), q(n);
    precondition(r, z);
    p = z;
    double rz = dot(r, z);
    double rnorm = bnorm;
    std::size_t it = 0;
    while (rnorm > rel_tol * bnorm && it < cap) {
        m.multiply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) {
            throw Error(ErrorCode::SolverFailure, "CG breakdown: operator not positive definite");
        }
        const double a = rz / pq;
        axpy(a, p, res.x);
        axpy(-a, q, r);
        precondition(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rnorm = norm2(r);
        ++it;
    }
    // Recompute the true residual to guard against recurrence drift.
    m.multiply(res.x, q);
    res.relative_residual = norm2(subtract(q, rhs)) / bnorm;
    res.iterations = it;
    return res;
}

CgResult conjugate_gradient(const LinearOperator& op, std::span<const double> rhs, double rel_tol,
                            std::size_t max_iterations) {
    const std::size_t n = rhs.size();
    CgResult res;
    res.x.assign(n, 0.0);
    const double bnorm = norm2(rhs);
    if (bnorm == 0.0) return res;
    const std::size_t cap = max_iterations ? max_iterations : 10 * n;
    Vector r(rhs.begin(), rhs.end()), p = r;
    double rr = dot(r, r);
    std::size_t it = 0;
    while (std::sqrt(rr) > rel_tol * bnorm && it < cap) {
        const Vector q = op(p);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) {
            throw Error(ErrorCode::SolverFailure, "CG breakdown: operator not positive definite");
        }
        const double a = rr / pq;
        axpy(a, p, res.x);
        axpy(-a, q, r);
        const double rr_new = dot(r, r);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        ++it;
    }
    res.relative_residual = norm2(subtract(op(res.x), rhs)) / bnorm;
    res.iterations = it;
    return res;
}

Vector solve_spd(const SparseMatrix& m, std::span<const double> rhs, double rel_tol,
                 const CgOptions& options) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
        throw Error(ErrorCode::InvalidParameter, "rel_tol must lie in (0, 1)");
    }
    if (!m.symmetric() && !m.is_symmetric()) {
        throw Error(ErrorCode::NotSymmetric, "solve_spd requires a symmetric matrix");
    }
    CgResult res = conjugate_gradient(m, rhs, rel_tol, options);
    if (res.relative_residual > rel_tol) {
        throw Error(ErrorCode::NotConverged,
                    "CG stopped after " + std::to_string(res.iterations) +
                        " iterations with relative residual " + std::to_string(res.relative_residual));
    }
    return std::move(res.x);
}

// ---------------------------------------------------------------------------
// LinearSolver
// ---------------------------------------------------------------------------

LinearSolver::LinearSolver(const SparseMatrix& m, const SolverOptions& options)
    : dim_(m.rows()), options_(options) {
    require_same_size(m.rows(), m.cols(), "LinearSolver of non-square matrix");
    if (dim_ <= options_.dense_threshold) {
        backend_.emplace<LuFactorization>(m.to_dense());
    } else {
        if (!m.is_symmetric()) {
            throw Error(ErrorCode::NotSymmetric, "iterative backend requires a symmetric operator");
        }
        backend_.emplace<SparseMatrix>(m);
    }
}

Vector LinearSolver::solve(std::span<const double> rhs) const {
    if (const auto* lu = std::get_if<LuFactorization>(&backend_)) return lu->solve(rhs);
    if (const auto* sp = std::get_if<SparseMatrix>(&backend_)) {
        return solve_spd(*sp, rhs, options_.cg_rel_tol, options_.cg);
    }
    throw Error(ErrorCode::SolverFailure, "LinearSolver used before construction");
}

}  // namespace porosplit
