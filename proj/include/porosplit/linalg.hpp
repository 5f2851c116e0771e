#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace porosplit {

using Vector = std::vector<double>;

// -----------------------------------------------------------------------------
// Vector helpers
// -----------------------------------------------------------------------------

[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double norm2(std::span<const double> a);
[[nodiscard]] double norm_inf(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

[[nodiscard]] Vector add(std::span<const double> a, std::span<const double> b);
[[nodiscard]] Vector subtract(std::span<const double> a, std::span<const double> b);
[[nodiscard]] Vector scaled(double alpha, std::span<const double> a);
[[nodiscard]] Vector concat(std::span<const double> a, std::span<const double> b);

// -----------------------------------------------------------------------------
// Dense matrices
// -----------------------------------------------------------------------------

/// Row-major dense matrix. Used for the toy operators, small reference
/// problems and as the direct-solver backend for moderate dimensions.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

    [[nodiscard]] static DenseMatrix identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    [[nodiscard]] double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return std::span<const double>(data_).subspan(i * cols_, cols_);
    }

    [[nodiscard]] Vector apply(std::span<const double> x) const;
    [[nodiscard]] DenseMatrix transpose() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

/// LU factorization with partial pivoting. A pivot whose magnitude falls below
/// 1e-12 times the largest entry of its original row is treated as singular.
class LuFactorization {
public:
    explicit LuFactorization(DenseMatrix m);

    [[nodiscard]] Vector solve(std::span<const double> rhs) const;
    [[nodiscard]] std::size_t dim() const noexcept { return lu_.rows(); }

private:
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
};

/// Solves m x = rhs by LU. Throws SingularMatrix or DimensionMismatch.
[[nodiscard]] Vector solve_dense(const DenseMatrix& m, std::span<const double> rhs);

/// Cholesky factor L (lower) with m = L L^T. Throws SingularMatrix when m is
/// not numerically positive definite.
[[nodiscard]] DenseMatrix cholesky(const DenseMatrix& m);

/// All eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
[[nodiscard]] Vector symmetric_eigenvalues(const DenseMatrix& m);

/// Smallest and largest generalized eigenvalue of a x = lambda m x for
/// symmetric a and SPD m.
[[nodiscard]] std::pair<double, double> generalized_extreme_eigenvalues(const DenseMatrix& a,
                                                                        const DenseMatrix& m);

/// Orthogonal factor Q of a Householder QR decomposition of a square matrix.
[[nodiscard]] DenseMatrix orthogonal_factor(const DenseMatrix& m);

// -----------------------------------------------------------------------------
// Sparse matrices
// -----------------------------------------------------------------------------

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing within
/// each row. The symmetric flag is a promise checked at construction.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
                 std::vector<std::size_t> indices, std::vector<double> values,
                 bool symmetric = false);

    /// Duplicate entries are summed; explicit zeros are kept.
    [[nodiscard]] static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                                    std::vector<Triplet> triplets,
                                                    bool symmetric = false);
    [[nodiscard]] static SparseMatrix identity(std::size_t n);
    [[nodiscard]] static SparseMatrix diagonal(std::span<const double> d);
    [[nodiscard]] static SparseMatrix from_dense(const DenseMatrix& m, bool symmetric = false);
    [[nodiscard]] static SparseMatrix zero(std::size_t rows, std::size_t cols);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return values_.size(); }
    [[nodiscard]] bool symmetric() const noexcept { return symmetric_; }

    [[nodiscard]] std::span<const std::size_t> offsets() const noexcept { return offsets_; }
    [[nodiscard]] std::span<const std::size_t> indices() const noexcept { return indices_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    /// Entry (i, j), zero when not stored.
    [[nodiscard]] double at(std::size_t i, std::size_t j) const;

    void multiply(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] Vector apply(std::span<const double> x) const;
    [[nodiscard]] Vector apply_transpose(std::span<const double> x) const;
    [[nodiscard]] SparseMatrix transpose() const;
    [[nodiscard]] DenseMatrix to_dense() const;
    [[nodiscard]] Vector diagonal_entries() const;

    /// Copy carrying the symmetric flag. Throws NotSymmetric when the values
    /// fail the check.
    [[nodiscard]] SparseMatrix marked_symmetric() const;

    /// Value-level symmetry check, |a_ij - a_ji| <= rel_tol * max|a|.
    [[nodiscard]] bool is_symmetric(double rel_tol = 1e-12) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::size_t> indices_;
    std::vector<double> values_;
    bool symmetric_ = false;
};

/// alpha * a + beta * b. The result is flagged symmetric when both inputs are.
[[nodiscard]] SparseMatrix linear_combination(double alpha, const SparseMatrix& a, double beta,
                                              const SparseMatrix& b);

/// Block matrix [[a, b], [c, d]]; empty blocks are given as zero-sized
/// matrices with matching dimensions.
[[nodiscard]] SparseMatrix block_matrix(const SparseMatrix& a, const SparseMatrix& b,
                                        const SparseMatrix& c, const SparseMatrix& d);

/// Block-diagonal assembly blockdiag(a, b).
[[nodiscard]] SparseMatrix block_diagonal(const SparseMatrix& a, const SparseMatrix& b);

/// x^T m x. Throws DimensionMismatch.
[[nodiscard]] double weighted_norm_sq(const SparseMatrix& m, std::span<const double> x);

// -----------------------------------------------------------------------------
// Conjugate gradients
// -----------------------------------------------------------------------------

struct CgOptions {
    /// 0 selects the default cap of 10 x dimension.
    std::size_t max_iterations = 0;
    bool jacobi = false;
};

struct CgResult {
    Vector x;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
};

[[nodiscard]] CgResult conjugate_gradient(const SparseMatrix& m, std::span<const double> rhs,
                                          double rel_tol, const CgOptions& options = {});

/// Matrix-free operator y = op(x) for CG.
using LinearOperator = std::function<Vector(std::span<const double>)>;

/// CG on an abstract SPD operator; max_iterations = 0 selects 10 x dimension.
[[nodiscard]] CgResult conjugate_gradient(const LinearOperator& op, std::span<const double> rhs,
                                          double rel_tol, std::size_t max_iterations = 0);

/// CG solve with ||m x - rhs|| <= rel_tol ||rhs||. Unflagged matrices are
/// accepted when their values are symmetric; otherwise throws NotSymmetric.
/// Throws NotConverged after the iteration cap.
[[nodiscard]] Vector solve_spd(const SparseMatrix& m, std::span<const double> rhs, double rel_tol,
                               const CgOptions& options = {});

// -----------------------------------------------------------------------------
// Reusable solver for a fixed operator
// -----------------------------------------------------------------------------

struct SolverOptions {
    /// Dense LU up to this dimension, CG above it.
    std::size_t dense_threshold = 2000;
    double cg_rel_tol = 1e-13;
    CgOptions cg{};
};

/// Factorizes (or prepares) a fixed operator once and solves many right-hand
/// sides. Above the dense threshold the operator must be SPD.
class LinearSolver {
public:
    LinearSolver() = default;
    LinearSolver(const SparseMatrix& m, const SolverOptions& options = {});

    [[nodiscard]] Vector solve(std::span<const double> rhs) const;
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] bool is_direct() const noexcept { return std::holds_alternative<LuFactorization>(backend_); }

private:
    std::size_t dim_ = 0;
    SolverOptions options_{};
    std::variant<std::monostate, LuFactorization, SparseMatrix> backend_;
};

}  // namespace porosplit
