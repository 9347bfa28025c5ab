#pragma once

// Small dense LP feasibility engine: positive vectors v with P_k v >= s 1.

#include <cstddef>
#include <optional>
#include <vector>

namespace permadde {

/// Row-major dense matrix in extended precision.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, long double fill = 0.0L)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    long double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    long double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    /// (P v)_i in extended precision.
    std::vector<long double> apply(const std::vector<double>& v) const;
    long double max_abs() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<long double> a_;
};

enum class LpStatus { feasible, infeasible, undecided };

struct LpResult {
    LpStatus status = LpStatus::undecided;
    std::vector<double> v;  // normalized to max component 1
    double slack = 0.0;     // min over constraints of (P_k v)_i
    std::size_t pivots = 0;
};

struct LpOptions {
    double epsilon = 1e-9;  // lower bound on every component of v
    std::size_t max_pivots = 0;  // 0: automatic cap
};

/// Maximizes s subject to P_k v >= s 1 for every k and epsilon <= v_i <= 1,
/// by a dense two-phase simplex with Bland's rule. Status is feasible when the
/// optimal s is nonnegative (up to rounding of the input scale), infeasible
/// otherwise, undecided when the pivot cap is hit.
LpResult lp_max_slack(const std::vector<DenseMatrix>& rows, std::size_t n, const LpOptions& opts = {});

/// Same as lp_max_slack but returns the witness only when feasible.
std::optional<LpResult> lp_feasible_v(const std::vector<DenseMatrix>& rows, std::size_t n,
                                      const LpOptions& opts = {});

struct MMatrixWitness {
    std::vector<double> v;
    std::vector<double> u;  // N v > 0
};

/// Positive v with N v > 0 for a matrix with nonpositive off-diagonal entries
/// (ModelError otherwise); nullopt if N is not a non-singular M-matrix.
std::optional<MMatrixWitness> mmatrix_witness(const DenseMatrix& N);

}  // namespace permadde
