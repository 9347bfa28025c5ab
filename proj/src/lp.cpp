#include "permadde/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "permadde/error.hpp"

namespace permadde {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0L;
    return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.front().size() : 0;
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        if (rows[i].size() != c) throw ModelError("DenseMatrix: ragged rows");
        for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

std::vector<long double> DenseMatrix::apply(const std::vector<double>& v) const {
    std::vector<long double> out(rows_, 0.0L);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out[i] += (*this)(i, j) * static_cast<long double>(v[j]);
    return out;
}

long double DenseMatrix::max_abs() const {
    long double m = 0.0L;
    for (long double x : a_) m = std::max(m, std::fabs(x));
    return m;
}

namespace {

using Real = long double;
constexpr Real kEps = 1e-15L;

// Tableau simplex for: maximize c x subject to A x <= b, x >= 0.
// Layout and phase handling follow the classic dense two-phase scheme; the
// pivoting rule is Bland's (smallest index) so that degenerate problems
// cannot cycle.
class Simplex {
public:
    Simplex(const std::vector<std::vector<Real>>& A, const std::vector<Real>& b, const std::vector<Real>& c,
            std::size_t max_pivots)
        : m_(b.size()), n_(c.size()), N_(n_ + 1), B_(m_), D_(m_ + 2, std::vector<Real>(n_ + 2)),
          max_pivots_(max_pivots) {
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = 0; j < n_; ++j) D_[i][j] = A[i][j];
        for (std::size_t i = 0; i < m_; ++i) {
            B_[i] = static_cast<long>(n_ + i);
            D_[i][n_] = -1;
            D_[i][n_ + 1] = b[i];
        }
        for (std::size_t j = 0; j < n_; ++j) {
            N_[j] = static_cast<long>(j);
            D_[m_][j] = -c[j];
        }
        N_[n_] = -1;
        D_[m_ + 1][n_] = 1;
    }

    enum class Outcome { optimal, infeasible, unbounded, capped };

    Outcome solve(std::vector<Real>& x, Real& value) {
        std::size_t r = 0;
        for (std::size_t i = 1; i < m_; ++i)
            if (D_[i][n_ + 1] < D_[r][n_ + 1]) r = i;
        if (m_ > 0 && D_[r][n_ + 1] < -kEps) {
            pivot(r, n_);
            const Outcome o = run(2);
            if (o == Outcome::capped) return o;
            if (o != Outcome::optimal || D_[m_ + 1][n_ + 1] < -kEps) return Outcome::infeasible;
            for (std::size_t i = 0; i < m_; ++i) {
                if (B_[i] != -1) continue;
                std::size_t s = 0;
                for (std::size_t j = 1; j <= n_; ++j)
                    if (better(D_[i][j], N_[j], D_[i][s], N_[s])) s = j;
                pivot(i, s);
            }
        }
        const Outcome o = run(1);
        x.assign(n_, 0.0L);
        for (std::size_t i = 0; i < m_; ++i)
            if (B_[i] >= 0 && static_cast<std::size_t>(B_[i]) < n_) x[static_cast<std::size_t>(B_[i])] = D_[i][n_ + 1];
        value = D_[m_][n_ + 1];
        return o;
    }

    std::size_t pivots() const noexcept { return pivots_; }

    /// Indices of the nonbasic variables (structural j < n, slack n + i).
    std::vector<long> nonbasic() const {
        std::vector<long> out;
        for (std::size_t j = 0; j < n_ + 1; ++j)
            if (N_[j] >= 0) out.push_back(N_[j]);
        return out;
    }

private:
    static bool better(Real a, long na, Real b, long nb) { return a < b || (a == b && na < nb); }

    void pivot(std::size_t r, std::size_t s) {
        ++pivots_;
        Real* a = D_[r].data();
        const Real inv = 1 / a[s];
        for (std::size_t i = 0; i < m_ + 2; ++i) {
            if (i == r || std::fabs(D_[i][s]) <= kEps) continue;
            Real* b = D_[i].data();
            const Real inv2 = b[s] * inv;
            for (std::size_t j = 0; j < n_ + 2; ++j) b[j] -= a[j] * inv2;
            b[s] = a[s] * inv2;
        }
        for (std::size_t j = 0; j < n_ + 2; ++j)
            if (j != s) D_[r][j] *= inv;
        for (std::size_t i = 0; i < m_ + 2; ++i)
            if (i != r) D_[i][s] *= -inv;
        D_[r][s] = inv;
        std::swap(B_[r], N_[s]);
    }

    Outcome run(int phase) {
        const std::size_t x = m_ + static_cast<std::size_t>(phase) - 1;
        for (;;) {
            if (pivots_ >= max_pivots_) return Outcome::capped;
            // Bland: entering column = smallest variable index with negative reduced cost.
            long s = -1;
            for (std::size_t j = 0; j <= n_; ++j) {
                if (N_[j] == -phase) continue;
                if (D_[x][j] < -kEps && (s == -1 || N_[j] < N_[static_cast<std::size_t>(s)])) s = static_cast<long>(j);
            }
            if (s == -1) return Outcome::optimal;
            const auto sc = static_cast<std::size_t>(s);
            long r = -1;
            for (std::size_t i = 0; i < m_; ++i) {
                if (D_[i][sc] <= kEps) continue;
                if (r == -1) {
                    r = static_cast<long>(i);
                    continue;
                }
                const auto rc = static_cast<std::size_t>(r);
                const Real lhs = D_[i][n_ + 1] / D_[i][sc];
                const Real rhs = D_[rc][n_ + 1] / D_[rc][sc];
                if (lhs < rhs || (lhs == rhs && B_[i] < B_[rc])) r = static_cast<long>(i);
            }
            if (r == -1) return Outcome::unbounded;
            pivot(static_cast<std::size_t>(r), sc);
        }
    }

    std::size_t m_, n_;
    std::vector<long> N_, B_;
    std::vector<std::vector<Real>> D_;
    std::size_t max_pivots_;
    std::size_t pivots_ = 0;
};

// Solves the square system M x = r by Gaussian elimination with partial pivoting.
std::optional<std::vector<Real>> solve_dense(std::vector<std::vector<Real>> M, std::vector<Real> r) {
    const std::size_t k = r.size();
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t p = c;
        for (std::size_t i = c + 1; i < k; ++i)
            if (std::fabs(M[i][c]) > std::fabs(M[p][c])) p = i;
        if (!(std::fabs(M[p][c]) > 0.0L)) return std::nullopt;
        std::swap(M[p], M[c]);
        std::swap(r[p], r[c]);
        for (std::size_t i = c + 1; i < k; ++i) {
            const Real f = M[i][c] / M[c][c];
            if (f == 0.0L) continue;
            for (std::size_t j = c; j < k; ++j) M[i][j] -= f * M[c][j];
            r[i] -= f * r[c];
        }
    }
    std::vector<Real> x(k);
    for (std::size_t c = k; c-- > 0;) {
        Real acc = r[c];
        for (std::size_t j = c + 1; j < k; ++j) acc -= M[c][j] * x[j];
        x[c] = acc / M[c][c];
    }
    return x;
}

}  // namespace

LpResult lp_max_slack(const std::vector<DenseMatrix>& rows, std::size_t n, const LpOptions& opts) {
    if (n == 0) throw ModelError("lp: dimension must be positive");
    const Real eps = opts.epsilon;
    // Variables: w_0..w_{n-1} (v = eps + w), s_plus, s_minus.
    std::vector<std::vector<Real>> A;
    std::vector<Real> b;
    std::vector<Real> B_norm;
    Real scale = 0.0L;
    for (const auto& P : rows) {
        if (P.cols() != n) throw ModelError("lp: constraint matrix has wrong width");
        scale = std::max(scale, P.max_abs());
        for (std::size_t i = 0; i < P.rows(); ++i) {
            Real norm = 1.0L;
            for (std::size_t j = 0; j < n; ++j) norm = std::max(norm, std::fabs(P(i, j)));
            std::vector<Real> row(n + 2);
            Real rhs = 0.0L;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = -P(i, j) / norm;
                rhs += P(i, j) * eps;
            }
            row[n] = 1.0L / norm;
            row[n + 1] = -1.0L / norm;
            A.push_back(std::move(row));
            b.push_back(rhs / norm);
            B_norm.push_back(norm);
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<Real> row(n + 2, 0.0L);
        row[j] = 1.0L;
        A.push_back(std::move(row));
        b.push_back(1.0L - eps);
        B_norm.push_back(1.0L);
    }
    std::vector<Real> c(n + 2, 0.0L);
    c[n] = 1.0L;
    c[n + 1] = -1.0L;

    const std::size_t cap = opts.max_pivots ? opts.max_pivots : 50 * (A.size() + n + 2) + 1000;
    Simplex lp(A, b, c, cap);
    std::vector<Real> x;
    Real value = 0.0L;
    const auto outcome = lp.solve(x, value);

    LpResult res;
    res.pivots = lp.pivots();
    if (outcome == Simplex::Outcome::capped || outcome == Simplex::Outcome::unbounded ||
        outcome == Simplex::Outcome::infeasible) {
        // The box and free slack make the LP always feasible and bounded, so any
        // other outcome means numerical trouble.
        res.status = LpStatus::undecided;
        return res;
    }
    auto to_v = [&](const std::vector<Real>& sol) {
        std::vector<double> v(n);
        double vmax = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            v[j] = static_cast<double>(eps + std::max<Real>(0.0L, sol[j]));
            vmax = std::max(vmax, v[j]);
        }
        for (double& vj : v) vj /= vmax;
        return v;
    };
    auto worst = [&](const std::vector<double>& v) {
        Real slack = std::numeric_limits<Real>::infinity();
        for (const auto& P : rows)
            for (Real r : P.apply(v)) slack = std::min(slack, r);
        return slack;
    };
    std::vector<double> v = to_v(x);
    Real slack = worst(v);

    // The tableau accumulates rounding when rows nearly cancel; re-solve the
    // final vertex from the tight constraints of the original rows.
    const auto nb = lp.nonbasic();
    if (nb.size() == n + 2) {
        std::vector<std::vector<Real>> M;
        std::vector<Real> r;
        for (long idx : nb) {
            const auto u = static_cast<std::size_t>(idx);
            std::vector<Real> row(n + 2, 0.0L);
            Real rhs = 0.0L;
            if (u < n + 2) {
                row[u] = 1.0L;
            } else {
                const std::size_t i = u - (n + 2);
                const Real norm = B_norm[i];
                for (std::size_t j = 0; j < n + 2; ++j) row[j] = A[i][j] * norm;
                rhs = b[i] * norm;
            }
            M.push_back(std::move(row));
            r.push_back(rhs);
        }
        if (auto polished = solve_dense(std::move(M), std::move(r))) {
            const std::vector<double> pv = to_v(*polished);
            const Real ps = worst(pv);
            if (ps > slack) {
                v = pv;
                slack = ps;
            }
        }
    }
    res.v = std::move(v);
    res.slack = static_cast<double>(slack);
    const Real tol = 64 * std::numeric_limits<Real>::epsilon() * std::max<Real>(1.0L, scale) * static_cast<Real>(n);
    res.status = slack >= -tol ? LpStatus::feasible : LpStatus::infeasible;
    return res;
}

std::optional<LpResult> lp_feasible_v(const std::vector<DenseMatrix>& rows, std::size_t n, const LpOptions& opts) {
    LpResult r = lp_max_slack(rows, n, opts);
    if (r.status != LpStatus::feasible) return std::nullopt;
    return r;
}

std::optional<MMatrixWitness> mmatrix_witness(const DenseMatrix& N) {
    if (N.rows() != N.cols()) throw ModelError("mmatrix_witness: matrix must be square");
    for (std::size_t i = 0; i < N.rows(); ++i)
        for (std::size_t j = 0; j < N.cols(); ++j)
            if (i != j && N(i, j) > 0.0L) throw ModelError("mmatrix_witness: off-diagonal entries must be nonpositive");
    const LpResult r = lp_max_slack({N}, N.rows());
    if (r.status != LpStatus::feasible || !(r.slack > 0.0)) return std::nullopt;
    const auto u = N.apply(r.v);
    MMatrixWitness w;
    w.v = r.v;
    for (long double x : u) w.u.push_back(static_cast<double>(x));
    return w;
}

}  // namespace permadde
