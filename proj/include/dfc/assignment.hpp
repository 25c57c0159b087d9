#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "dfc/errors.hpp"

namespace dfc {

// sigma[i] is the column (g index) matched with row i (f index).
struct Permutation {
    std::vector<Eigen::Index> sigma;

    static Permutation identity(Eigen::Index n) {
        Permutation p;
        p.sigma.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) p.sigma[static_cast<std::size_t>(i)] = i;
        return p;
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(sigma.size()); }

    bool is_identity() const {
        for (std::size_t i = 0; i < sigma.size(); ++i)
            if (sigma[i] != static_cast<Eigen::Index>(i)) return false;
        return true;
    }

    // P with P(sigma(i), i) = 1, so (P * A).row(sigma(i)) = A.row(i).
    Eigen::MatrixXcd matrix() const {
        const Eigen::Index n = size();
        Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) P(sigma[static_cast<std::size_t>(i)], i) = 1.0;
        return P;
    }

    template <class Derived>
    typename Derived::PlainObject apply_rows(const Eigen::MatrixBase<Derived>& A) const {
        typename Derived::PlainObject out(A.rows(), A.cols());
        for (Eigen::Index i = 0; i < size(); ++i) out.row(sigma[static_cast<std::size_t>(i)]) = A.row(i);
        return out;
    }
};

struct Assignment {
    Permutation permutation;
    double cost = 0.0;
};

// Shortest augmenting path Hungarian method with row/column potentials, O(n^3).
// Strict comparisons keep the lowest index among equal candidates.
inline Assignment solve_assignment(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols()) throw DimensionError("assignment: cost matrix must be square");
    const Eigen::Index n = cost.rows();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (!std::isfinite(cost(i, j))) throw DimensionError("assignment: non-finite cost");

    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t sn = static_cast<std::size_t>(n);
    std::vector<double> u(sn + 1, 0.0), v(sn + 1, 0.0);
    std::vector<std::size_t> p(sn + 1, 0), way(sn + 1, 0);  // p[j]: row matched to column j, 1-based

    for (std::size_t i = 1; i <= sn; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(sn + 1, inf);
        std::vector<char> used(sn + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= sn; ++j) {
                if (used[j]) continue;
                const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                                   u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= sn; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment out;
    out.permutation.sigma.assign(sn, 0);
    for (std::size_t j = 1; j <= sn; ++j)
        out.permutation.sigma[p[j] - 1] = static_cast<Eigen::Index>(j - 1);
    for (Eigen::Index i = 0; i < n; ++i) out.cost += cost(i, out.permutation.sigma[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace dfc
