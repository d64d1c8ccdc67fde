#pragma once

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace topdown {

enum class AssignmentMethod { greedy, hungarian };

using Match = std::pair<Eigen::Index, Eigen::Index>; // (row, col)

namespace detail {

// Shortest augmenting path Hungarian with potentials, rows <= cols.
// O(rows^2 * cols).
template <typename Scalar>
std::vector<Match> hungarian_wide(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& cost)
{
    const Eigen::Index n = cost.rows();
    const Eigen::Index m = cost.cols();
    const Scalar inf = std::numeric_limits<Scalar>::has_infinity ? std::numeric_limits<Scalar>::infinity()
                                                                 : std::numeric_limits<Scalar>::max() / 4;

    // 1-based: row_of[col] = row assigned to col, 0 = free.
    std::vector<Scalar> u(n + 1, Scalar(0)), v(m + 1, Scalar(0));
    std::vector<Eigen::Index> row_of(m + 1, 0), way(m + 1, 0);

    for (Eigen::Index i = 1; i <= n; ++i) {
        row_of[0] = i;
        Eigen::Index j0 = 0;
        std::vector<Scalar> minv(m + 1, inf);
        std::vector<char> used(m + 1, false);
        do {
            used[j0] = true;
            const Eigen::Index i0 = row_of[j0];
            Scalar delta = inf;
            Eigen::Index j1 = 0;
            for (Eigen::Index j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const Scalar cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Eigen::Index j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of[j0] != 0);
        do {
            const Eigen::Index j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<Match> out;
    for (Eigen::Index j = 1; j <= m; ++j)
        if (row_of[j] != 0) out.emplace_back(row_of[j] - 1, j - 1);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

/// Minimum-cost maximum matching between the rows and columns of `cost`.
/// Every row is matched when rows <= cols, every column otherwise.
template <typename Derived>
std::vector<Match> hungarian(const Eigen::MatrixBase<Derived>& cost)
{
    using Scalar = typename Derived::Scalar;
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (cost.rows() == 0 || cost.cols() == 0) return {};
    if (cost.rows() <= cost.cols()) return detail::hungarian_wide<Scalar>(Dense(cost));

    std::vector<Match> t = detail::hungarian_wide<Scalar>(Dense(cost.transpose()));
    for (auto& p : t) std::swap(p.first, p.second);
    std::sort(t.begin(), t.end());
    return t;
}

/// Repeatedly takes the globally smallest remaining entry, ties by (row, col).
template <typename Derived>
std::vector<Match> greedy_assignment(const Eigen::MatrixBase<Derived>& cost)
{
    std::vector<Match> cells;
    cells.reserve(static_cast<std::size_t>(cost.rows() * cost.cols()));
    for (Eigen::Index r = 0; r < cost.rows(); ++r)
        for (Eigen::Index c = 0; c < cost.cols(); ++c) cells.emplace_back(r, c);
    std::stable_sort(cells.begin(), cells.end(), [&](const Match& a, const Match& b) {
        return cost(a.first, a.second) < cost(b.first, b.second);
    });

    std::vector<char> row_used(cost.rows(), false), col_used(cost.cols(), false);
    std::vector<Match> out;
    for (const auto& [r, c] : cells) {
        if (row_used[r] || col_used[c]) continue;
        row_used[r] = col_used[c] = true;
        out.emplace_back(r, c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

template <typename Derived>
std::vector<Match> solve_assignment(const Eigen::MatrixBase<Derived>& cost, AssignmentMethod method)
{
    return method == AssignmentMethod::hungarian ? hungarian(cost) : greedy_assignment(cost);
}

template <typename Derived>
typename Derived::Scalar matching_cost(const Eigen::MatrixBase<Derived>& cost,
                                       const std::vector<Match>& matching)
{
    typename Derived::Scalar total(0);
    for (const auto& [r, c] : matching) total += cost(r, c);
    return total;
}

} // namespace topdown
