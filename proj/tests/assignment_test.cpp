#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "test_support.hpp"
#include "topdown/assignment.hpp"

using namespace topdown;

namespace {

// Minimum over all injections of the smaller side into the larger one.
template <typename Scalar>
Scalar brute_force_min(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& c)
{
    const bool wide = c.rows() <= c.cols();
    const Eigen::Index small = wide ? c.rows() : c.cols(), large = wide ? c.cols() : c.rows();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(large));
    std::iota(perm.begin(), perm.end(), 0);
    Scalar best = std::numeric_limits<Scalar>::max();
    do {
        Scalar total(0);
        for (Eigen::Index i = 0; i < small; ++i) total += wide ? c(i, perm[i]) : c(perm[i], i);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

template <typename Scalar>
void check_valid(const std::vector<Match>& m, Eigen::Index rows, Eigen::Index cols)
{
    std::set<Eigen::Index> r, c;
    for (const auto& [i, j] : m) {
        CHECK(i >= 0);
        CHECK(i < rows);
        CHECK(j >= 0);
        CHECK(j < cols);
        r.insert(i);
        c.insert(j);
    }
    CHECK(r.size() == m.size());
    CHECK(c.size() == m.size());
    CHECK(m.size() == std::size_t(std::min(rows, cols)));
    CHECK(std::is_sorted(m.begin(), m.end()));
}

} // namespace

TEST_CASE("hungarian solves the 2x2 example")
{
    Eigen::MatrixXd c(2, 2);
    c << 1, 2, 3, 1;
    CHECK(hungarian(c) == std::vector<Match>{{0, 0}, {1, 1}});
    CHECK(matching_cost(c, hungarian(c)) == 2.0);
}

TEST_CASE("empty and degenerate shapes")
{
    CHECK(hungarian(Eigen::MatrixXd(0, 3)).empty());
    CHECK(greedy_assignment(Eigen::MatrixXd(2, 0)).empty());
    Eigen::MatrixXd one(1, 1);
    one << 5;
    CHECK(hungarian(one) == std::vector<Match>{{0, 0}});
}

TEST_CASE("greedy can be suboptimal where hungarian is not")
{
    Eigen::MatrixXd c(2, 2);
    c << 0, 1, 1, 10;
    CHECK(matching_cost(c, greedy_assignment(c)) == 10.0);
    CHECK(matching_cost(c, hungarian(c)) == 2.0);
}

TEST_CASE("greedy breaks cost ties by row then column")
{
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 3, 1.0);
    CHECK(greedy_assignment(c) == std::vector<Match>{{0, 0}, {1, 1}, {2, 2}});
}

TEST_CASE("hungarian matches exhaustive search on random integer matrices")
{
    test::Rng rng(7);
    for (int t = 0; t < 1000; ++t) {
        const int rows = test::uniform_int(rng, 1, 6), cols = test::uniform_int(rng, 1, 6);
        Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> c(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) c(i, j) = test::uniform_int(rng, -20, 100);

        const auto h = hungarian(c);
        const auto g = greedy_assignment(c);
        check_valid<long long>(h, rows, cols);
        check_valid<long long>(g, rows, cols);
        CHECK(matching_cost(c, h) == brute_force_min(c));
        CHECK(matching_cost(c, h) <= matching_cost(c, g));

        const Eigen::MatrixXd cd = c.cast<double>();
        CHECK(matching_cost(cd, hungarian(cd)) == double(brute_force_min(c)));
    }
}

TEST_CASE("hungarian on real-valued matrices")
{
    test::Rng rng(8);
    for (int t = 0; t < 300; ++t) {
        const int rows = test::uniform_int(rng, 1, 6), cols = test::uniform_int(rng, 1, 6);
        Eigen::MatrixXd c(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) c(i, j) = test::uniform(rng, 0.0, 1.0);
        CHECK(matching_cost(c, hungarian(c)) == doctest::Approx(brute_force_min(c)).epsilon(1e-12));
    }
}
