#include "glmb/assignment.hpp"

#include <queue>

namespace glmb {

std::optional<Assignment> try_solve_optimal(const Mat& costs) {
    const int n = static_cast<int>(costs.rows());
    const int m = static_cast<int>(costs.cols());
    if (n == 0) return Assignment{{}, 0.0};
    if (n > m) return std::nullopt;

    // shortest augmenting path with potentials, 1-indexed with dummies
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, pos_inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = -1;
            double delta = pos_inf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                double cur = costs(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if (!(delta < pos_inf)) return std::nullopt;  // no finite path
            for (int j = 0; j <= m; ++j) {
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
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    Assignment a;
    a.row_to_col.assign(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] != 0) {
            a.row_to_col[p[j] - 1] = j - 1;
            a.total_cost += costs(p[j] - 1, j - 1);
        }
    }
    return a;
}

Assignment solve_optimal(const Mat& costs) {
    auto a = try_solve_optimal(costs);
    if (!a) throw ConfigError("solve_optimal: no feasible assignment");
    return *a;
}

namespace {

struct MurtyNode {
    Mat costs;
    Assignment solution;
};

bool node_after(const MurtyNode& a, const MurtyNode& b) {
    if (a.solution.total_cost != b.solution.total_cost)
        return a.solution.total_cost > b.solution.total_cost;
    return a.solution.row_to_col > b.solution.row_to_col;
}

}  // namespace

std::vector<Assignment> k_best(const Mat& costs, int K) {
    if (K < 1) throw ConfigError("k_best: K must be >= 1");
    const int n = static_cast<int>(costs.rows());
    const int m = static_cast<int>(costs.cols());

    std::vector<Assignment> results;
    if (n == 0) {
        results.push_back({{}, 0.0});
        return results;
    }

    std::priority_queue<MurtyNode, std::vector<MurtyNode>, decltype(&node_after)>
        queue(&node_after);
    if (auto first = try_solve_optimal(costs)) queue.push({costs, *first});

    while (!queue.empty() && static_cast<int>(results.size()) < K) {
        MurtyNode node = queue.top();
        queue.pop();
        results.push_back(node.solution);

        // Murty partition: child t forbids pair t of the solution while
        // forcing pairs 0..t-1, carving disjoint subproblems.
        Mat forced = node.costs;
        for (int t = 0; t < n; ++t) {
            const int col = node.solution.row_to_col[t];
            Mat child = forced;
            child(t, col) = pos_inf;
            if (auto sol = try_solve_optimal(child))
                queue.push({std::move(child), *sol});
            // force row t onto col for the remaining children
            for (int j = 0; j < m; ++j)
                if (j != col) forced(t, j) = pos_inf;
            for (int i = 0; i < n; ++i)
                if (i != t) forced(i, col) = pos_inf;
        }
    }
    return results;
}

}  // namespace glmb
