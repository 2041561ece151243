#include "glmb/metrics.hpp"

#include <map>

#include "glmb/assignment.hpp"

namespace glmb {

Vec position_of(const Vec& state) {
    Vec p(2);
    p << state(0), state(2);
    return p;
}

OspaResult ospa(const std::vector<Vec>& X, const std::vector<Vec>& Y,
                const OspaParams& params) {
    params.validate();
    const double c = params.cutoff;
    const double p = params.order;

    const std::vector<Vec>* small = &X;
    const std::vector<Vec>* large = &Y;
    if (small->size() > large->size()) std::swap(small, large);
    const int m = static_cast<int>(small->size());
    const int n = static_cast<int>(large->size());

    OspaResult result;
    if (n == 0) return result;
    if (m == 0) {
        result.total = result.cardinality = c;
        return result;
    }

    Mat costs(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            costs(i, j) =
                std::pow(std::min(c, ((*small)[i] - (*large)[j]).norm()), p);
    double loc_sum = solve_optimal(costs).total_cost;
    double card_sum = std::pow(c, p) * (n - m);

    result.localization = std::pow(loc_sum / n, 1.0 / p);
    result.cardinality = std::pow(card_sum / n, 1.0 / p);
    result.total = std::pow((loc_sum + card_sum) / n, 1.0 / p);
    return result;
}

Mat mode_probability_trace(const std::vector<MultiTargetEstimate>& estimates,
                           const TruthTrajectory& truth, int num_modes) {
    const int steps = static_cast<int>(estimates.size());

    // time-averaged position distance per estimated label
    std::map<Label, std::pair<double, int>> accum;  // label -> (dist sum, count)
    for (int k = 1; k <= steps; ++k) {
        if (!truth.alive_at(k)) continue;
        Vec tp = position_of(truth.state_at(k));
        for (const auto& t : estimates[k - 1].targets) {
            auto& [sum, count] = accum[t.label];
            sum += (position_of(t.mean) - tp).norm();
            ++count;
        }
    }

    bool have_match = false;
    Label best_label;
    double best_avg = pos_inf;
    for (const auto& [label, sc] : accum) {
        double avg = sc.first / sc.second;
        if (avg < best_avg) {
            best_avg = avg;
            best_label = label;
            have_match = true;
        }
    }

    Mat trace = Mat::Constant(steps, num_modes,
                              std::numeric_limits<double>::quiet_NaN());
    if (!have_match) return trace;
    for (int k = 1; k <= steps; ++k) {
        for (const auto& t : estimates[k - 1].targets) {
            if (t.label == best_label) {
                trace.row(k - 1) = t.mode_probs.transpose();
                break;
            }
        }
    }
    return trace;
}

}  // namespace glmb
