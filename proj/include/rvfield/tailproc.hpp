#pragma once
// Empirical tail / spectral tail fields obtained by conditioning on
// exceedances, and an exact check of the time-change identity
//   E[h(Y) 1{|Y_j| > 1}] = E[h(Y_{. - j}) 1{|Y_{-j}| > 1}]
// for the analytic moving-average tail law.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rvfield/lattice.hpp"
#include "rvfield/models.hpp"

namespace rvf {

struct TailSample {
    MultiIndex center;
    double level;
    double center_magnitude;  // |X_i|
    SparseArray ratios;       // lag j -> X_{i+j} / |X_i|
};

// One sample per i with |X_i| > u and i + W inside the window, ordered by
// center. W must contain the origin. Throws InvalidLevel for u <= 0.
std::vector<TailSample> collect_tail_samples(const LatticeWindow& window, double u,
                                             const std::vector<MultiIndex>& lags);

// CSV: center coordinates, level, magnitude, then one column per lag.
void write_tail_samples_csv(std::ostream& out, const std::vector<TailSample>& samples,
                            const std::vector<MultiIndex>& lags);

// A bounded functional of finitely many coordinates of a field, constant
// along rays y -> y * theta between the declared cut points: its value may
// only change where |y * theta_lag| crosses `level` for one of the cuts.
struct RayFunctional {
    struct Cut {
        MultiIndex lag;
        double level;
    };

    std::string name;
    std::vector<Cut> cuts;
    // Receives a coordinate accessor x(lag).
    std::function<double(const std::function<double(const MultiIndex&)>&)> eval;
};

struct TimeChangeSides {
    double lhs;
    double rhs;
};

// Both sides by enumeration over the (J, K) atoms and exact integration of
// the Pareto magnitude |Y_0| over the pieces where h is constant.
TimeChangeSides time_change_check(const TailLawMA& law, const RayFunctional& h, const MultiIndex& j);

}  // namespace rvf
