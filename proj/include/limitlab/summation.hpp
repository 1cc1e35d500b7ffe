#pragma once

#include <cmath>

namespace limitlab {

// Neumaier variant of Kahan summation. Terms must be added in a fixed order
// for results to be reproducible.
class CompensatedSum {
public:
    CompensatedSum() = default;
    explicit CompensatedSum(double init) : sum_(init) {}

    void add(double x) {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }

    CompensatedSum& operator+=(double x) {
        add(x);
        return *this;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace limitlab
