#pragma once

namespace lacelab {

// Kahan compensated accumulator.  All enumeration sums in this project run
// through one of these so that results stay reproducible to ~1 ulp even when
// terms carry mixed signs (spin-glass couplings).
class KahanSum {
public:
    KahanSum() = default;
    explicit KahanSum(double init) : sum_(init) {}

    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    KahanSum& operator+=(double x) {
        add(x);
        return *this;
    }
    double value() const { return sum_; }
    operator double() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace lacelab
