#pragma once

#include <kbl/errors.hpp>

#include <functional>
#include <span>
#include <string>

namespace kbl {

// Growth certificate zeta(x) <= C * (1 + |x|^p) with p in [0,2).  Subquadratic
// growth is what keeps the killing rate integrable against a Gaussian.
struct GrowthCertificate {
    double C = 1.0;
    double p = 0.0;
};

// The spatial killing rate zeta: nonnegative, continuous, subquadratic.
// Built-in kinds keep a symbolic tag so numerical code can dispatch to
// exact paths (constants never need positions; pure powers reduce radially).
class KillingFunction {
public:
    enum class Kind { constant, abs_power, custom };

    static KillingFunction constant(double c);
    static KillingFunction abs_power(double p);
    static KillingFunction custom(std::function<double(std::span<const double>)> f,
                                  GrowthCertificate growth,
                                  std::string label = "custom");

    // Evaluate at a point; NaN/inf coordinates are a domain error, as is a
    // negative or non-finite value coming back from a custom callable.
    double operator()(std::span<const double> x) const;
    double eval1(double x) const { return (*this)(std::span<const double>(&x, 1)); }

    Kind kind() const { return kind_; }
    bool is_constant() const { return kind_ == Kind::constant; }
    double constant_value() const { return c_; }
    double power() const { return p_; }
    const GrowthCertificate& growth() const { return growth_; }
    const std::string& label() const { return label_; }

    // Randomized audit of the growth certificate on Gaussian batches scaled
    // by `radius`; throws numeric_error on a violation.
    void spot_check_growth(int d, int samples, double radius, uint64_t seed) const;

private:
    KillingFunction() = default;
    Kind kind_ = Kind::constant;
    double c_ = 1.0; // constant value
    double p_ = 1.0; // abs_power exponent
    GrowthCertificate growth_;
    std::function<double(std::span<const double>)> f_;
    std::string label_;
};

} // namespace kbl
