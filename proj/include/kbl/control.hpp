#pragma once

#include <kbl/errors.hpp>

#include <span>
#include <string>
#include <vector>

namespace kbl {

// R(Exp(lambda) || Exp(1)) = log(lambda) + 1/lambda - 1.
double entropy_exp(double lambda);

// Law of a tilted killing threshold.  Exponential with a free rate, or a
// piecewise-constant hazard on [0, a_1), [a_1, a_2), ..., [a_K, inf).
class ThresholdLaw {
public:
    enum class Kind { exp_rate, piecewise_hazard };

    static ThresholdLaw exponential(double lambda);
    static ThresholdLaw piecewise(std::vector<double> boundaries, std::vector<double> rates);

    // Inverse-CDF sample from a uniform in (0,1].
    double sample(double u) const;

    // R(law || Exp(1)), in closed form.
    double relative_entropy() const;

    Kind kind() const { return kind_; }
    double rate() const { return rates_[0]; }
    bool is_unit_exponential() const { return kind_ == Kind::exp_rate && rates_[0] == 1.0; }
    const std::vector<double>& boundaries() const { return bounds_; }
    const std::vector<double>& rates() const { return rates_; }
    std::string label() const;

private:
    ThresholdLaw() = default;
    Kind kind_ = Kind::exp_rate;
    std::vector<double> bounds_; // interior piece boundaries, strictly increasing, > 0
    std::vector<double> rates_;  // bounds_.size() + 1 positive rates
};

// Deterministic drift added to the driving Brownian motion.  Either a
// per-step open-loop schedule u(t_k) or an affine feedback x -> A x + c.
class DriftPolicy {
public:
    enum class Kind { zero, time_dependent, affine_feedback };

    DriftPolicy() = default; // the zero policy in one dimension

    static DriftPolicy zero(int d = 1);
    // schedule holds m*d entries, the drift on each step [t_k, t_{k+1})
    static DriftPolicy time_dependent(std::vector<double> schedule, int m, int d);
    // the same vector on every step
    static DriftPolicy constant(std::vector<double> u, int m);
    static DriftPolicy affine(std::vector<double> A, std::vector<double> c, int d);

    void eval(int k, std::span<const double> x, std::span<double> out) const;
    double half_square_norm(int k, std::span<const double> x) const;

    Kind kind() const { return kind_; }
    bool is_zero() const { return kind_ == Kind::zero; }
    int dim() const { return d_; }
    int steps() const { return m_; }
    std::string label() const;

private:
    Kind kind_ = Kind::zero;
    int d_ = 1;
    int m_ = 0;
    std::vector<double> sched_; // time_dependent: m*d
    std::vector<double> A_, c_; // affine_feedback: d*d row-major, d
};

// A full change of measure for one particle: drift plus threshold law.
struct ControlSpec {
    DriftPolicy drift;
    ThresholdLaw threshold = ThresholdLaw::exponential(1.0);
    std::string name = "zero";

    bool is_zero_control() const { return drift.is_zero() && threshold.is_unit_exponential(); }
    std::string label() const;
};

// Realized control costs, averaged over particles: the relative entropy of
// the threshold tilt plus the quadratic drift energy 0.5 * int |psi|^2.
struct CostLedger {
    double drift_cost = 0.0;
    double entropy_cost = 0.0;
    double total() const { return drift_cost + entropy_cost; }
};

} // namespace kbl
