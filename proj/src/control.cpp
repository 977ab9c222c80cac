#include <kbl/control.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kbl {

double entropy_exp(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::domain_error("entropy_exp: rate must be positive and finite");
    return std::log(lambda) + 1.0 / lambda - 1.0;
}

ThresholdLaw ThresholdLaw::exponential(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw config_error("ThresholdLaw: exponential rate must be positive and finite");
    ThresholdLaw law;
    law.kind_ = Kind::exp_rate;
    law.rates_ = {lambda};
    return law;
}

ThresholdLaw ThresholdLaw::piecewise(std::vector<double> boundaries, std::vector<double> rates) {
    if (rates.size() != boundaries.size() + 1)
        throw config_error("ThresholdLaw: need one more rate than boundaries");
    double prev = 0.0;
    for (double b : boundaries) {
        if (!(b > prev) || !std::isfinite(b))
            throw config_error("ThresholdLaw: boundaries must be finite, positive, strictly increasing");
        prev = b;
    }
    for (double r : rates)
        if (!(r > 0.0) || !std::isfinite(r))
            throw config_error("ThresholdLaw: hazard rates must be positive and finite");
    ThresholdLaw law;
    law.kind_ = Kind::piecewise_hazard;
    law.bounds_ = std::move(boundaries);
    law.rates_ = std::move(rates);
    return law;
}

double ThresholdLaw::sample(double u) const {
    double target = -std::log(u); // cumulative hazard to reach
    if (kind_ == Kind::exp_rate) return target / rates_[0];
    double a = 0.0, acc = 0.0;
    for (size_t j = 0; j < bounds_.size(); ++j) {
        double seg = rates_[j] * (bounds_[j] - a);
        if (acc + seg >= target) return a + (target - acc) / rates_[j];
        acc += seg;
        a = bounds_[j];
    }
    return a + (target - acc) / rates_.back();
}

double ThresholdLaw::relative_entropy() const {
    if (kind_ == Kind::exp_rate) return entropy_exp(rates_[0]);
    // log-likelihood ratio against Exp(1) is log lam_j - Lam(x) + x on each
    // piece; both moments of the truncated exponential close in elementary
    // terms
    double R = 0.0, a = 0.0, Lam = 0.0;
    for (size_t j = 0; j < rates_.size(); ++j) {
        double lam = rates_[j];
        bool last = j + 1 == rates_.size();
        double L = last ? std::numeric_limits<double>::infinity() : bounds_[j] - a;
        double I0, I1; // int_0^L e^{-lam s} ds, int_0^L s e^{-lam s} ds
        if (last) {
            I0 = 1.0 / lam;
            I1 = 1.0 / (lam * lam);
        } else {
            double e = std::exp(-lam * L);
            I0 = (1.0 - e) / lam;
            I1 = (1.0 - e * (1.0 + lam * L)) / (lam * lam);
        }
        R += lam * std::exp(-Lam) * ((std::log(lam) - Lam + a) * I0 + (1.0 - lam) * I1);
        if (!last) {
            Lam += lam * L;
            a = bounds_[j];
        }
    }
    return R;
}

std::string ThresholdLaw::label() const {
    if (kind_ == Kind::exp_rate) return "exp(" + std::to_string(rates_[0]) + ")";
    std::string s = "piecewise(";
    for (size_t j = 0; j < rates_.size(); ++j) {
        if (j) s += ",";
        s += std::to_string(rates_[j]);
    }
    return s + ")";
}

DriftPolicy DriftPolicy::zero(int d) {
    DriftPolicy p;
    p.kind_ = Kind::zero;
    p.d_ = d;
    return p;
}

DriftPolicy DriftPolicy::time_dependent(std::vector<double> schedule, int m, int d) {
    if (m < 1 || d < 1 || schedule.size() != static_cast<size_t>(m) * d)
        throw config_error("DriftPolicy: schedule must hold steps*dim entries");
    for (double u : schedule)
        if (!std::isfinite(u)) throw config_error("DriftPolicy: non-finite drift entry");
    DriftPolicy p;
    p.kind_ = Kind::time_dependent;
    p.d_ = d;
    p.m_ = m;
    p.sched_ = std::move(schedule);
    return p;
}

DriftPolicy DriftPolicy::constant(std::vector<double> u, int m) {
    int d = static_cast<int>(u.size());
    std::vector<double> sched(static_cast<size_t>(m) * d);
    for (int k = 0; k < m; ++k)
        for (int j = 0; j < d; ++j) sched[static_cast<size_t>(k) * d + j] = u[j];
    return time_dependent(std::move(sched), m, d);
}

DriftPolicy DriftPolicy::affine(std::vector<double> A, std::vector<double> c, int d) {
    if (d < 1 || A.size() != static_cast<size_t>(d) * d || c.size() != static_cast<size_t>(d))
        throw config_error("DriftPolicy: affine feedback needs a d*d matrix and a d-vector");
    for (double v : A)
        if (!std::isfinite(v)) throw config_error("DriftPolicy: non-finite feedback entry");
    for (double v : c)
        if (!std::isfinite(v)) throw config_error("DriftPolicy: non-finite feedback entry");
    DriftPolicy p;
    p.kind_ = Kind::affine_feedback;
    p.d_ = d;
    p.A_ = std::move(A);
    p.c_ = std::move(c);
    return p;
}

void DriftPolicy::eval(int k, std::span<const double> x, std::span<double> out) const {
    switch (kind_) {
    case Kind::zero:
        for (auto& o : out) o = 0.0;
        return;
    case Kind::time_dependent:
        for (int j = 0; j < d_; ++j) out[j] = sched_[static_cast<size_t>(k) * d_ + j];
        return;
    case Kind::affine_feedback:
        for (int i = 0; i < d_; ++i) {
            double s = c_[i];
            for (int j = 0; j < d_; ++j) s += A_[static_cast<size_t>(i) * d_ + j] * x[j];
            out[i] = s;
        }
        return;
    }
}

double DriftPolicy::half_square_norm(int k, std::span<const double> x) const {
    if (kind_ == Kind::zero) return 0.0;
    double u[8];
    std::vector<double> big;
    std::span<double> out;
    if (d_ <= 8) out = std::span<double>(u, d_);
    else {
        big.resize(d_);
        out = big;
    }
    eval(k, x, out);
    double s = 0.0;
    for (double v : out) s += v * v;
    return 0.5 * s;
}

std::string DriftPolicy::label() const {
    switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::time_dependent: return "schedule";
    case Kind::affine_feedback: return "affine";
    }
    return "?";
}

std::string ControlSpec::label() const {
    return name.empty() ? drift.label() + "+" + threshold.label() : name;
}

} // namespace kbl
