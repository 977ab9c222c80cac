#include <kbl/killing.hpp>
#include <kbl/rng.hpp>

#include <cmath>
#include <vector>

namespace kbl {

KillingFunction KillingFunction::constant(double c) {
    if (!(c >= 0.0) || !std::isfinite(c))
        throw config_error("KillingFunction::constant: value must be finite and >= 0");
    KillingFunction k;
    k.kind_ = Kind::constant;
    k.c_ = c;
    k.growth_ = {std::max(c, 1.0), 0.0};
    k.label_ = "constant(" + std::to_string(c) + ")";
    return k;
}

KillingFunction KillingFunction::abs_power(double p) {
    if (!(p >= 0.0 && p < 2.0))
        throw config_error("KillingFunction::abs_power: exponent must lie in [0,2)");
    KillingFunction k;
    k.kind_ = Kind::abs_power;
    k.p_ = p;
    k.growth_ = {1.0, p};
    k.label_ = "abs_power(" + std::to_string(p) + ")";
    return k;
}

KillingFunction KillingFunction::custom(std::function<double(std::span<const double>)> f,
                                        GrowthCertificate growth, std::string label) {
    if (!f) throw config_error("KillingFunction::custom: empty callable");
    if (!(growth.C > 0.0) || !(growth.p >= 0.0 && growth.p < 2.0))
        throw config_error("KillingFunction::custom: growth certificate needs C > 0, p in [0,2)");
    KillingFunction k;
    k.kind_ = Kind::custom;
    k.f_ = std::move(f);
    k.growth_ = growth;
    k.label_ = std::move(label);
    return k;
}

double KillingFunction::operator()(std::span<const double> x) const {
    for (double xi : x)
        if (!std::isfinite(xi)) throw std::domain_error("KillingFunction: non-finite coordinate");
    switch (kind_) {
    case Kind::constant:
        return c_;
    case Kind::abs_power: {
        double s = 0.0;
        for (double xi : x) s += xi * xi;
        // |x|^p with 0^0 = 1 by continuity of the p=0 (constant 1) case
        if (p_ == 0.0) return 1.0;
        return std::pow(std::sqrt(s), p_);
    }
    case Kind::custom: {
        double v = f_(x);
        if (!std::isfinite(v) || v < 0.0)
            throw std::domain_error("KillingFunction: custom rate returned a negative or non-finite value");
        return v;
    }
    }
    throw numeric_error("KillingFunction: unreachable kind");
}

void KillingFunction::spot_check_growth(int d, int samples, double radius, uint64_t seed) const {
    RngStream g(seed, StreamDomain::dictionary);
    std::vector<double> x(d);
    for (int i = 0; i < samples; ++i) {
        double norm2 = 0.0;
        for (int j = 0; j < d; ++j) {
            x[j] = radius * g.gaussian(static_cast<uint64_t>(i) * d + j);
            norm2 += x[j] * x[j];
        }
        double bound = growth_.C * (1.0 + std::pow(std::sqrt(norm2), growth_.p));
        double v = (*this)(x);
        if (v > bound * (1.0 + 1e-12))
            throw numeric_error("KillingFunction: growth certificate violated at a sampled point");
    }
}

} // namespace kbl
