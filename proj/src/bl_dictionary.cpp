#include <kbl/bl_dictionary.hpp>
#include <kbl/errors.hpp>

#include <algorithm>
#include <cmath>

namespace kbl {

namespace {

constexpr double pi = 3.14159265358979323846;

double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * pi); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// E[max(0, 1 - |Z - c| / w)] for Z ~ N(0, sigma^2), one axis of a triangle.
double triangle_axis_mean(double c, double w, double sigma) {
    if (sigma == 0.0) return std::max(0.0, 1.0 - std::abs(c) / w);
    double al = (c - w) / sigma, be = (c + w) / sigma, ga = c / sigma;
    double phi_a = norm_pdf(al), phi_b = norm_pdf(be), phi_g = norm_pdf(ga);
    double Phi_a = norm_cdf(al), Phi_b = norm_cdf(be), Phi_g = norm_cdf(ga);
    return (Phi_b - Phi_a) -
           (sigma * (2.0 * phi_g - phi_b - phi_a) - c * (Phi_b + Phi_a - 2.0 * Phi_g)) / w;
}

// E[clip(Y, -1, 1)] for Y ~ N(mu, sigma^2).
double clip_mean(double mu, double sigma) {
    if (sigma == 0.0) return std::clamp(mu, -1.0, 1.0);
    double al = (-1.0 - mu) / sigma, be = (1.0 - mu) / sigma;
    return -norm_cdf(al) + (1.0 - norm_cdf(be)) + mu * (norm_cdf(be) - norm_cdf(al)) -
           sigma * (norm_pdf(be) - norm_pdf(al));
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

} // namespace

double BLFunction::eval(std::span<const double> x) const {
    switch (family) {
    case Family::triangle: {
        double f = 1.0;
        for (int j = 0; j < d; ++j) {
            double axis = std::max(0.0, 1.0 - std::abs(x[j] - v[j]) / p0);
            if (axis == 0.0) return 0.0;
            f *= axis;
        }
        return f;
    }
    case Family::gauss_bump: {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += (x[j] - v[j]) * (x[j] - v[j]);
        return std::exp(-0.5 * s / (p0 * p0));
    }
    case Family::clipped_affine:
        return std::clamp(dot(v, x) + p0, -1.0, 1.0);
    case Family::sinusoid:
        return std::sin(dot(v, x) + p0) / std::max(1.0, norm2(v));
    }
    throw numeric_error("BLFunction: unreachable family");
}

double BLFunction::gaussian_mean(double t) const {
    switch (family) {
    case Family::triangle: {
        double f = 1.0;
        double sigma = std::sqrt(t);
        for (int j = 0; j < d; ++j) f *= triangle_axis_mean(v[j], p0, sigma);
        return f;
    }
    case Family::gauss_bump: {
        double s2 = p0 * p0;
        double c2 = dot(v, v);
        return std::pow(s2 / (s2 + t), 0.5 * d) * std::exp(-0.5 * c2 / (s2 + t));
    }
    case Family::clipped_affine:
        return clip_mean(p0, std::sqrt(t) * norm2(v));
    case Family::sinusoid: {
        double k2 = dot(v, v);
        return std::exp(-0.5 * t * k2) * std::sin(p0) / std::max(1.0, std::sqrt(k2));
    }
    }
    throw numeric_error("BLFunction: unreachable family");
}

namespace {

std::vector<double> axis_vec(int d, int axis, double value) {
    std::vector<double> u(d, 0.0);
    u[axis % d] = value;
    return u;
}

} // namespace

BLDictionary BLDictionary::standard(int d, int count) {
    if (d < 1) throw config_error("BLDictionary: dimension must be positive");
    if (count < 1) throw config_error("BLDictionary: need at least one function");

    const double w = std::sqrt(static_cast<double>(d)); // per-axis triangle width
    const double offsets[] = {0.0, 0.5, -0.5, 1.0, -1.0, 1.5, -1.5, 2.0,
                              -2.0, 0.25, -0.25, 0.75, -0.75, 3.0, -3.0, 1.25};
    const double sigmas[] = {1.0, 2.0, 1.5, 3.0};
    const double scales[] = {1.0, 0.5, 0.75, 0.25};
    const double freqs[] = {1.0, 2.0, 0.5, 3.0, 1.5, 2.5, 4.0, 0.75};

    std::vector<BLFunction> tri, bump, aff, sin;
    for (int i = 0; i < 16; ++i) {
        tri.push_back({BLFunction::Family::triangle, d, axis_vec(d, i, offsets[i % 16]), w});
        bump.push_back({BLFunction::Family::gauss_bump, d, axis_vec(d, i, offsets[(i + 3) % 16]),
                        sigmas[i % 4]});
        // direction scaled to keep |a| <= 1; offsets reused as the clip shift
        aff.push_back({BLFunction::Family::clipped_affine, d, axis_vec(d, i, scales[i % 4]),
                       offsets[i % 16] / 2.0});
        const double phases[] = {0.5 * pi, 0.0, 0.25 * pi, 0.75 * pi}; // cos, sin, mixtures
        sin.push_back({BLFunction::Family::sinusoid, d, axis_vec(d, i, freqs[i % 8]),
                       phases[(i % 2) + 2 * ((i / 8) % 2)]});
    }

    BLDictionary dict;
    for (int i = 0; dict.fns_.size() < static_cast<size_t>(count); ++i) {
        switch (i % 4) {
        case 0: dict.fns_.push_back(tri[(i / 4) % tri.size()]); break;
        case 1: dict.fns_.push_back(bump[(i / 4) % bump.size()]); break;
        case 2: dict.fns_.push_back(aff[(i / 4) % aff.size()]); break;
        case 3: dict.fns_.push_back(sin[(i / 4) % sin.size()]); break;
        }
    }
    return dict;
}

double empirical_mean(const BLFunction& f, const EmpiricalFrame& frame) {
    // fixed-chunk pairwise accumulation keeps the sum order (and hence the
    // bits) independent of any threading above this call
    constexpr int chunk = 8192;
    double total = 0.0;
    for (int base = 0; base < frame.n; base += chunk) {
        int hi = std::min(frame.n, base + chunk);
        double part = 0.0;
        for (int i = base; i < hi; ++i) {
            if (!frame.alive[i]) continue;
            part += f.eval(frame.positions.subspan(static_cast<size_t>(i) * frame.d,
                                                   static_cast<size_t>(frame.d)));
        }
        total += part;
    }
    return total / frame.n;
}

double bl_distance_lower(const EmpiricalFrame& m1, const EmpiricalFrame& m2,
                         const BLDictionary& dict) {
    double best = 0.0;
    for (const auto& f : dict)
        best = std::max(best, std::abs(empirical_mean(f, m1) - empirical_mean(f, m2)));
    return best;
}

double bl_distance_lower(const EmpiricalFrame& m1, const GaussianMeasure& m2,
                         const BLDictionary& dict) {
    double best = 0.0;
    for (const auto& f : dict)
        best = std::max(best, std::abs(empirical_mean(f, m1) - m2.mass * f.gaussian_mean(m2.t)));
    return best;
}

double bl_distance_lower(const GaussianMeasure& m1, const GaussianMeasure& m2,
                         const BLDictionary& dict) {
    double best = 0.0;
    for (const auto& f : dict)
        best = std::max(best,
                        std::abs(m1.mass * f.gaussian_mean(m1.t) - m2.mass * f.gaussian_mean(m2.t)));
    return best;
}

} // namespace kbl
