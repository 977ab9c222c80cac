#pragma once

#include <kbl/measures.hpp>

#include <span>
#include <vector>

namespace kbl {

// mass * N(0, t I_d): the scaled-Gaussian form every limit measure here takes.
struct GaussianMeasure {
    double mass = 1.0;
    double t = 1.0;
    int d = 1;
};

// One time slice of an ensemble viewed as a sub-probability measure
// (1/n per alive particle).
struct EmpiricalFrame {
    int n = 0;
    int d = 1;
    std::span<const double> positions; // n*d, particle-major
    std::span<const uint8_t> alive;    // n

    static EmpiricalFrame at(const ParticleEnsemble& e, int k) {
        return {e.n, e.d, e.frame(k), e.alive_at(k)};
    }
};

// Test function with certified sup-norm and Lipschitz constant both <= 1,
// plus a closed-form integral against centered Gaussians so distances to a
// limit measure carry no quadrature bias.
class BLFunction {
public:
    enum class Family { triangle, gauss_bump, clipped_affine, sinusoid };

    Family family = Family::triangle;
    int d = 1;
    std::vector<double> v; // center (triangle/bump), direction a (affine), frequency k (sinusoid)
    double p0 = 1.0;       // triangle width / bump sigma / affine offset b / sinusoid phase

    double eval(std::span<const double> x) const;
    double gaussian_mean(double t) const; // against unit-mass N(0, t I_d)
};

class BLDictionary {
public:
    // Deterministic default dictionary; the first entry is a triangular bump
    // with value exactly 1 at the origin.
    static BLDictionary standard(int d, int count = 64);

    size_t size() const { return fns_.size(); }
    const BLFunction& operator[](size_t i) const { return fns_[i]; }
    auto begin() const { return fns_.begin(); }
    auto end() const { return fns_.end(); }

private:
    std::vector<BLFunction> fns_;
};

double empirical_mean(const BLFunction& f, const EmpiricalFrame& frame);

// sup over the dictionary of |<f,m1> - <f,m2>|; a lower bound for the
// bounded-Lipschitz distance.
double bl_distance_lower(const EmpiricalFrame& m1, const EmpiricalFrame& m2, const BLDictionary& dict);
double bl_distance_lower(const EmpiricalFrame& m1, const GaussianMeasure& m2, const BLDictionary& dict);
double bl_distance_lower(const GaussianMeasure& m1, const GaussianMeasure& m2, const BLDictionary& dict);

} // namespace kbl
