#include <kbl/quadrature.hpp>
#include <kbl/errors.hpp>

#include <gsl/gsl_integration.h>

#include <map>
#include <mutex>

namespace kbl {

namespace {

QuadratureRule make_fixed(const gsl_integration_fixed_type* type, int n, double alpha) {
    gsl_integration_fixed_workspace* ws =
        gsl_integration_fixed_alloc(type, static_cast<size_t>(n), 0.0, 1.0, alpha, 0.0);
    if (!ws) throw numeric_error("quadrature: node construction failed");
    QuadratureRule r;
    r.nodes.assign(gsl_integration_fixed_nodes(ws), gsl_integration_fixed_nodes(ws) + n);
    r.weights.assign(gsl_integration_fixed_weights(ws), gsl_integration_fixed_weights(ws) + n);
    gsl_integration_fixed_free(ws);
    return r;
}

// Rules are pure functions of (family, n, alpha); cache them.
std::mutex cache_mutex;
std::map<std::pair<int, double>, QuadratureRule> hermite_cache;  // key (n, 0)
std::map<std::pair<int, double>, QuadratureRule> laguerre_cache; // key (n, alpha)

} // namespace

QuadratureRule gauss_hermite(int n) {
    if (n < 1 || n > 1 << 16) throw config_error("gauss_hermite: node count out of range");
    std::lock_guard lock(cache_mutex);
    auto key = std::make_pair(n, 0.0);
    auto it = hermite_cache.find(key);
    if (it == hermite_cache.end())
        it = hermite_cache.emplace(key, make_fixed(gsl_integration_fixed_hermite, n, 0.0)).first;
    return it->second;
}

QuadratureRule gauss_laguerre(int n, double alpha) {
    if (n < 1 || n > 1 << 16) throw config_error("gauss_laguerre: node count out of range");
    if (!(alpha > -1.0)) throw config_error("gauss_laguerre: weight exponent must exceed -1");
    std::lock_guard lock(cache_mutex);
    auto key = std::make_pair(n, alpha);
    auto it = laguerre_cache.find(key);
    if (it == laguerre_cache.end())
        it = laguerre_cache.emplace(key, make_fixed(gsl_integration_fixed_laguerre, n, alpha)).first;
    return it->second;
}

} // namespace kbl
