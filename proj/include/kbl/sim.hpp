#pragma once

#include <kbl/control.hpp>
#include <kbl/killing.hpp>
#include <kbl/measures.hpp>

#include <cstdint>
#include <optional>

namespace kbl {

// One simulation request.  Everything downstream is a pure function of this
// struct plus the replica index, so reruns and parallel schedules reproduce
// bit-identical output.
struct RunSpec {
    int n = 1000;
    int d = 1;
    TimeGrid grid;
    KillingFunction zeta = KillingFunction::constant(1.0);
    std::optional<ControlSpec> control; // empty: uncontrolled reference dynamics
    uint64_t seed = 1;
    bool keep_ensemble = true;    // retain full paths (off for big streaming runs)
    bool collect_kill_times = true;
    std::vector<int> checkpoint_nodes; // grid indices whose frames to snapshot
};

struct SimResult {
    EmpiricalMeasurePath path;
    std::shared_ptr<ParticleEnsemble> ensemble; // null when keep_ensemble is off
    std::vector<double> kill_times;             // empty when collect_kill_times is off
    CostLedger cost;
    HazardPath hazard;
    // terminal-time snapshot, kept even in streaming mode (it is only n*d
    // doubles) so measure-distance checks never need the full path record
    std::vector<double> final_positions;
    std::vector<uint8_t> final_alive;
    // one snapshot per requested checkpoint node, in request order
    std::vector<std::vector<double>> checkpoint_positions;
    std::vector<std::vector<uint8_t>> checkpoint_alive;
};

// Simulate one replica of the n-particle system.  Killing thresholds are
// crossed in sorted order against the piecewise-linear accumulated hazard;
// within a step the hazard slope uses positions frozen at the step's left
// endpoint and is decremented exactly as each particle dies, so for constant
// zeta the mass path carries no time-discretization bias at all.
SimResult simulate(const RunSpec& spec, uint32_t replica);

// Reference dynamics (Exp(1) thresholds, no drift).
SimResult simulate_uncontrolled(int n, int d, const TimeGrid& grid, const KillingFunction& zeta,
                                uint64_t seed, uint32_t replica = 0, bool keep_ensemble = true);

// Tilted dynamics under a control; the returned CostLedger holds the
// realized drift energy and the threshold relative entropy.
SimResult simulate_controlled(int n, int d, const TimeGrid& grid, const KillingFunction& zeta,
                              const ControlSpec& control, uint64_t seed, uint32_t replica = 0,
                              bool keep_ensemble = true);

struct ReplicaAggregate {
    TimeGrid grid;
    std::vector<EmpiricalMeasurePath> paths;        // per replica, support not retained
    std::vector<std::vector<double>> kill_times;    // per replica (optional)
    std::vector<CostLedger> costs;                  // per replica
    std::vector<std::vector<double>> final_positions; // per replica terminal snapshot
    std::vector<std::vector<uint8_t>> final_alive;
    std::vector<std::vector<std::vector<double>>> checkpoint_positions; // [replica][checkpoint]
    std::vector<std::vector<std::vector<uint8_t>>> checkpoint_alive;
    std::vector<double> mass_mean, mass_se;         // across replicas, per node
    std::vector<double> zeta_mean_mean, zeta_mean_se;
};

// Run `replicas` independent copies across `workers` threads.  Replica r is
// a pure function of (spec, r): the schedule cannot change any number.
ReplicaAggregate run_replicas(const RunSpec& spec, int replicas, int workers);

// Kolmogorov-Smirnov two-sample statistic and the alpha-level rejection
// threshold sqrt(-ln(alpha/2)/2) * sqrt((n1+n2)/(n1*n2)).
double ks_two_sample(std::vector<double> a, std::vector<double> b);
double ks_threshold(size_t n1, size_t n2, double alpha);

} // namespace kbl
