#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "physiopref/oracle.hpp"
#include "physiopref/policy.hpp"

namespace physio {

struct EvalReport {
    std::string method;
    std::uint64_t seed = 0;
    double energy_per_res = 0.0;
    double foldability = 0.0;
    double perplexity = 0.0;       // under the reference model
    double identity_mean = 0.0;    // mean over samples of max identity to train set
    double identity_max = 0.0;
    double kl = 0.0;               // KL(policy || ref), exact when enumerable
    double spearman_energy = 0.0;  // rank corr of log-prob vs -energy on the batch
    std::size_t sample_count = 0;
};

extern const char* const kResultsHeader;  // method,seed,energy_per_res,foldability,ppl,max_id,kl,spearman

std::string format_results_row(const EvalReport& r);

// All metrics from one shared sample batch; deterministic given the rng.
EvalReport evaluate(const PolicyModel& policy, const PolicyModel& ref, const EnergyOracle& oracle,
                    const std::vector<Sequence>& train_set, std::size_t n, Rng& rng,
                    const FoldabilityParams& foldability = {});

// Spearman rank correlation with average-rank tie handling. Returns 0 when
// either side is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

double median(std::vector<double> values);

// Quadrants of the energy/confidence plane. Axes are medians; "high" means
// strictly above. Index 0 is the hallucination quadrant.
enum Quadrant { kHighConfHighEnergy = 0, kHighConfLowEnergy, kLowConfHighEnergy, kLowConfLowEnergy };

const char* quadrant_name(int q);

struct PlaneAxes {
    double energy_median = 0.0;
    double confidence_median = 0.0;
};

struct PlaneRow {
    Sequence seq;
    double energy_per_res = 0.0;
    double confidence = 0.0;  // mean per-token log-likelihood under the sampled policy
    int quadrant = 0;
};

struct Plane {
    std::vector<PlaneRow> rows;
    std::array<std::size_t, 4> quadrant_counts{};
    PlaneAxes axes;
};

// Samples n sequences and places them in the plane. Without explicit axes
// the medians of this plane's own rows are used (the reference convention);
// pass the reference axes to keep quadrants comparable across methods.
Plane energy_confidence_plane(const PolicyModel& policy, const EnergyOracle& oracle, std::size_t n,
                              Rng& rng, std::optional<PlaneAxes> axes = std::nullopt);

struct BoltzmannFit {
    double kl = 0.0;        // KL(policy || boltzmann)
    double spearman = 0.0;  // rank corr of log-prob vs -energy over the full space
};

// Exact comparison against p(s) proportional to exp(-E(s)/T) over the whole
// sequence space.
BoltzmannFit boltzmann_fit(const PolicyModel& policy, const EnergyOracle& oracle, double temperature);

}  // namespace physio
