#include "physiopref/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "physiopref/trainer.hpp"

namespace physio {

const char* const kResultsHeader = "method,seed,energy_per_res,foldability,ppl,max_id,kl,spearman";

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::string format_results_row(const EvalReport& r) {
    std::string out = r.method;
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += fmt(r.energy_per_res);
    out += ',';
    out += fmt(r.foldability);
    out += ',';
    out += fmt(r.perplexity);
    out += ',';
    out += fmt(r.identity_mean);
    out += ',';
    out += fmt(r.kl);
    out += ',';
    out += fmt(r.spearman_energy);
    return out;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw UsageError("spearman: length mismatch");
    if (xs.size() < 2) throw UsageError("spearman: need at least two points");
    const std::vector<double> rx = average_ranks(xs);
    const std::vector<double> ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = rx[i] - mx;
        const double dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;  // constant ranks carry no order
    return sxy / std::sqrt(sxx * syy);
}

double median(std::vector<double> values) {
    if (values.empty()) throw UsageError("median: empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

const char* quadrant_name(int q) {
    switch (q) {
        case kHighConfHighEnergy: return "hc_he";
        case kHighConfLowEnergy: return "hc_le";
        case kLowConfHighEnergy: return "lc_he";
        case kLowConfLowEnergy: return "lc_le";
    }
    return "?";
}

EvalReport evaluate(const PolicyModel& policy, const PolicyModel& ref, const EnergyOracle& oracle,
                    const std::vector<Sequence>& train_set, std::size_t n, Rng& rng,
                    const FoldabilityParams& foldability) {
    if (n < 1) throw UsageError("evaluate: n must be >= 1");
    const std::size_t length = policy.config().length;
    if (length > oracle.max_length()) {
        throw CapabilityError("evaluate: sequence length " + std::to_string(length) +
                              " exceeds oracle limit " + std::to_string(oracle.max_length()));
    }
    const std::vector<Sequence> samples = policy.sample(n, rng);

    std::unordered_map<std::string, FoldReport> fold_memo;
    std::unordered_map<std::string, double> id_memo;

    EvalReport r;
    r.sample_count = n;
    double lp_ref_total = 0.0;
    std::vector<double> lps(n), neg_energy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Sequence& s = samples[i];
        auto [it, fresh] = fold_memo.try_emplace(s.str());
        if (fresh) it->second = oracle.score(s);
        const FoldReport& fr = it->second;
        r.energy_per_res += fr.e_per_res(length);
        r.foldability += is_foldable(fr, length, foldability) ? 1.0 : 0.0;
        lp_ref_total += ref.log_prob(s);
        lps[i] = policy.log_prob(s);
        neg_energy[i] = -static_cast<double>(fr.e_min);
        if (!train_set.empty()) {
            auto [jt, fresh_id] = id_memo.try_emplace(s.str());
            if (fresh_id) jt->second = max_identity_to_set(s, train_set);
            r.identity_mean += jt->second;
            r.identity_max = std::max(r.identity_max, jt->second);
        }
    }
    const double dn = static_cast<double>(n);
    r.energy_per_res /= dn;
    r.foldability /= dn;
    r.identity_mean /= dn;
    r.perplexity = std::exp(-lp_ref_total / (dn * static_cast<double>(length)));
    r.spearman_energy = n >= 2 ? spearman(lps, neg_energy) : 0.0;

    bool exact = true;
    try {
        enumeration_size(policy.config().alphabet, length);
    } catch (const CapabilityError&) {
        exact = false;
    }
    if (exact) {
        r.kl = kl_to_ref(policy, ref, KlMode::exact);
    } else {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += lps[i] - ref.log_prob(samples[i]);
        r.kl = acc / dn;
    }
    return r;
}

Plane energy_confidence_plane(const PolicyModel& policy, const EnergyOracle& oracle, std::size_t n,
                              Rng& rng, std::optional<PlaneAxes> axes) {
    if (n < 4) throw UsageError("energy_confidence_plane: n must be >= 4");
    const std::size_t length = policy.config().length;
    const std::vector<Sequence> samples = policy.sample(n, rng);

    Plane plane;
    plane.rows.reserve(n);
    std::unordered_map<std::string, FoldReport> memo;
    for (const auto& s : samples) {
        auto [it, fresh] = memo.try_emplace(s.str());
        if (fresh) it->second = oracle.score(s);
        PlaneRow row;
        row.seq = s;
        row.energy_per_res = it->second.e_per_res(length);
        row.confidence = policy.log_prob(s) / static_cast<double>(length);
        plane.rows.push_back(std::move(row));
    }

    if (axes) {
        plane.axes = *axes;
    } else {
        std::vector<double> es, cs;
        es.reserve(n);
        cs.reserve(n);
        for (const auto& row : plane.rows) {
            es.push_back(row.energy_per_res);
            cs.push_back(row.confidence);
        }
        plane.axes.energy_median = median(std::move(es));
        plane.axes.confidence_median = median(std::move(cs));
    }

    for (auto& row : plane.rows) {
        const bool high_conf = row.confidence > plane.axes.confidence_median;
        const bool high_energy = row.energy_per_res > plane.axes.energy_median;
        row.quadrant = high_conf ? (high_energy ? kHighConfHighEnergy : kHighConfLowEnergy)
                                 : (high_energy ? kLowConfHighEnergy : kLowConfLowEnergy);
        plane.quadrant_counts[static_cast<std::size_t>(row.quadrant)] += 1;
    }
    return plane;
}

BoltzmannFit boltzmann_fit(const PolicyModel& policy, const EnergyOracle& oracle,
                           double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("boltzmann_fit: temperature must be > 0");
    const std::vector<Sequence> seqs = policy.enumerate_sequences();  // caps the space size
    const std::size_t n = seqs.size();

    std::vector<double> lp(n), neg_energy(n);
    for (std::size_t i = 0; i < n; ++i) {
        lp[i] = policy.log_prob(seqs[i]);
        neg_energy[i] = -static_cast<double>(oracle.score(seqs[i]).e_min);
    }
    // log Z by max-shifted summation.
    double mx = -1e300;
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, neg_energy[i] / temperature);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(neg_energy[i] / temperature - mx);
    const double log_z = mx + std::log(z);

    BoltzmannFit fit;
    for (std::size_t i = 0; i < n; ++i) {
        const double log_pb = neg_energy[i] / temperature - log_z;
        fit.kl += std::exp(lp[i]) * (lp[i] - log_pb);
    }
    fit.spearman = spearman(lp, neg_energy);
    return fit;
}

}  // namespace physio
