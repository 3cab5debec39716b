#include "physiopref/prefdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace physio {

const char* label_name(SeqLabel l) {
    switch (l) {
        case SeqLabel::stable: return "stable";
        case SeqLabel::unstable: return "unstable";
        case SeqLabel::hard_negative: return "hard_negative";
    }
    return "?";
}

PairingStrategy pairing_from_name(const std::string& name) {
    if (name == "max_gap") return PairingStrategy::max_gap;
    if (name == "random") return PairingStrategy::random;
    throw ConfigError("unknown pairing '" + name + "' (expected max_gap or random)");
}

const char* pairing_name(PairingStrategy p) {
    return p == PairingStrategy::max_gap ? "max_gap" : "random";
}

std::vector<ScoredSequence> generate_fold_score(const PolicyModel& ref, const EnergyOracle& oracle,
                                                std::size_t n, Rng& rng,
                                                const FoldabilityParams& foldability,
                                                std::size_t threads) {
    if (n < 1) throw UsageError("generate_fold_score: n must be >= 1");
    const std::size_t length = ref.config().length;
    if (length > oracle.max_length()) {
        throw CapabilityError("generate_fold_score: sequence length " + std::to_string(length) +
                              " exceeds oracle limit " + std::to_string(oracle.max_length()));
    }

    std::vector<Sequence> unique;
    unique.reserve(n);
    std::unordered_set<std::string> seen;
    const std::size_t max_attempts = 200 * n + 1000;
    std::size_t attempts = 0;
    while (unique.size() < n && attempts < max_attempts) {
        Sequence s = ref.sample(1, rng)[0];
        ++attempts;
        if (seen.insert(s.str()).second) unique.push_back(std::move(s));
    }
    if (unique.size() < n) {
        throw CapabilityError("generate_fold_score: only " + std::to_string(unique.size()) +
                              " unique sequences found after " + std::to_string(max_attempts) +
                              " draws (requested " + std::to_string(n) + ")");
    }

    std::vector<ScoredSequence> pool(n);
    auto score_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            ScoredSequence& e = pool[i];
            e.seq = unique[i];
            e.report = oracle.score(e.seq);
            e.confidence = ref.log_prob(e.seq) / static_cast<double>(length);
            e.foldable = is_foldable(e.report, length, foldability);
            e.label = e.foldable ? SeqLabel::stable : SeqLabel::unstable;
        }
    };
    if (threads <= 1 || n < 2 * threads) {
        score_range(0, n);
    } else {
        std::vector<std::thread> workers;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t lo = t * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            workers.emplace_back(score_range, lo, hi);
        }
        for (auto& w : workers) w.join();
    }
    return pool;
}

namespace {

// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw UsageError("quantile: empty sample");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    const double h = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

std::vector<std::size_t> mine_hard_negatives(std::vector<ScoredSequence>& pool, double q_conf) {
    if (pool.empty()) throw UsageError("mine_hard_negatives: empty pool");
    if (!(q_conf > 0.0 && q_conf < 1.0)) {
        throw ConfigError("mine_hard_negatives: q_conf must lie in (0,1)");
    }
    std::vector<double> confs;
    confs.reserve(pool.size());
    for (const auto& e : pool) confs.push_back(e.confidence);
    const double cut = quantile(std::move(confs), q_conf);

    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!pool[i].foldable && pool[i].confidence >= cut) {
            pool[i].label = SeqLabel::hard_negative;
            picked.push_back(i);
        }
    }
    return picked;
}

std::vector<PreferencePair> build_pairs(const std::vector<ScoredSequence>& pool,
                                        const PairBuildOptions& opts, Rng& rng) {
    if (opts.count < 1) throw UsageError("build_pairs: count must be >= 1");
    std::vector<std::size_t> winners, hard, other;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        switch (pool[i].label) {
            case SeqLabel::stable: winners.push_back(i); break;
            case SeqLabel::hard_negative: hard.push_back(i); break;
            case SeqLabel::unstable: other.push_back(i); break;
        }
    }
    if (winners.empty() || (hard.empty() && other.empty())) {
        throw DataError("build_pairs: pool needs at least one stable and one non-stable entry");
    }

    auto admissible = [&](std::size_t w, std::size_t l) {
        if (opts.allow_zero_delta) return true;
        return pool[w].report.e_min < pool[l].report.e_min;
    };
    auto make_pair = [&](std::size_t w, std::size_t l) {
        PreferencePair p;
        p.y_w = pool[w].seq;
        p.y_l = pool[l].seq;
        p.e_w = pool[w].report.e_min;
        p.e_l = pool[l].report.e_min;
        p.delta_e = std::max(0.0, static_cast<double>(p.e_l - p.e_w));
        p.pairing = opts.strategy;
        return p;
    };

    std::vector<PreferencePair> pairs;
    pairs.reserve(opts.count);

    if (opts.strategy == PairingStrategy::random) {
        std::vector<std::size_t> losers = hard;
        losers.insert(losers.end(), other.begin(), other.end());
        std::size_t failures = 0;
        const std::size_t max_failures = 1000 * opts.count;
        while (pairs.size() < opts.count) {
            const std::size_t w = winners[rng.below(winners.size())];
            const std::size_t l = losers[rng.below(losers.size())];
            if (!admissible(w, l)) {
                if (++failures > max_failures) break;
                continue;
            }
            pairs.push_back(make_pair(w, l));
        }
    } else {
        // Winners are swept in pool order; within a sweep each takes the
        // still-unused loser with the largest gap, so every sweep pairs the
        // winner set against the top of the gap distribution. Gap ties
        // prefer hard negatives, then the smaller sequence string.
        std::vector<std::size_t> losers;
        if (opts.hard_negatives_only && !hard.empty()) {
            losers = hard;
        } else {
            losers = hard;
            losers.insert(losers.end(), other.begin(), other.end());
        }
        auto is_hard = [&](std::size_t li) { return li < hard.size(); };
        std::vector<char> used(losers.size(), 0);
        std::size_t used_count = 0;
        std::size_t wi = 0;
        std::size_t made_this_sweep = 0;
        while (pairs.size() < opts.count) {
            if (wi % winners.size() == 0) {
                if (wi > 0 && made_this_sweep == 0) break;  // nothing admissible remains
                std::fill(used.begin(), used.end(), 0);
                used_count = 0;
                made_this_sweep = 0;
            }
            const std::size_t w = winners[wi % winners.size()];
            ++wi;
            if (used_count == losers.size()) {  // mid-sweep exhaustion
                std::fill(used.begin(), used.end(), 0);
                used_count = 0;
            }
            std::ptrdiff_t best = -1;
            for (std::size_t li = 0; li < losers.size(); ++li) {
                if (used[li] || !admissible(w, losers[li])) continue;
                if (best >= 0) {
                    const auto bi = static_cast<std::size_t>(best);
                    const int e_best = pool[losers[bi]].report.e_min;
                    const int e_li = pool[losers[li]].report.e_min;
                    if (e_li < e_best) continue;  // smaller gap
                    if (e_li == e_best) {
                        if (is_hard(bi) && !is_hard(li)) continue;
                        if (is_hard(bi) == is_hard(li) &&
                            !(pool[losers[li]].seq.str() < pool[losers[bi]].seq.str())) {
                            continue;
                        }
                    }
                }
                best = static_cast<std::ptrdiff_t>(li);
            }
            if (best < 0) continue;  // this winner has no admissible unused loser
            used[static_cast<std::size_t>(best)] = 1;
            ++used_count;
            ++made_this_sweep;
            pairs.push_back(make_pair(w, losers[static_cast<std::size_t>(best)]));
        }
    }

    if (pairs.empty()) {
        throw DataError("build_pairs: no admissible pair (all energy gaps are zero)");
    }
    return pairs;
}

DatasetSplit split_by_identity(const std::vector<PreferencePair>& pairs,
                               const DatasetHeader& header, double threshold,
                               const SplitFractions& fractions, Rng& rng) {
    if (pairs.empty()) throw UsageError("split_by_identity: no pairs");
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ConfigError("split_by_identity: threshold must lie in (0,1]");
    }
    const double fsum = fractions.train + fractions.val + fractions.test;
    if (std::abs(fsum - 1.0) > 1e-9) {
        throw ConfigError("split_by_identity: fractions must sum to 1");
    }

    // Union-find over the distinct sequences, then over pairs through their
    // members. Linking at identity >= threshold guarantees the published
    // invariant (no cross-split identity > threshold) with margin.
    std::vector<Sequence> seqs;
    std::unordered_map<std::string, std::size_t> seq_id;
    auto intern = [&](const Sequence& s) {
        auto [it, inserted] = seq_id.emplace(s.str(), seqs.size());
        if (inserted) seqs.push_back(s);
        return it->second;
    };
    std::vector<std::pair<std::size_t, std::size_t>> pair_members;
    pair_members.reserve(pairs.size());
    for (const auto& p : pairs) pair_members.emplace_back(intern(p.y_w), intern(p.y_l));

    std::vector<std::size_t> parent(seqs.size() + pairs.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };

    for (std::size_t i = 0; i < seqs.size(); ++i) {
        for (std::size_t j = i + 1; j < seqs.size(); ++j) {
            if (hamming_identity(seqs[i], seqs[j]) >= threshold) unite(i, j);
        }
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        unite(seqs.size() + p, pair_members[p].first);
        unite(pair_members[p].first, pair_members[p].second);
    }

    std::unordered_map<std::size_t, std::vector<std::size_t>> clusters;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        clusters[find(seqs.size() + p)].push_back(p);
    }
    std::vector<std::vector<std::size_t>> cluster_list;
    cluster_list.reserve(clusters.size());
    for (auto& [root, members] : clusters) cluster_list.push_back(std::move(members));
    // Deterministic base order (by smallest member), then a seeded shuffle.
    std::sort(cluster_list.begin(), cluster_list.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    rng.shuffle(cluster_list);

    std::size_t largest = 0;
    for (const auto& c : cluster_list) largest = std::max(largest, c.size());

    const double n = static_cast<double>(pairs.size());
    const double targets[3] = {fractions.train * n, fractions.val * n, fractions.test * n};
    double assigned[3] = {0.0, 0.0, 0.0};
    std::vector<std::vector<std::size_t>> split_pairs(3);
    for (const auto& cluster : cluster_list) {
        int best = 0;
        double best_deficit = targets[0] - assigned[0];
        for (int s = 1; s < 3; ++s) {
            const double deficit = targets[s] - assigned[s];
            if (deficit > best_deficit) {
                best = s;
                best_deficit = deficit;
            }
        }
        assigned[best] += static_cast<double>(cluster.size());
        for (auto p : cluster) split_pairs[best].push_back(p);
    }

    const double fracs[3] = {fractions.train, fractions.val, fractions.test};
    for (int s = 0; s < 3; ++s) {
        if (fracs[s] > 0.0 && split_pairs[s].empty()) {
            throw DataError("split_by_identity: degenerate split at threshold " +
                            std::to_string(threshold) + " (largest cluster holds " +
                            std::to_string(largest) + " of " + std::to_string(pairs.size()) +
                            " pairs)");
        }
    }

    DatasetSplit out;
    out.header = header;
    out.header.identity_threshold = threshold;
    for (int s = 0; s < 3; ++s) {
        std::sort(split_pairs[s].begin(), split_pairs[s].end());
        auto& dst = s == 0 ? out.train : (s == 1 ? out.val : out.test);
        dst.reserve(split_pairs[s].size());
        for (auto p : split_pairs[s]) dst.push_back(pairs[p]);
    }
    return out;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json pair_to_json(const PreferencePair& p, const char* split) {
    ordered_json j;
    j["yw"] = p.y_w.str();
    j["yl"] = p.y_l.str();
    j["ew"] = p.e_w;
    j["el"] = p.e_l;
    j["delta_e"] = p.delta_e;
    j["pairing"] = pairing_name(p.pairing);
    j["split"] = split;
    return j;
}

}  // namespace

void save_dataset(const DatasetSplit& split, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write dataset file: " + path);
    ordered_json header;
    header["format"] = split.header.format;
    header["alphabet"] = Alphabet::get(split.header.alphabet).name();
    header["length"] = split.header.length;
    header["oracle"] = split.header.oracle_name;
    header["seed"] = split.header.seed;
    header["identity_threshold"] = split.header.identity_threshold;
    out << header.dump() << '\n';
    for (const auto& p : split.train) out << pair_to_json(p, "train").dump() << '\n';
    for (const auto& p : split.val) out << pair_to_json(p, "val").dump() << '\n';
    for (const auto& p : split.test) out << pair_to_json(p, "test").dump() << '\n';
    if (!out) throw DataError("dataset write failed: " + path);
}

DatasetSplit load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::string line;
    std::size_t lineno = 0;

    auto fail = [&](const std::string& msg) -> DataError {
        return DataError(path + ":" + std::to_string(lineno) + ": " + msg);
    };

    DatasetSplit split;
    if (!std::getline(in, line)) throw DataError(path + ": empty dataset file");
    lineno = 1;
    try {
        const auto h = nlohmann::json::parse(line);
        split.header.format = h.at("format").get<int>();
        if (split.header.format != 1) throw fail("unsupported dataset format version");
        split.header.alphabet = Alphabet::mode_from_name(h.at("alphabet").get<std::string>());
        split.header.length = h.at("length").get<std::size_t>();
        split.header.oracle_name = h.at("oracle").get<std::string>();
        split.header.seed = h.at("seed").get<std::uint64_t>();
        split.header.identity_threshold = h.at("identity_threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw fail(std::string("bad header: ") + e.what());
    }

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        PreferencePair p;
        std::string split_name;
        try {
            const auto j = nlohmann::json::parse(line);
            p.y_w = Sequence::parse(j.at("yw").get<std::string>(), split.header.alphabet);
            p.y_l = Sequence::parse(j.at("yl").get<std::string>(), split.header.alphabet);
            p.e_w = j.at("ew").get<int>();
            p.e_l = j.at("el").get<int>();
            p.delta_e = j.at("delta_e").get<double>();
            p.pairing = pairing_from_name(j.at("pairing").get<std::string>());
            split_name = j.at("split").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw fail(std::string("bad record: ") + e.what());
        } catch (const UsageError& e) {
            throw fail(std::string("bad record: ") + e.what());
        }
        if (p.y_w.length() != split.header.length || p.y_l.length() != split.header.length) {
            throw fail("sequence length does not match header");
        }
        if (p.delta_e != std::max(0.0, static_cast<double>(p.e_l - p.e_w))) {
            throw fail("delta_e inconsistent with energies");
        }
        if (split_name == "train") split.train.push_back(std::move(p));
        else if (split_name == "val") split.val.push_back(std::move(p));
        else if (split_name == "test") split.test.push_back(std::move(p));
        else throw fail("unknown split '" + split_name + "'");
    }
    return split;
}

std::vector<Sequence> pair_sequences(const std::vector<PreferencePair>& pairs) {
    std::vector<Sequence> out;
    std::unordered_set<std::string> seen;
    for (const auto& p : pairs) {
        if (seen.insert(p.y_w.str()).second) out.push_back(p.y_w);
    }
    for (const auto& p : pairs) {
        if (seen.insert(p.y_l.str()).second) out.push_back(p.y_l);
    }
    return out;
}

}  // namespace physio
