#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "physiopref/oracle.hpp"
#include "physiopref/policy.hpp"

namespace physio {

enum class SeqLabel { stable, unstable, hard_negative };

const char* label_name(SeqLabel l);

// One pool entry: sequence, exact fold report, reference confidence
// (length-normalized log-likelihood) and stability label.
struct ScoredSequence {
    Sequence seq;
    FoldReport report;
    double confidence = 0.0;
    bool foldable = false;
    SeqLabel label = SeqLabel::unstable;
};

enum class PairingStrategy { max_gap, random };

PairingStrategy pairing_from_name(const std::string& name);
const char* pairing_name(PairingStrategy p);

struct PreferencePair {
    Sequence y_w, y_l;
    int e_w = 0, e_l = 0;
    double delta_e = 0.0;
    PairingStrategy pairing = PairingStrategy::max_gap;

    bool operator==(const PreferencePair& o) const {
        return y_w == o.y_w && y_l == o.y_l && e_w == o.e_w && e_l == o.e_l &&
               delta_e == o.delta_e && pairing == o.pairing;
    }
};

struct DatasetHeader {
    int format = 1;
    AlphabetMode alphabet = AlphabetMode::HP2;
    std::size_t length = 12;
    std::string oracle_name = "lattice";
    std::uint64_t seed = 0;
    double identity_threshold = 0.75;
};

struct DatasetSplit {
    DatasetHeader header;
    std::vector<PreferencePair> train, val, test;

    std::size_t total() const { return train.size() + val.size() + test.size(); }
};

// Samples from the reference until n unique sequences are collected, folds
// and labels each one. Generation is sequential on the given rng; folding
// may fan out over threads with results merged in item order.
std::vector<ScoredSequence> generate_fold_score(const PolicyModel& ref, const EnergyOracle& oracle,
                                                std::size_t n, Rng& rng,
                                                const FoldabilityParams& foldability = {},
                                                std::size_t threads = 1);

// Relabels unfoldable entries whose confidence reaches the empirical q_conf
// quantile (linear interpolation) as hard negatives. Returns their indices.
std::vector<std::size_t> mine_hard_negatives(std::vector<ScoredSequence>& pool, double q_conf);

struct PairBuildOptions {
    PairingStrategy strategy = PairingStrategy::max_gap;
    std::size_t count = 5000;
    bool allow_zero_delta = false;    // keep pairs with e_w >= e_l (weight ablation)
    bool hard_negatives_only = false;  // restrict losers to mined hard negatives
};

// max_gap: winners are cycled in pool order; each is matched to the unused
// loser with the largest energy gap; equal gaps prefer hard negatives, then
// the lexicographically smaller sequence; the unused set resets when
// exhausted. random: uniform stable x non-stable pairing.
std::vector<PreferencePair> build_pairs(const std::vector<ScoredSequence>& pool,
                                        const PairBuildOptions& opts, Rng& rng);

struct SplitFractions {
    double train = 0.90;
    double val = 0.05;
    double test = 0.05;
};

// Single-linkage clusters (identity >= threshold links two pairs, via any of
// their sequences) are assigned whole to splits by largest remaining
// deficit, in rng-shuffled order. Fails when some positive-fraction split
// would stay empty, naming the largest cluster.
DatasetSplit split_by_identity(const std::vector<PreferencePair>& pairs,
                               const DatasetHeader& header, double threshold,
                               const SplitFractions& fractions, Rng& rng);

// Line-delimited persistence: one JSON header line, then one record per
// pair. load validates structure and the delta_e arithmetic and reports the
// offending line number on failure.
void save_dataset(const DatasetSplit& split, const std::string& path);
DatasetSplit load_dataset(const std::string& path);

// All sequences appearing in the given pairs (winners then losers, deduped).
std::vector<Sequence> pair_sequences(const std::vector<PreferencePair>& pairs);

}  // namespace physio
