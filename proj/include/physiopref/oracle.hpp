#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "physiopref/seq.hpp"

namespace physio {

// One self-avoiding conformation on the 2D square lattice, in canonical
// form: the first step is +x and the first turn, if any, is +y. This picks
// exactly one representative per rotation/reflection class.
struct Conformation {
    std::vector<std::pair<int, int>> coords;
};

// Exact ground-state report for one sequence.
//   e_min:  -1 per non-consecutive H-H lattice contact, minimized over all
//           canonical conformations (<= 0).
//   g:      number of canonical conformations attaining e_min.
//   n_conf: number of canonical self-avoiding walks of this length.
struct FoldReport {
    int e_min = 0;
    std::uint64_t g = 0;
    std::uint64_t n_conf = 0;

    double e_per_res(std::size_t length) const {
        return static_cast<double>(e_min) / static_cast<double>(length);
    }
};

struct FoldabilityParams {
    std::uint64_t g_max = 4;
    std::optional<int> e_thresh_override;  // default: -(L/5) - 1

    int e_thresh(std::size_t length) const {
        if (e_thresh_override) return *e_thresh_override;
        return -static_cast<int>(length / 5) - 1;
    }
};

// A sequence folds iff its ground state is both low-energy and nearly
// unique: g <= g_max and e_min <= e_thresh(L).
bool is_foldable(const FoldReport& r, std::size_t length, const FoldabilityParams& p = {});

// Deterministic sequence -> FoldReport scorer.
class EnergyOracle {
public:
    virtual ~EnergyOracle() = default;
    virtual const char* name() const = 0;
    virtual FoldReport score(const Sequence& s) const = 0;
    virtual std::size_t max_length() const = 0;
};

// Number of canonical self-avoiding walks with length-1 steps. Memoized
// per length; the raw 4-direction walk count is 8 * canonical - 4.
std::uint64_t enumerate_saws(std::size_t length, std::size_t l_max = 14);

// Exhaustive HP-model oracle. Scoring enumerates canonical conformations
// depth-first with a partial-contact upper bound prune for (e_min, g);
// n_conf comes from the unpruned walk count. Reports are memoized by HP
// pattern; the memo behaves as a single atomic map under concurrent use.
class LatticeOracle : public EnergyOracle {
public:
    explicit LatticeOracle(std::size_t l_max = 14) : l_max_(l_max) {}

    const char* name() const override { return "lattice"; }
    FoldReport score(const Sequence& s) const override;
    std::size_t max_length() const override { return l_max_; }

    // Cache persistence, one record per line: pattern,e_min,g,n_conf.
    void load_cache(const std::string& path);
    void save_cache(const std::string& path) const;
    std::size_t cache_size() const;

private:
    std::size_t l_max_;
    mutable std::mutex mu_;
    mutable std::unordered_map<std::string, FoldReport> cache_;
};

// O(L) stand-in for fast pipeline tests: e_min = -(number of adjacent H,H
// pairs in the string), g = 1, n_conf = 1.
class SurrogateOracle : public EnergyOracle {
public:
    const char* name() const override { return "surrogate"; }
    FoldReport score(const Sequence& s) const override;
    std::size_t max_length() const override { return 4096; }
};

std::unique_ptr<EnergyOracle> make_oracle(const std::string& kind, std::size_t l_max = 14);

}  // namespace physio
