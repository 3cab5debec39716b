#include "physiopref/oracle.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace physio {

namespace {

constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

// Board big enough for any walk of l_max steps starting at the center.
struct Board {
    int side;
    int center;
    std::vector<std::int16_t> cell;  // residue index + 1, 0 = empty

    explicit Board(std::size_t length)
        : side(2 * static_cast<int>(length) + 3),
          center(static_cast<int>(length) + 1),
          cell(static_cast<std::size_t>(side) * side, 0) {}

    int idx(int x, int y) const { return (y + center) * side + (x + center); }
};

struct SawCounter {
    Board board;
    std::size_t length;
    std::uint64_t count = 0;

    explicit SawCounter(std::size_t len) : board(len), length(len) {}

    // placed = residues on the board; turned = whether a non-+x step was taken.
    void dfs(int x, int y, std::size_t placed, bool turned) {
        if (placed == length) {
            ++count;
            return;
        }
        for (int d = 0; d < 4; ++d) {
            if (!turned && d != 0 && d != 1) continue;  // first turn must be +y
            const int nx = x + kDx[d];
            const int ny = y + kDy[d];
            if (board.cell[board.idx(nx, ny)]) continue;
            board.cell[board.idx(nx, ny)] = static_cast<std::int16_t>(placed + 1);
            dfs(nx, ny, placed + 1, turned || d != 0);
            board.cell[board.idx(nx, ny)] = 0;
        }
    }

    std::uint64_t run() {
        board.cell[board.idx(0, 0)] = 1;
        board.cell[board.idx(1, 0)] = 2;
        dfs(1, 0, 2, false);
        return count;
    }
};

// Branch-and-bound ground-state search over canonical conformations.
// Prunes a subtree only when even 3 new contacts per remaining H cannot
// reach the current best, so the optimum count stays exact.
struct FoldSearch {
    Board board;
    const std::vector<std::uint8_t>& hp;  // 0 = H, 1 = P
    std::size_t length;
    std::vector<int> suffix_h;  // H residues at positions >= i
    std::vector<std::pair<int, int>> pos;
    int best = 0;  // max contacts found so far
    std::uint64_t best_count = 0;

    explicit FoldSearch(const std::vector<std::uint8_t>& pattern)
        : board(pattern.size()), hp(pattern), length(pattern.size()), pos(pattern.size()) {
        suffix_h.assign(length + 1, 0);
        for (std::size_t i = length; i-- > 0;) {
            suffix_h[i] = suffix_h[i + 1] + (hp[i] == 0 ? 1 : 0);
        }
    }

    int contacts_at(int x, int y, std::size_t i) const {
        // New contacts created by placing residue i at (x, y): adjacent
        // occupied H cells other than residue i-1.
        if (hp[i] != 0) return 0;
        int c = 0;
        for (int d = 0; d < 4; ++d) {
            const std::int16_t occ = board.cell[board.idx(x + kDx[d], y + kDy[d])];
            if (occ == 0) continue;
            const std::size_t j = static_cast<std::size_t>(occ - 1);
            if (j + 1 == i) continue;  // chain bond
            if (hp[j] == 0) ++c;
        }
        return c;
    }

    void dfs(int x, int y, std::size_t placed, bool turned, int contacts) {
        if (placed == length) {
            if (contacts > best) {
                best = contacts;
                best_count = 1;
            } else if (contacts == best) {
                ++best_count;
            }
            return;
        }
        if (contacts + 3 * suffix_h[placed] < best) return;
        for (int d = 0; d < 4; ++d) {
            if (!turned && d != 0 && d != 1) continue;
            const int nx = x + kDx[d];
            const int ny = y + kDy[d];
            if (board.cell[board.idx(nx, ny)]) continue;
            const int gained = contacts_at(nx, ny, placed);
            board.cell[board.idx(nx, ny)] = static_cast<std::int16_t>(placed + 1);
            pos[placed] = {nx, ny};
            dfs(nx, ny, placed + 1, turned || d != 0, contacts + gained);
            board.cell[board.idx(nx, ny)] = 0;
        }
    }

    void run() {
        board.cell[board.idx(0, 0)] = 1;
        board.cell[board.idx(1, 0)] = 2;
        pos[0] = {0, 0};
        pos[1] = {1, 0};
        const int first = contacts_at(1, 0, 1);  // always 0; kept for clarity
        dfs(1, 0, 2, false, first);
    }
};

}  // namespace

bool is_foldable(const FoldReport& r, std::size_t length, const FoldabilityParams& p) {
    return r.g <= p.g_max && r.e_min <= p.e_thresh(length);
}

std::uint64_t enumerate_saws(std::size_t length, std::size_t l_max) {
    if (length < 2) throw UsageError("enumerate_saws: length must be >= 2");
    if (length > l_max) {
        throw CapabilityError("enumerate_saws: length " + std::to_string(length) +
                              " exceeds enumeration limit l_max=" + std::to_string(l_max));
    }
    static std::mutex memo_mu;
    static std::map<std::size_t, std::uint64_t> memo;
    {
        std::lock_guard<std::mutex> lock(memo_mu);
        auto it = memo.find(length);
        if (it != memo.end()) return it->second;
    }
    SawCounter counter(length);
    const std::uint64_t n = counter.run();
    std::lock_guard<std::mutex> lock(memo_mu);
    memo[length] = n;
    return n;
}

FoldReport LatticeOracle::score(const Sequence& s) const {
    if (s.length() > l_max_) {
        throw CapabilityError("lattice oracle: length " + std::to_string(s.length()) +
                              " exceeds enumeration limit l_max=" + std::to_string(l_max_));
    }
    const Sequence hp = to_hp_pattern(s);
    const std::string key = hp.str();
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }

    FoldReport report;
    report.n_conf = enumerate_saws(s.length(), l_max_);
    const std::size_t h_count =
        static_cast<std::size_t>(std::count(hp.tokens.begin(), hp.tokens.end(), 0));
    if (h_count < 2) {
        // No contact is possible; every conformation attains zero energy.
        report.e_min = 0;
        report.g = report.n_conf;
    } else {
        FoldSearch search(hp.tokens);
        search.run();
        report.e_min = -search.best;
        report.g = search.best_count;
    }

    std::lock_guard<std::mutex> lock(mu_);
    cache_[key] = report;  // duplicates under concurrency write identical values
    return report;
}

void LatticeOracle::load_cache(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open oracle cache file: " + path);
    std::string line;
    std::size_t lineno = 0;
    std::lock_guard<std::mutex> lock(mu_);
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::string pattern;
        long long e_min = 0;
        unsigned long long g = 0, n_conf = 0;
        std::istringstream ss(line);
        if (!std::getline(ss, pattern, ',')) {
            throw DataError("oracle cache line " + std::to_string(lineno) + ": malformed record");
        }
        char c1 = 0, c2 = 0;
        if (!(ss >> e_min >> c1 >> g >> c2 >> n_conf) || c1 != ',' || c2 != ',') {
            throw DataError("oracle cache line " + std::to_string(lineno) + ": malformed record");
        }
        for (char c : pattern) {
            if (c != 'H' && c != 'P') {
                throw DataError("oracle cache line " + std::to_string(lineno) +
                                ": bad pattern '" + pattern + "'");
            }
        }
        if (e_min > 0 || g == 0 || g > n_conf) {
            throw DataError("oracle cache line " + std::to_string(lineno) +
                            ": inconsistent report for '" + pattern + "'");
        }
        FoldReport r;
        r.e_min = static_cast<int>(e_min);
        r.g = g;
        r.n_conf = n_conf;
        cache_[pattern] = r;
    }
}

void LatticeOracle::save_cache(const std::string& path) const {
    std::vector<std::pair<std::string, FoldReport>> entries;
    {
        std::lock_guard<std::mutex> lock(mu_);
        entries.assign(cache_.begin(), cache_.end());
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write oracle cache file: " + path);
    for (const auto& [pattern, r] : entries) {
        out << pattern << ',' << r.e_min << ',' << r.g << ',' << r.n_conf << '\n';
    }
}

std::size_t LatticeOracle::cache_size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.size();
}

FoldReport SurrogateOracle::score(const Sequence& s) const {
    const Sequence hp = to_hp_pattern(s);
    int adjacent_hh = 0;
    for (std::size_t i = 0; i + 1 < hp.length(); ++i) {
        if (hp.tokens[i] == 0 && hp.tokens[i + 1] == 0) ++adjacent_hh;
    }
    FoldReport r;
    r.e_min = -adjacent_hh;
    r.g = 1;
    r.n_conf = 1;
    return r;
}

std::unique_ptr<EnergyOracle> make_oracle(const std::string& kind, std::size_t l_max) {
    if (kind == "lattice") return std::make_unique<LatticeOracle>(l_max);
    if (kind == "surrogate") return std::make_unique<SurrogateOracle>();
    throw ConfigError("unknown oracle '" + kind + "' (expected lattice or surrogate)");
}

}  // namespace physio
