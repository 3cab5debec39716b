#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "naive_oracle.hpp"
#include "physiopref/numerics.hpp"
#include "physiopref/oracle.hpp"

using namespace physio;

namespace {

Sequence hp(const std::string& s) { return Sequence::parse(s, AlphabetMode::HP2); }

std::string hp_string(unsigned bits, std::size_t len) {
    std::string s(len, 'P');
    for (std::size_t i = 0; i < len; ++i) {
        if (bits & (1u << i)) s[i] = 'H';
    }
    return s;
}

}  // namespace

TEST_CASE("canonical SAW counts against the raw recursion") {
    // raw = 8 * canonical - 4: only the straight walk has a nontrivial
    // stabilizer (orbit of size 4).
    CHECK(enumerate_saws(2) == 1);
    CHECK(enumerate_saws(3) == 2);
    CHECK(naive::raw_walk_count(2) == 4);
    CHECK(naive::raw_walk_count(3) == 12);
    CHECK(naive::raw_walk_count(4) == 36);
    for (std::size_t len = 2; len <= 6; ++len) {
        CHECK(8 * enumerate_saws(len) - 4 == naive::raw_walk_count(len));
    }
    CHECK_THROWS_AS(enumerate_saws(1), UsageError);
    CHECK_THROWS_AS(enumerate_saws(15), CapabilityError);
    CHECK_THROWS_WITH_AS(enumerate_saws(20, 14), doctest::Contains("l_max=14"), CapabilityError);
}

TEST_CASE("fold basics") {
    LatticeOracle oracle;
    CHECK(oracle.score(hp("PPPP")).e_min == 0);
    CHECK(oracle.score(hp("HH")).e_min == 0);  // consecutive pair is excluded

    const FoldReport r = oracle.score(hp("HPPH"));
    CHECK(r.e_min == -1);
    CHECK(r.g == 1);  // the U-bend
    CHECK(r.n_conf == 5);
    CHECK(r.e_per_res(4) == doctest::Approx(-0.25));

    // sequences without two H residues attain zero energy everywhere
    const FoldReport p = oracle.score(hp("PPHPP"));
    CHECK(p.e_min == 0);
    CHECK(p.g == p.n_conf);

    CHECK_THROWS_AS(oracle.score(hp(std::string(15, 'H'))), CapabilityError);
}

TEST_CASE("oracle equivalence with naive brute force at L=4..6") {
    LatticeOracle oracle;
    for (std::size_t len = 4; len <= 6; ++len) {
        for (unsigned bits = 0; bits < (1u << len); ++bits) {
            const std::string pattern = hp_string(bits, len);
            const FoldReport fast = oracle.score(hp(pattern));
            const naive::NaiveReport slow = naive::fold(pattern);
            CAPTURE(pattern);
            CHECK(fast.e_min == slow.e_min);
            CHECK(fast.g == slow.g);
        }
    }
}

TEST_CASE("H-substitution monotonicity and reversal symmetry") {
    LatticeOracle oracle;
    Rng rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        std::string s(8, 'P');
        for (auto& c : s) c = rng.below(2) ? 'H' : 'P';
        const FoldReport base = oracle.score(hp(s));

        // flipping one P to H can only deepen the ground state
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == 'H') continue;
            std::string t = s;
            t[i] = 'H';
            CHECK(oracle.score(hp(t)).e_min <= base.e_min);
        }

        std::string rev(s.rbegin(), s.rend());
        const FoldReport r = oracle.score(hp(rev));
        CHECK(r.e_min == base.e_min);
        CHECK(r.g == base.g);
    }
}

TEST_CASE("is_foldable thresholds") {
    FoldReport degenerate;
    degenerate.e_min = 0;
    degenerate.g = 36;
    degenerate.n_conf = 36;
    CHECK_FALSE(is_foldable(degenerate, 12));

    FoldReport good;
    good.e_min = -4;
    good.g = 1;
    good.n_conf = 15000;
    CHECK(is_foldable(good, 12));  // defaults: g_max 4, e_thresh(12) = -3

    // HPPH boundary: default e_thresh(4) = -1 admits it, a stricter one rejects
    LatticeOracle oracle;
    const FoldReport r = oracle.score(hp("HPPH"));
    CHECK(is_foldable(r, 4));
    FoldabilityParams strict;
    strict.e_thresh_override = -2;
    CHECK_FALSE(is_foldable(r, 4, strict));
    FoldabilityParams loose;
    loose.e_thresh_override = 0;
    CHECK(is_foldable(r, 4, loose));
}

TEST_CASE("surrogate oracle") {
    SurrogateOracle s;
    CHECK(s.score(hp("HHHH")).e_min == -3);
    CHECK(s.score(hp("HPHP")).e_min == 0);
    CHECK(s.score(hp("HHPHH")).e_min == -2);
    CHECK(s.score(hp("HHHH")).g == 1);
    CHECK(s.score(hp("HHHH")).n_conf == 1);
}

TEST_CASE("cache transparency and persistence") {
    LatticeOracle oracle;
    const FoldReport first = oracle.score(hp("HHPPHH"));
    const FoldReport second = oracle.score(hp("HHPPHH"));  // cached
    CHECK(first.e_min == second.e_min);
    CHECK(first.g == second.g);
    CHECK(first.n_conf == second.n_conf);
    CHECK(oracle.cache_size() >= 1);

    const std::string path = (std::filesystem::temp_directory_path() / "pp_oracle_cache.csv").string();
    oracle.save_cache(path);

    LatticeOracle warm;
    warm.load_cache(path);
    CHECK(warm.cache_size() == oracle.cache_size());
    const FoldReport warm_r = warm.score(hp("HHPPHH"));
    CHECK(warm_r.e_min == first.e_min);
    CHECK(warm_r.g == first.g);

    // malformed cache lines are rejected with the line number
    std::ofstream bad(path, std::ios::trunc);
    bad << "HHPP,-1,1\n";
    bad.close();
    LatticeOracle broken;
    CHECK_THROWS_WITH_AS(broken.load_cache(path), doctest::Contains("line 1"), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("AA20 sequences fold through their HP pattern") {
    LatticeOracle oracle;
    const Sequence ile = Sequence::parse("IPPI", AlphabetMode::AA20);  // maps to HPPH
    const FoldReport r = oracle.score(ile);
    CHECK(r.e_min == -1);
    CHECK(r.g == 1);
}
