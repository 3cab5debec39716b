#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "physiopref/errors.hpp"

namespace physio {

enum class AlphabetMode { HP2, AA20 };

// Residue alphabet. Two are supported: the two-letter hydrophobic/polar
// alphabet "HP" and the twenty amino acids in one-letter order
// "ACDEFGHIKLMNPQRSTVWY". Each symbol carries a hydrophobic flag; for AA20
// the flag is the sign of the Kyte-Doolittle hydropathy value (> 0 => H),
// which marks A, C, F, I, L, M, V as hydrophobic.
class Alphabet {
public:
    static const Alphabet& hp2();
    static const Alphabet& aa20();
    static const Alphabet& get(AlphabetMode mode);
    static AlphabetMode mode_from_name(const std::string& name);

    AlphabetMode mode() const { return mode_; }
    std::size_t size() const { return symbols_.size(); }
    const std::string& symbols() const { return symbols_; }
    char symbol(std::size_t idx) const { return symbols_.at(idx); }
    bool hydrophobic(std::size_t idx) const { return hydrophobic_.at(idx); }
    int index_of(char c) const;  // -1 if not in the alphabet
    const char* name() const { return mode_ == AlphabetMode::HP2 ? "HP2" : "AA20"; }

private:
    Alphabet(AlphabetMode mode, std::string symbols, std::vector<bool> hydrophobic);

    AlphabetMode mode_;
    std::string symbols_;
    std::vector<bool> hydrophobic_;
};

// Token sequence over one alphabet. Fixed length >= 2.
struct Sequence {
    AlphabetMode alphabet = AlphabetMode::HP2;
    std::vector<std::uint8_t> tokens;

    Sequence() = default;
    Sequence(AlphabetMode mode, std::vector<std::uint8_t> toks);

    std::size_t length() const { return tokens.size(); }
    std::string str() const;

    static Sequence parse(const std::string& text, AlphabetMode mode);

    bool operator==(const Sequence& other) const {
        return alphabet == other.alphabet && tokens == other.tokens;
    }
    bool operator<(const Sequence& other) const { return tokens < other.tokens; }
};

// Fraction of matching positions. Requires equal lengths and alphabets.
double hamming_identity(const Sequence& a, const Sequence& b);

// Max of hamming_identity(q, r) over refs. Requires a nonempty set.
double max_identity_to_set(const Sequence& q, const std::vector<Sequence>& refs);

// Projects any supported sequence to the HP alphabet via the hydrophobic
// flags. Identity on HP2 input.
Sequence to_hp_pattern(const Sequence& s);

}  // namespace physio
