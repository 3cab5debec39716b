#include "physiopref/seq.hpp"

#include <algorithm>

namespace physio {

namespace {

// Kyte-Doolittle hydropathy > 0 for the AA20 order ACDEFGHIKLMNPQRSTVWY:
// A 1.8, C 2.5, D -3.5, E -3.5, F 2.8, G -0.4, H -3.2, I 4.5, K -3.9,
// L 3.8, M 1.9, N -3.5, P -1.6, Q -3.5, R -4.5, S -0.8, T -0.7, V 4.2,
// W -0.9, Y -1.3.
std::vector<bool> aa20_hydrophobic() {
    return {true,  true,  false, false, true,  false, false, true,  false, true,
            true,  false, false, false, false, false, false, true,  false, false};
}

}  // namespace

Alphabet::Alphabet(AlphabetMode mode, std::string symbols, std::vector<bool> hydrophobic)
    : mode_(mode), symbols_(std::move(symbols)), hydrophobic_(std::move(hydrophobic)) {}

const Alphabet& Alphabet::hp2() {
    static const Alphabet a(AlphabetMode::HP2, "HP", {true, false});
    return a;
}

const Alphabet& Alphabet::aa20() {
    static const Alphabet a(AlphabetMode::AA20, "ACDEFGHIKLMNPQRSTVWY", aa20_hydrophobic());
    return a;
}

const Alphabet& Alphabet::get(AlphabetMode mode) {
    return mode == AlphabetMode::HP2 ? hp2() : aa20();
}

AlphabetMode Alphabet::mode_from_name(const std::string& name) {
    if (name == "HP2") return AlphabetMode::HP2;
    if (name == "AA20") return AlphabetMode::AA20;
    throw ConfigError("unknown alphabet '" + name + "' (expected HP2 or AA20)");
}

int Alphabet::index_of(char c) const {
    auto pos = symbols_.find(c);
    return pos == std::string::npos ? -1 : static_cast<int>(pos);
}

Sequence::Sequence(AlphabetMode mode, std::vector<std::uint8_t> toks)
    : alphabet(mode), tokens(std::move(toks)) {
    const auto& a = Alphabet::get(mode);
    if (tokens.size() < 2) throw UsageError("sequence length must be >= 2");
    for (auto t : tokens) {
        if (t >= a.size()) throw UsageError("token index out of range for alphabet");
    }
}

std::string Sequence::str() const {
    const auto& a = Alphabet::get(alphabet);
    std::string out;
    out.reserve(tokens.size());
    for (auto t : tokens) out.push_back(a.symbol(t));
    return out;
}

Sequence Sequence::parse(const std::string& text, AlphabetMode mode) {
    const auto& a = Alphabet::get(mode);
    std::vector<std::uint8_t> toks;
    toks.reserve(text.size());
    for (char c : text) {
        int idx = a.index_of(c);
        if (idx < 0) {
            throw UsageError(std::string("symbol '") + c + "' not in alphabet " + a.name());
        }
        toks.push_back(static_cast<std::uint8_t>(idx));
    }
    return Sequence(mode, std::move(toks));
}

double hamming_identity(const Sequence& a, const Sequence& b) {
    if (a.alphabet != b.alphabet) throw UsageError("hamming_identity: alphabet mismatch");
    if (a.length() != b.length()) throw UsageError("hamming_identity: length mismatch");
    std::size_t matches = 0;
    for (std::size_t i = 0; i < a.length(); ++i) {
        if (a.tokens[i] == b.tokens[i]) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(a.length());
}

double max_identity_to_set(const Sequence& q, const std::vector<Sequence>& refs) {
    if (refs.empty()) throw UsageError("max_identity_to_set: empty reference set");
    double best = 0.0;
    for (const auto& r : refs) best = std::max(best, hamming_identity(q, r));
    return best;
}

Sequence to_hp_pattern(const Sequence& s) {
    if (s.alphabet == AlphabetMode::HP2) return s;
    const auto& a = Alphabet::get(s.alphabet);
    std::vector<std::uint8_t> toks(s.length());
    for (std::size_t i = 0; i < s.length(); ++i) {
        toks[i] = a.hydrophobic(s.tokens[i]) ? 0 : 1;  // HP2: H=0, P=1
    }
    return Sequence(AlphabetMode::HP2, std::move(toks));
}

}  // namespace physio
