#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "physiopref/numerics.hpp"
#include "physiopref/seq.hpp"

namespace physio {

enum class ArchKind { NGRAM, ATTN1 };
enum class Role { trainable, frozen_reference };

ArchKind arch_from_name(const std::string& name);
const char* arch_name(ArchKind a);

struct PolicyConfig {
    AlphabetMode alphabet = AlphabetMode::HP2;
    std::size_t length = 12;
    ArchKind arch = ArchKind::NGRAM;
    std::size_t ngram_k = 4;       // context window (NGRAM)
    std::size_t hidden_dim = 32;   // hidden layer width (NGRAM)
    std::size_t embed_dim = 8;     // token embedding size (NGRAM)
    std::size_t d_model = 32;      // residual width (ATTN1)
    std::size_t heads = 2;         // attention heads (ATTN1)
    std::uint64_t seed = 0;
    double init_scale = 0.02;      // 0 gives an exactly uniform policy

    void validate() const;
    std::size_t vocab() const { return Alphabet::get(alphabet).size(); }
};

// Autoregressive categorical policy over fixed-length sequences. Position 0
// conditions on a learned begin-of-sequence embedding only; there is no end
// token. Next-token probabilities are strictly positive everywhere, so
// log_prob is finite for every sequence of the right shape.
//
// NGRAM: the last k tokens (BOS-padded) are embedded, concatenated, pushed
// through one tanh layer, and projected to logits.
// ATTN1: a single causal self-attention block (residual attention + residual
// tanh MLP over d_model) followed by an output projection.
class PolicyModel {
public:
    PolicyModel(PolicyConfig cfg, Role role);

    const PolicyConfig& config() const { return cfg_; }
    Role role() const { return role_; }
    bool frozen() const { return role_ == Role::frozen_reference; }
    const ParameterSet& params() const { return params_; }
    ParameterSet& mutable_params();

    // Sum over positions of log p(token_t | prefix). Finite, <= 0.
    double log_prob(const Sequence& s) const;

    // Log next-token distribution given the tokens generated so far.
    std::vector<double> next_token_logp(std::span<const std::uint8_t> prefix) const;

    // grads += coeff * d log_prob(s) / d theta. Trainable models only.
    void accumulate_grad_log_prob(const Sequence& s, double coeff, ParameterSet& grads) const;
    ParameterSet grad_log_prob(const Sequence& s) const;

    // n i.i.d. ancestral samples, deterministic given the rng state.
    std::vector<Sequence> sample(std::size_t n, Rng& rng) const;

    // Probabilities of all |A|^length sequences in lexicographic token
    // order. Requires |A|^length <= 65536.
    std::vector<double> enumerate_distribution() const;

    // All sequences in the same lexicographic order as enumerate_distribution.
    std::vector<Sequence> enumerate_sequences() const;

    PolicyModel with_role(Role role) const;

    void save(const std::string& path) const;
    static PolicyModel load(const std::string& path);

private:
    void init_params();
    double forward(const Sequence& s, double coeff, ParameterSet* grads) const;

    PolicyConfig cfg_;
    Role role_;
    ParameterSet params_;
};

constexpr std::size_t kEnumerationCap = 65536;

// |A|^length, throwing a capability error above the enumeration cap.
std::size_t enumeration_size(AlphabetMode alphabet, std::size_t length);

}  // namespace physio
