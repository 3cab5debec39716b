#include "physiopref/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace physio {

namespace {

constexpr char kCheckpointMagic[8] = {'P', 'P', 'C', 'K', '0', '0', '0', '1'};

struct NgramWork {
    std::vector<double> x, h, logits, logp, dlogits, dh, dpre, dx;
};

// Forward (and optional backward) for one position. ctx holds the k most
// recent token indices, newest first, BOS-padded. Returns logp row.
const std::vector<double>& ngram_position(const PolicyConfig& cfg, const ParameterSet& params,
                                          std::span<const std::size_t> ctx, NgramWork& w) {
    const std::size_t e = cfg.embed_dim;
    const std::size_t k = cfg.ngram_k;
    const Tensor& embed = params.get("embed");
    const Tensor& w1 = params.get("w1");
    const Tensor& b1 = params.get("b1");
    const Tensor& w2 = params.get("w2");
    const Tensor& b2 = params.get("b2");

    w.x.resize(k * e);
    for (std::size_t j = 0; j < k; ++j) {
        const double* row = &embed.data[ctx[j] * e];
        std::copy(row, row + e, w.x.begin() + static_cast<std::ptrdiff_t>(j * e));
    }
    w.h.resize(cfg.hidden_dim);
    matvec(w1, w.x, w.h);
    for (std::size_t j = 0; j < w.h.size(); ++j) w.h[j] = std::tanh(w.h[j] + b1.data[j]);
    w.logits.resize(cfg.vocab());
    matvec(w2, w.h, w.logits);
    for (std::size_t v = 0; v < w.logits.size(); ++v) w.logits[v] += b2.data[v];
    w.logp = log_softmax(w.logits);
    return w.logp;
}

void ngram_position_backward(const PolicyConfig& cfg, const ParameterSet& params,
                             std::span<const std::size_t> ctx, std::size_t target, double coeff,
                             NgramWork& w, ParameterSet& grads) {
    const std::size_t e = cfg.embed_dim;
    const std::size_t k = cfg.ngram_k;
    const std::size_t vocab = cfg.vocab();

    w.dlogits.assign(vocab, 0.0);
    for (std::size_t v = 0; v < vocab; ++v) {
        const double p = std::exp(w.logp[v]);
        w.dlogits[v] = coeff * ((v == target ? 1.0 : 0.0) - p);
    }
    Tensor& db2 = grads.get("b2");
    for (std::size_t v = 0; v < vocab; ++v) db2.data[v] += w.dlogits[v];

    w.dh.assign(cfg.hidden_dim, 0.0);
    matvec_backward(params.get("w2"), w.h, w.dlogits, grads.get("w2"), w.dh);

    w.dpre.resize(cfg.hidden_dim);
    Tensor& db1 = grads.get("b1");
    for (std::size_t j = 0; j < cfg.hidden_dim; ++j) {
        w.dpre[j] = w.dh[j] * (1.0 - w.h[j] * w.h[j]);
        db1.data[j] += w.dpre[j];
    }

    w.dx.assign(k * e, 0.0);
    matvec_backward(params.get("w1"), w.x, w.dpre, grads.get("w1"), w.dx);

    Tensor& dembed = grads.get("embed");
    for (std::size_t j = 0; j < k; ++j) {
        double* row = &dembed.data[ctx[j] * e];
        for (std::size_t i = 0; i < e; ++i) row[i] += w.dx[j * e + i];
    }
}

void ngram_context(const PolicyConfig& cfg, std::span<const std::uint8_t> prefix, std::size_t t,
                   std::vector<std::size_t>& ctx) {
    const std::size_t bos = cfg.vocab();
    ctx.resize(cfg.ngram_k);
    for (std::size_t j = 0; j < cfg.ngram_k; ++j) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) - 1 - static_cast<std::ptrdiff_t>(j);
        ctx[j] = src >= 0 ? prefix[static_cast<std::size_t>(src)] : bos;
    }
}

// Full-sequence activations for the attention block.
struct AttnTrace {
    std::size_t n = 0;  // positions in this forward pass
    std::vector<double> x0, q, k, v, ctx, x1, u, x2;  // (n, D) or (n, M)
    std::vector<double> probs;                        // (heads, n, n) causal rows
    std::vector<double> logp;                         // (n, V)
};

// Inputs are BOS followed by the first n-1 tokens; row t of the output is
// the next-token distribution after t tokens.
void attn_forward(const PolicyConfig& cfg, const ParameterSet& params,
                  std::span<const std::uint8_t> tokens, std::size_t n, AttnTrace& tr) {
    const std::size_t d = cfg.d_model;
    const std::size_t nh = cfg.heads;
    const std::size_t dh = d / nh;
    const std::size_t m = 2 * d;
    const std::size_t vocab = cfg.vocab();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    const Tensor& tok_emb = params.get("tok_emb");
    const Tensor& pos_emb = params.get("pos_emb");
    const Tensor& wq = params.get("wq");
    const Tensor& wk = params.get("wk");
    const Tensor& wv = params.get("wv");
    const Tensor& wo = params.get("wo");
    const Tensor& w1 = params.get("w1");
    const Tensor& b1 = params.get("b1");
    const Tensor& w2 = params.get("w2");
    const Tensor& b2 = params.get("b2");
    const Tensor& wout = params.get("wout");
    const Tensor& bout = params.get("bout");

    tr.n = n;
    tr.x0.assign(n * d, 0.0);
    tr.q.assign(n * d, 0.0);
    tr.k.assign(n * d, 0.0);
    tr.v.assign(n * d, 0.0);
    tr.ctx.assign(n * d, 0.0);
    tr.x1.assign(n * d, 0.0);
    tr.u.assign(n * m, 0.0);
    tr.x2.assign(n * d, 0.0);
    tr.probs.assign(nh * n * n, 0.0);
    tr.logp.assign(n * vocab, 0.0);

    const std::size_t bos = vocab;
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t z = t == 0 ? bos : tokens[t - 1];
        for (std::size_t i = 0; i < d; ++i) {
            tr.x0[t * d + i] = tok_emb.data[z * d + i] + pos_emb.data[t * d + i];
        }
        matvec(wq, std::span(tr.x0).subspan(t * d, d), std::span(tr.q).subspan(t * d, d));
        matvec(wk, std::span(tr.x0).subspan(t * d, d), std::span(tr.k).subspan(t * d, d));
        matvec(wv, std::span(tr.x0).subspan(t * d, d), std::span(tr.v).subspan(t * d, d));
    }

    std::vector<double> scores;
    std::vector<double> attn_out(d);
    std::vector<double> mlp_pre(m);
    std::vector<double> mlp_out(d);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t h = 0; h < nh; ++h) {
            scores.assign(t + 1, 0.0);
            for (std::size_t s = 0; s <= t; ++s) {
                double acc = 0.0;
                for (std::size_t i = 0; i < dh; ++i) {
                    acc += tr.q[t * d + h * dh + i] * tr.k[s * d + h * dh + i];
                }
                scores[s] = acc * scale;
            }
            const std::vector<double> lp = log_softmax(scores);
            for (std::size_t s = 0; s <= t; ++s) {
                const double p = std::exp(lp[s]);
                tr.probs[(h * n + t) * n + s] = p;
                for (std::size_t i = 0; i < dh; ++i) {
                    tr.ctx[t * d + h * dh + i] += p * tr.v[s * d + h * dh + i];
                }
            }
        }
        matvec(wo, std::span(tr.ctx).subspan(t * d, d), attn_out);
        for (std::size_t i = 0; i < d; ++i) tr.x1[t * d + i] = tr.x0[t * d + i] + attn_out[i];

        matvec(w1, std::span(tr.x1).subspan(t * d, d), mlp_pre);
        for (std::size_t j = 0; j < m; ++j) {
            tr.u[t * m + j] = std::tanh(mlp_pre[j] + b1.data[j]);
        }
        matvec(w2, std::span(tr.u).subspan(t * m, m), mlp_out);
        for (std::size_t i = 0; i < d; ++i) {
            tr.x2[t * d + i] = tr.x1[t * d + i] + mlp_out[i] + b2.data[i];
        }

        std::vector<double> logits(vocab);
        matvec(wout, std::span(tr.x2).subspan(t * d, d), logits);
        for (std::size_t vtok = 0; vtok < vocab; ++vtok) logits[vtok] += bout.data[vtok];
        const std::vector<double> lp = log_softmax(logits);
        std::copy(lp.begin(), lp.end(), tr.logp.begin() + static_cast<std::ptrdiff_t>(t * vocab));
    }
}

void attn_backward(const PolicyConfig& cfg, const ParameterSet& params,
                   std::span<const std::uint8_t> tokens, const AttnTrace& tr, double coeff,
                   ParameterSet& grads) {
    const std::size_t n = tr.n;
    const std::size_t d = cfg.d_model;
    const std::size_t nh = cfg.heads;
    const std::size_t dh = d / nh;
    const std::size_t m = 2 * d;
    const std::size_t vocab = cfg.vocab();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<double> dx2(n * d, 0.0), dx1(n * d, 0.0), dx0(n * d, 0.0);
    std::vector<double> dq(n * d, 0.0), dk(n * d, 0.0), dv(n * d, 0.0), dctx(n * d, 0.0);

    Tensor& dbout = grads.get("bout");
    Tensor& db2 = grads.get("b2");
    Tensor& db1 = grads.get("b1");

    std::vector<double> dlogits(vocab);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t target = tokens[t];
        for (std::size_t vtok = 0; vtok < vocab; ++vtok) {
            const double p = std::exp(tr.logp[t * vocab + vtok]);
            dlogits[vtok] = coeff * ((vtok == target ? 1.0 : 0.0) - p);
            dbout.data[vtok] += dlogits[vtok];
        }
        matvec_backward(params.get("wout"), std::span(tr.x2).subspan(t * d, d), dlogits,
                        grads.get("wout"), std::span(dx2).subspan(t * d, d));
    }

    // MLP sublayer (residual).
    std::vector<double> du(m), dpre(m);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < d; ++i) {
            dx1[t * d + i] += dx2[t * d + i];
            db2.data[i] += dx2[t * d + i];
        }
        du.assign(m, 0.0);
        matvec_backward(params.get("w2"), std::span(tr.u).subspan(t * m, m),
                        std::span(dx2).subspan(t * d, d), grads.get("w2"), du);
        for (std::size_t j = 0; j < m; ++j) {
            dpre[j] = du[j] * (1.0 - tr.u[t * m + j] * tr.u[t * m + j]);
            db1.data[j] += dpre[j];
        }
        matvec_backward(params.get("w1"), std::span(tr.x1).subspan(t * d, d), dpre,
                        grads.get("w1"), std::span(dx1).subspan(t * d, d));
    }

    // Attention sublayer (residual).
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < d; ++i) dx0[t * d + i] += dx1[t * d + i];
        matvec_backward(params.get("wo"), std::span(tr.ctx).subspan(t * d, d),
                        std::span(dx1).subspan(t * d, d), grads.get("wo"),
                        std::span(dctx).subspan(t * d, d));
    }
    std::vector<double> dp, ds;
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t h = 0; h < nh; ++h) {
            dp.assign(t + 1, 0.0);
            for (std::size_t s = 0; s <= t; ++s) {
                double acc = 0.0;
                for (std::size_t i = 0; i < dh; ++i) {
                    acc += dctx[t * d + h * dh + i] * tr.v[s * d + h * dh + i];
                }
                dp[s] = acc;
                const double p = tr.probs[(h * n + t) * n + s];
                for (std::size_t i = 0; i < dh; ++i) {
                    dv[s * d + h * dh + i] += p * dctx[t * d + h * dh + i];
                }
            }
            double dot = 0.0;
            for (std::size_t s = 0; s <= t; ++s) dot += dp[s] * tr.probs[(h * n + t) * n + s];
            ds.assign(t + 1, 0.0);
            for (std::size_t s = 0; s <= t; ++s) {
                ds[s] = tr.probs[(h * n + t) * n + s] * (dp[s] - dot);
            }
            for (std::size_t s = 0; s <= t; ++s) {
                const double g = ds[s] * scale;
                for (std::size_t i = 0; i < dh; ++i) {
                    dq[t * d + h * dh + i] += g * tr.k[s * d + h * dh + i];
                    dk[s * d + h * dh + i] += g * tr.q[t * d + h * dh + i];
                }
            }
        }
    }
    for (std::size_t t = 0; t < n; ++t) {
        matvec_backward(params.get("wq"), std::span(tr.x0).subspan(t * d, d),
                        std::span(dq).subspan(t * d, d), grads.get("wq"),
                        std::span(dx0).subspan(t * d, d));
        matvec_backward(params.get("wk"), std::span(tr.x0).subspan(t * d, d),
                        std::span(dk).subspan(t * d, d), grads.get("wk"),
                        std::span(dx0).subspan(t * d, d));
        matvec_backward(params.get("wv"), std::span(tr.x0).subspan(t * d, d),
                        std::span(dv).subspan(t * d, d), grads.get("wv"),
                        std::span(dx0).subspan(t * d, d));
    }

    Tensor& dtok = grads.get("tok_emb");
    Tensor& dpos = grads.get("pos_emb");
    const std::size_t bos = vocab;
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t z = t == 0 ? bos : tokens[t - 1];
        for (std::size_t i = 0; i < d; ++i) {
            dtok.data[z * d + i] += dx0[t * d + i];
            dpos.data[t * d + i] += dx0[t * d + i];
        }
    }
}

}  // namespace

ArchKind arch_from_name(const std::string& name) {
    if (name == "ngram") return ArchKind::NGRAM;
    if (name == "attn1") return ArchKind::ATTN1;
    throw ConfigError("unknown architecture '" + name + "' (expected ngram or attn1)");
}

const char* arch_name(ArchKind a) { return a == ArchKind::NGRAM ? "ngram" : "attn1"; }

void PolicyConfig::validate() const {
    if (length < 2) throw ConfigError("policy: length must be >= 2");
    if (arch == ArchKind::NGRAM) {
        if (ngram_k < 1) throw ConfigError("policy: ngram_k must be >= 1");
        if (hidden_dim < 1 || embed_dim < 1) throw ConfigError("policy: dims must be >= 1");
    } else {
        if (d_model < 1 || heads < 1) throw ConfigError("policy: dims must be >= 1");
        if (d_model % heads != 0) throw ConfigError("policy: d_model must be divisible by heads");
    }
    if (!(init_scale >= 0.0)) throw ConfigError("policy: init_scale must be >= 0");
}

PolicyModel::PolicyModel(PolicyConfig cfg, Role role) : cfg_(cfg), role_(role) {
    cfg_.validate();
    init_params();
}

void PolicyModel::init_params() {
    const std::size_t v = cfg_.vocab();
    if (cfg_.arch == ArchKind::NGRAM) {
        params_.add("embed", {v + 1, cfg_.embed_dim});
        params_.add("w1", {cfg_.hidden_dim, cfg_.ngram_k * cfg_.embed_dim});
        params_.add("b1", {cfg_.hidden_dim});
        params_.add("w2", {v, cfg_.hidden_dim});
        params_.add("b2", {v});
    } else {
        const std::size_t d = cfg_.d_model;
        params_.add("tok_emb", {v + 1, d});
        params_.add("pos_emb", {cfg_.length, d});
        params_.add("wq", {d, d});
        params_.add("wk", {d, d});
        params_.add("wv", {d, d});
        params_.add("wo", {d, d});
        params_.add("w1", {2 * d, d});
        params_.add("b1", {2 * d});
        params_.add("w2", {d, 2 * d});
        params_.add("b2", {d});
        params_.add("wout", {v, d});
        params_.add("bout", {v});
    }
    if (cfg_.init_scale > 0.0) {
        Rng rng(cfg_.seed);
        for (std::size_t i = 0; i < params_.tensor_count(); ++i) {
            const std::string& name = params_.name(i);
            if (name[0] == 'b') continue;  // biases start at zero
            for (auto& x : params_.tensor(i).data) x = cfg_.init_scale * rng.normal();
        }
    }
}

ParameterSet& PolicyModel::mutable_params() {
    if (frozen()) throw UsageError("attempt to modify a frozen reference model");
    return params_;
}

double PolicyModel::forward(const Sequence& s, double coeff, ParameterSet* grads) const {
    if (s.alphabet != cfg_.alphabet) throw UsageError("log_prob: alphabet mismatch");
    if (s.length() != cfg_.length) throw UsageError("log_prob: length mismatch");
    double total = 0.0;
    if (cfg_.arch == ArchKind::NGRAM) {
        NgramWork w;
        std::vector<std::size_t> ctx;
        for (std::size_t t = 0; t < cfg_.length; ++t) {
            ngram_context(cfg_, s.tokens, t, ctx);
            const auto& logp = ngram_position(cfg_, params_, ctx, w);
            total += logp[s.tokens[t]];
            if (grads) ngram_position_backward(cfg_, params_, ctx, s.tokens[t], coeff, w, *grads);
        }
    } else {
        AttnTrace tr;
        attn_forward(cfg_, params_, s.tokens, cfg_.length, tr);
        const std::size_t vocab = cfg_.vocab();
        for (std::size_t t = 0; t < cfg_.length; ++t) total += tr.logp[t * vocab + s.tokens[t]];
        if (grads) attn_backward(cfg_, params_, s.tokens, tr, coeff, *grads);
    }
    if (!std::isfinite(total)) throw NumericError("log_prob: non-finite result");
    return total;
}

double PolicyModel::log_prob(const Sequence& s) const { return forward(s, 0.0, nullptr); }

std::vector<double> PolicyModel::next_token_logp(std::span<const std::uint8_t> prefix) const {
    if (prefix.size() >= cfg_.length) throw UsageError("next_token_logp: prefix too long");
    if (cfg_.arch == ArchKind::NGRAM) {
        NgramWork w;
        std::vector<std::size_t> ctx;
        ngram_context(cfg_, prefix, prefix.size(), ctx);
        return ngram_position(cfg_, params_, ctx, w);
    }
    AttnTrace tr;
    attn_forward(cfg_, params_, prefix, prefix.size() + 1, tr);
    const std::size_t vocab = cfg_.vocab();
    std::vector<double> out(vocab);
    for (std::size_t v = 0; v < vocab; ++v) out[v] = tr.logp[prefix.size() * vocab + v];
    return out;
}

void PolicyModel::accumulate_grad_log_prob(const Sequence& s, double coeff,
                                           ParameterSet& grads) const {
    if (frozen()) throw UsageError("gradient requested from a frozen reference model");
    if (!grads.same_layout(params_)) throw UsageError("gradient accumulator layout mismatch");
    forward(s, coeff, &grads);
}

ParameterSet PolicyModel::grad_log_prob(const Sequence& s) const {
    ParameterSet grads = params_.zeros_like();
    accumulate_grad_log_prob(s, 1.0, grads);
    return grads;
}

std::vector<Sequence> PolicyModel::sample(std::size_t n, Rng& rng) const {
    std::vector<Sequence> out;
    out.reserve(n);
    std::vector<std::uint8_t> tokens;
    std::vector<double> probs;
    for (std::size_t i = 0; i < n; ++i) {
        tokens.clear();
        for (std::size_t t = 0; t < cfg_.length; ++t) {
            const std::vector<double> logp = next_token_logp(tokens);
            probs.resize(logp.size());
            for (std::size_t v = 0; v < logp.size(); ++v) probs[v] = std::exp(logp[v]);
            tokens.push_back(static_cast<std::uint8_t>(rng.categorical(probs)));
        }
        out.emplace_back(cfg_.alphabet, tokens);
    }
    return out;
}

std::size_t enumeration_size(AlphabetMode alphabet, std::size_t length) {
    const std::size_t v = Alphabet::get(alphabet).size();
    std::size_t n = 1;
    for (std::size_t i = 0; i < length; ++i) {
        n *= v;
        if (n > kEnumerationCap) {
            throw CapabilityError("sequence space |A|^L exceeds the enumeration cap of " +
                                  std::to_string(kEnumerationCap));
        }
    }
    return n;
}

std::vector<Sequence> PolicyModel::enumerate_sequences() const {
    const std::size_t total = enumeration_size(cfg_.alphabet, cfg_.length);
    const std::size_t v = cfg_.vocab();
    std::vector<Sequence> out;
    out.reserve(total);
    std::vector<std::uint8_t> tokens(cfg_.length, 0);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t rem = i;
        for (std::size_t t = cfg_.length; t-- > 0;) {
            tokens[t] = static_cast<std::uint8_t>(rem % v);
            rem /= v;
        }
        out.emplace_back(cfg_.alphabet, tokens);
    }
    return out;
}

std::vector<double> PolicyModel::enumerate_distribution() const {
    const std::vector<Sequence> seqs = enumerate_sequences();
    std::vector<double> probs(seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) probs[i] = std::exp(log_prob(seqs[i]));
    return probs;
}

PolicyModel PolicyModel::with_role(Role role) const {
    PolicyModel copy = *this;
    copy.role_ = role;
    return copy;
}

void PolicyModel::save(const std::string& path) const {
    std::ostringstream cfg_text;
    cfg_text << std::setprecision(17);
    cfg_text << "alphabet = " << Alphabet::get(cfg_.alphabet).name() << "\n"
             << "length = " << cfg_.length << "\n"
             << "arch = " << arch_name(cfg_.arch) << "\n"
             << "ngram_k = " << cfg_.ngram_k << "\n"
             << "hidden_dim = " << cfg_.hidden_dim << "\n"
             << "embed_dim = " << cfg_.embed_dim << "\n"
             << "d_model = " << cfg_.d_model << "\n"
             << "heads = " << cfg_.heads << "\n"
             << "seed = " << cfg_.seed << "\n"
             << "init_scale = " << cfg_.init_scale << "\n"
             << "role = " << (role_ == Role::trainable ? "trainable" : "frozen_reference")
             << "\n";
    const std::string text = cfg_text.str();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    const std::uint32_t text_len = static_cast<std::uint32_t>(text.size());
    out.write(reinterpret_cast<const char*>(&text_len), sizeof(text_len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    const std::uint32_t n_tensors = static_cast<std::uint32_t>(params_.tensor_count());
    out.write(reinterpret_cast<const char*>(&n_tensors), sizeof(n_tensors));
    for (std::size_t i = 0; i < params_.tensor_count(); ++i) {
        const std::string& name = params_.name(i);
        const Tensor& t = params_.tensor(i);
        const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
        out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        const std::uint32_t ndim = static_cast<std::uint32_t>(t.shape.size());
        out.write(reinterpret_cast<const char*>(&ndim), sizeof(ndim));
        for (auto d : t.shape) {
            const std::uint64_t d64 = d;
            out.write(reinterpret_cast<const char*>(&d64), sizeof(d64));
        }
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!out) throw DataError("checkpoint write failed: " + path);
}

PolicyModel PolicyModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw DataError("not a checkpoint file (bad magic): " + path);
    }
    std::uint32_t text_len = 0;
    in.read(reinterpret_cast<char*>(&text_len), sizeof(text_len));
    std::string text(text_len, '\0');
    in.read(text.data(), text_len);
    if (!in) throw DataError("truncated checkpoint header: " + path);

    PolicyConfig cfg;
    Role role = Role::trainable;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        };
        trim(key);
        trim(val);
        if (key == "alphabet") cfg.alphabet = Alphabet::mode_from_name(val);
        else if (key == "length") cfg.length = std::stoul(val);
        else if (key == "arch") cfg.arch = arch_from_name(val);
        else if (key == "ngram_k") cfg.ngram_k = std::stoul(val);
        else if (key == "hidden_dim") cfg.hidden_dim = std::stoul(val);
        else if (key == "embed_dim") cfg.embed_dim = std::stoul(val);
        else if (key == "d_model") cfg.d_model = std::stoul(val);
        else if (key == "heads") cfg.heads = std::stoul(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "init_scale") cfg.init_scale = std::stod(val);
        else if (key == "role") role = (val == "trainable") ? Role::trainable : Role::frozen_reference;
    }

    PolicyModel model(cfg, role);
    std::uint32_t n_tensors = 0;
    in.read(reinterpret_cast<char*>(&n_tensors), sizeof(n_tensors));
    if (n_tensors != model.params_.tensor_count()) {
        throw DataError("checkpoint tensor count mismatch: " + path);
    }
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        std::uint32_t name_len = 0;
        in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        std::uint32_t ndim = 0;
        in.read(reinterpret_cast<char*>(&ndim), sizeof(ndim));
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) {
            std::uint64_t d64 = 0;
            in.read(reinterpret_cast<char*>(&d64), sizeof(d64));
            d = static_cast<std::size_t>(d64);
        }
        if (!in || name != model.params_.name(i) || shape != model.params_.tensor(i).shape) {
            throw DataError("checkpoint tensor layout mismatch at '" + name + "': " + path);
        }
        Tensor& t = model.params_.tensor(i);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) throw DataError("truncated checkpoint tensor '" + name + "': " + path);
    }
    return model;
}

}  // namespace physio
