#include "physiopref/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace physio {

PsiKind psi_from_name(const std::string& name) {
    if (name == "sigmoid") return PsiKind::sigmoid;
    if (name == "linear") return PsiKind::linear;
    if (name == "const1") return PsiKind::const1;
    throw ConfigError("unknown psi '" + name + "' (expected sigmoid, linear or const1)");
}

const char* psi_name(PsiKind k) {
    switch (k) {
        case PsiKind::sigmoid: return "sigmoid";
        case PsiKind::linear: return "linear";
        case PsiKind::const1: return "const1";
    }
    return "?";
}

void PhysioParams::validate() const {
    if (!(beta > 0.0)) throw ConfigError("physio: beta must be > 0");
    if (!(lambda > 0.0)) throw ConfigError("physio: lambda must be > 0");
    if (!(tau > 0.0)) throw ConfigError("physio: tau must be > 0");
    if (psi == PsiKind::linear && !(linear_scale > 0.0)) {
        throw ConfigError("physio: linear_scale must be > 0");
    }
}

double delta_e(double e_w, double e_l) { return std::max(0.0, e_l - e_w); }

double psi(double d, const PhysioParams& p) {
    if (!(p.tau > 0.0)) throw ConfigError("psi: tau must be > 0");
    return p.lambda * sigmoid((d - p.mu) / p.tau);
}

double linear_psi(double d, double scale) {
    if (!(scale > 0.0)) throw ConfigError("linear_psi: scale must be > 0");
    return scale * d;
}

double psi_weight(double d, const PhysioParams& p) {
    switch (p.psi) {
        case PsiKind::sigmoid: return psi(d, p);
        case PsiKind::linear: return linear_psi(d, p.linear_scale);
        case PsiKind::const1: return 1.0;
    }
    return 1.0;
}

double gradient_gain(double d, double margin, const PhysioParams& p) {
    return psi(d, p) * sigmoid(-margin);
}

PairBatch PairBatch::build(std::span<const Sequence> winners, std::span<const Sequence> losers,
                           std::span<const double> deltas, const PolicyModel& ref) {
    if (winners.size() != losers.size() || winners.size() != deltas.size()) {
        throw UsageError("PairBatch::build: mismatched spans");
    }
    PairBatch batch;
    batch.items.reserve(winners.size());
    for (std::size_t i = 0; i < winners.size(); ++i) {
        PairItem item;
        item.y_w = winners[i];
        item.y_l = losers[i];
        item.delta_e = deltas[i];
        item.lp_w_ref = ref.log_prob(winners[i]);
        item.lp_l_ref = ref.log_prob(losers[i]);
        batch.items.push_back(std::move(item));
    }
    return batch;
}

double implicit_reward_margin(const PairItem& item, const PolicyModel& policy, double beta) {
    const double rw = policy.log_prob(item.y_w) - item.lp_w_ref;
    const double rl = policy.log_prob(item.y_l) - item.lp_l_ref;
    return beta * (rw - rl);
}

namespace {

// Shared margin-loss driver: given per-pair weight w_i and margin m_i,
// loss_i = -w_i log sigma(m_i), d loss_i / d m_i = -w_i sigma(-m_i).
LossResult weighted_margin_loss(const PairBatch& batch, const PolicyModel& policy, double beta,
                                const std::function<double(const PairItem&)>& weight) {
    if (batch.items.empty()) throw UsageError("loss: empty batch");
    const double n = static_cast<double>(batch.items.size());
    LossResult out;
    out.grad = policy.params().zeros_like();
    double total = 0.0;
    for (const auto& item : batch.items) {
        const double lpw = policy.log_prob(item.y_w);
        const double lpl = policy.log_prob(item.y_l);
        const double margin = beta * ((lpw - item.lp_w_ref) - (lpl - item.lp_l_ref));
        const double w = weight(item);
        total += -w * log_sigmoid(margin);
        const double dmargin = -w * sigmoid(-margin) / n;
        policy.accumulate_grad_log_prob(item.y_w, dmargin * beta, out.grad);
        policy.accumulate_grad_log_prob(item.y_l, -dmargin * beta, out.grad);
    }
    out.loss = total / n;
    return out;
}

}  // namespace

LossResult physio_loss(const PairBatch& batch, const PolicyModel& policy, const PhysioParams& p) {
    p.validate();
    return weighted_margin_loss(batch, policy, p.beta,
                                [&p](const PairItem& item) { return psi_weight(item.delta_e, p); });
}

LossResult dpo_loss(const PairBatch& batch, const PolicyModel& policy, double beta) {
    return weighted_margin_loss(batch, policy, beta, [](const PairItem&) { return 1.0; });
}

LossResult ipo_loss(const PairBatch& batch, const PolicyModel& policy, double tau_ipo) {
    if (!(tau_ipo > 0.0)) throw ConfigError("ipo: tau_ipo must be > 0");
    if (batch.items.empty()) throw UsageError("ipo_loss: empty batch");
    const double n = static_cast<double>(batch.items.size());
    const double target = 1.0 / (2.0 * tau_ipo);
    LossResult out;
    out.grad = policy.params().zeros_like();
    double total = 0.0;
    for (const auto& item : batch.items) {
        const double h = (policy.log_prob(item.y_w) - item.lp_w_ref) -
                         (policy.log_prob(item.y_l) - item.lp_l_ref);
        total += (h - target) * (h - target);
        const double dh = 2.0 * (h - target) / n;
        policy.accumulate_grad_log_prob(item.y_w, dh, out.grad);
        policy.accumulate_grad_log_prob(item.y_l, -dh, out.grad);
    }
    out.loss = total / n;
    return out;
}

LossResult kto_loss(const PairBatch& batch, const PolicyModel& policy, double beta,
                    double lambda_w, double lambda_l, std::optional<double> z0_override) {
    if (batch.items.empty()) throw UsageError("kto_loss: empty batch");
    const double n = static_cast<double>(batch.items.size());

    std::vector<double> rw(batch.items.size()), rl(batch.items.size());
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
        rw[i] = policy.log_prob(batch.items[i].y_w) - batch.items[i].lp_w_ref;
        rl[i] = policy.log_prob(batch.items[i].y_l) - batch.items[i].lp_l_ref;
    }
    double z0;
    if (z0_override) {
        z0 = *z0_override;
    } else {
        const double mean_rl = std::accumulate(rl.begin(), rl.end(), 0.0) / n;
        z0 = std::max(0.0, mean_rl);
    }

    LossResult out;
    out.grad = policy.params().zeros_like();
    double total = 0.0;
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
        const double sw = sigmoid(beta * (rw[i] - z0));
        const double sl = sigmoid(beta * (rl[i] - z0));
        total += lambda_w * (1.0 - sw) + lambda_l * sl;
        const double dw = -lambda_w * beta * sw * (1.0 - sw) / n;
        const double dl = lambda_l * beta * sl * (1.0 - sl) / n;
        policy.accumulate_grad_log_prob(batch.items[i].y_w, dw, out.grad);
        policy.accumulate_grad_log_prob(batch.items[i].y_l, dl, out.grad);
    }
    out.loss = total / n;
    return out;
}

LossResult sft_loss(std::span<const Sequence> winners, const PolicyModel& policy) {
    if (winners.empty()) throw UsageError("sft_loss: empty winner set");
    const double n = static_cast<double>(winners.size());
    LossResult out;
    out.grad = policy.params().zeros_like();
    double total = 0.0;
    for (const auto& y : winners) {
        total += -policy.log_prob(y);
        policy.accumulate_grad_log_prob(y, -1.0 / n, out.grad);
    }
    out.loss = total / n;
    return out;
}

RewardModel::RewardModel(PolicyConfig backbone) : cfg_(backbone) {
    cfg_.arch = ArchKind::NGRAM;  // scorer trunk is always the ngram net
    cfg_.validate();
    const std::size_t v = cfg_.vocab();
    params_.add("embed", {v + 1, cfg_.embed_dim});
    params_.add("w1", {cfg_.hidden_dim, cfg_.ngram_k * cfg_.embed_dim});
    params_.add("b1", {cfg_.hidden_dim});
    params_.add("head_w", {cfg_.hidden_dim});
    params_.add("head_b", {1});
    if (cfg_.init_scale > 0.0) {
        Rng rng(cfg_.seed);
        for (std::size_t i = 0; i < params_.tensor_count(); ++i) {
            const std::string& name = params_.name(i);
            if (name == "b1" || name == "head_b") continue;
            for (auto& x : params_.tensor(i).data) x = cfg_.init_scale * rng.normal();
        }
    }
}

namespace {

struct RmTrace {
    std::vector<std::vector<double>> x;  // per position, k*e
    std::vector<std::vector<double>> h;  // per position, hidden
    std::vector<std::vector<std::size_t>> ctx;
};

double rm_forward(const PolicyConfig& cfg, const ParameterSet& params, const Sequence& s,
                  RmTrace* trace) {
    const std::size_t e = cfg.embed_dim;
    const std::size_t k = cfg.ngram_k;
    const std::size_t hidden = cfg.hidden_dim;
    const std::size_t bos = cfg.vocab();
    const Tensor& embed = params.get("embed");
    const Tensor& w1 = params.get("w1");
    const Tensor& b1 = params.get("b1");
    const Tensor& head_w = params.get("head_w");
    const double head_b = params.get("head_b").data[0];

    const std::size_t len = s.length();
    double pooled = 0.0;
    std::vector<double> x(k * e), h(hidden);
    std::vector<std::size_t> ctx(k);
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t src =
                static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(j);
            ctx[j] = src >= 0 ? s.tokens[static_cast<std::size_t>(src)] : bos;
        }
        for (std::size_t j = 0; j < k; ++j) {
            const double* row = &embed.data[ctx[j] * e];
            std::copy(row, row + e, x.begin() + static_cast<std::ptrdiff_t>(j * e));
        }
        matvec(w1, x, h);
        for (std::size_t j = 0; j < hidden; ++j) h[j] = std::tanh(h[j] + b1.data[j]);
        double dot = 0.0;
        for (std::size_t j = 0; j < hidden; ++j) dot += head_w.data[j] * h[j];
        pooled += dot;
        if (trace) {
            trace->x.push_back(x);
            trace->h.push_back(h);
            trace->ctx.push_back(ctx);
        }
    }
    return pooled / static_cast<double>(len) + head_b;
}

}  // namespace

double RewardModel::score(const Sequence& s) const {
    if (s.alphabet != cfg_.alphabet) throw UsageError("reward model: alphabet mismatch");
    return rm_forward(cfg_, params_, s, nullptr);
}

void RewardModel::accumulate_grad(const Sequence& s, double coeff, ParameterSet& grads) const {
    if (s.alphabet != cfg_.alphabet) throw UsageError("reward model: alphabet mismatch");
    RmTrace trace;
    rm_forward(cfg_, params_, s, &trace);

    const std::size_t e = cfg_.embed_dim;
    const std::size_t k = cfg_.ngram_k;
    const std::size_t hidden = cfg_.hidden_dim;
    const double len = static_cast<double>(s.length());
    const Tensor& head_w = params_.get("head_w");

    grads.get("head_b").data[0] += coeff;
    Tensor& dhead = grads.get("head_w");
    Tensor& db1 = grads.get("b1");
    Tensor& dembed = grads.get("embed");
    std::vector<double> dh(hidden), dpre(hidden), dx;
    for (std::size_t t = 0; t < trace.h.size(); ++t) {
        const auto& h = trace.h[t];
        const double c = coeff / len;
        for (std::size_t j = 0; j < hidden; ++j) {
            dhead.data[j] += c * h[j];
            dh[j] = c * head_w.data[j];
            dpre[j] = dh[j] * (1.0 - h[j] * h[j]);
            db1.data[j] += dpre[j];
        }
        dx.assign(k * e, 0.0);
        matvec_backward(params_.get("w1"), trace.x[t], dpre, grads.get("w1"), dx);
        for (std::size_t j = 0; j < k; ++j) {
            double* row = &dembed.data[trace.ctx[t][j] * e];
            for (std::size_t i = 0; i < e; ++i) row[i] += dx[j * e + i];
        }
    }
}

LossResult bt_pair_loss(const PairBatch& batch, const RewardModel& rm) {
    if (batch.items.empty()) throw UsageError("bt_pair_loss: empty batch");
    const double n = static_cast<double>(batch.items.size());
    LossResult out;
    out.grad = rm.params().zeros_like();
    double total = 0.0;
    for (const auto& item : batch.items) {
        const double diff = rm.score(item.y_w) - rm.score(item.y_l);
        total += -log_sigmoid(diff);
        const double ddiff = -sigmoid(-diff) / n;
        rm.accumulate_grad(item.y_w, ddiff, out.grad);
        rm.accumulate_grad(item.y_l, -ddiff, out.grad);
    }
    out.loss = total / n;
    return out;
}

BtTrainReport bt_reward_train(const PairBatch& pairs, RewardModel& rm, std::size_t steps,
                              Rng& rng, std::size_t batch_size, AdamParams adam) {
    if (pairs.items.empty()) throw UsageError("bt_reward_train: no pairs");
    AdamState state = AdamState::init(rm.params(), adam);
    std::vector<std::size_t> order(pairs.items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();  // force an initial shuffle

    BtTrainReport report;
    for (std::size_t step = 0; step < steps; ++step) {
        PairBatch batch;
        for (std::size_t b = 0; b < batch_size; ++b) {
            if (cursor == order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            batch.items.push_back(pairs.items[order[cursor++]]);
        }
        LossResult res = bt_pair_loss(batch, rm);
        if (!std::isfinite(res.loss)) {
            throw NumericError("bt_reward_train: non-finite loss at step " + std::to_string(step));
        }
        adam_step(rm.mutable_params(), res.grad, state);
        report.final_loss = res.loss;
    }

    std::size_t correct = 0;
    for (const auto& item : pairs.items) {
        if (rm.score(item.y_w) > rm.score(item.y_l)) ++correct;
    }
    report.train_accuracy = static_cast<double>(correct) / static_cast<double>(pairs.items.size());
    return report;
}

PgResult pg_step(const PolicyModel& policy, const PolicyModel& ref, const RewardModel& rm,
                 std::size_t n_samples, double kl_coef, double clip_eps, Rng& rng,
                 PgState& state) {
    if (n_samples < 2) throw UsageError("pg_step: n_samples must be >= 2");
    const std::vector<Sequence> samples = policy.sample(n_samples, rng);

    std::vector<double> lp(n_samples), lp_ref(n_samples), reward(n_samples);
    double mean_reward = 0.0, mean_kl = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        lp[i] = policy.log_prob(samples[i]);
        lp_ref[i] = ref.log_prob(samples[i]);
        reward[i] = rm.score(samples[i]) - kl_coef * (lp[i] - lp_ref[i]);
        mean_reward += reward[i];
        mean_kl += lp[i] - lp_ref[i];
    }
    mean_reward /= static_cast<double>(n_samples);
    mean_kl /= static_cast<double>(n_samples);

    if (!state.initialized) {
        state.baseline = mean_reward;
        state.initialized = true;
    }
    const double baseline = state.baseline;

    PgResult out;
    out.grad = policy.params().zeros_like();
    std::size_t clipped = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        double adv = reward[i] - baseline;
        if (adv > clip_eps || adv < -clip_eps) {
            ++clipped;
            adv = std::clamp(adv, -clip_eps, clip_eps);
        }
        policy.accumulate_grad_log_prob(samples[i], -adv / static_cast<double>(n_samples),
                                        out.grad);
    }
    state.baseline = state.momentum * state.baseline + (1.0 - state.momentum) * mean_reward;

    out.mean_reward = mean_reward;
    out.kl_estimate = mean_kl;
    out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n_samples);
    return out;
}

}  // namespace physio
