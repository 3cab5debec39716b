#include "physiopref/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace physio {

const char* const kTrainLogHeader = "step,loss,energy_per_res,kl,foldability,seconds";

namespace {

const char* kObjectives[] = {"sft", "dpo", "ipo", "kto", "physio", "physio-linear", "pg"};

// Child-stream purposes, fixed so matched seeds line up across objectives.
constexpr std::uint64_t kChildShuffle = 7;
constexpr std::uint64_t kChildDynamics = 8;
constexpr std::uint64_t kChildPg = 11;
constexpr std::uint64_t kChildRmInit = 12;
constexpr std::uint64_t kChildRmTrain = 13;

std::string fmt_double(double v, const char* spec = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace

bool known_objective(const std::string& name) {
    for (const char* o : kObjectives) {
        if (name == o) return true;
    }
    return false;
}

std::string objective_list() {
    std::string out;
    for (const char* o : kObjectives) {
        if (!out.empty()) out += ", ";
        out += o;
    }
    return out;
}

void TrainConfig::validate() const {
    if (!known_objective(objective)) {
        throw ConfigError("unknown objective '" + objective + "' (valid: " + objective_list() +
                          ")");
    }
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (eval_every < 1) throw ConfigError("train: eval_every must be >= 1");
    if (eval_samples < 1) throw ConfigError("train: eval_samples must be >= 1");
    physio.validate();
    if (!(ipo_tau > 0.0)) throw ConfigError("train: ipo_tau must be > 0");
    if (!(pg_clip_eps > 0.0)) throw ConfigError("train: pg_clip_eps must be > 0");
}

std::string format_train_row(const TrainRow& row) {
    std::string out = std::to_string(row.step);
    out += ',';
    out += fmt_double(row.loss);
    out += ',';
    out += fmt_double(row.energy_per_res);
    out += ',';
    out += fmt_double(row.kl);
    out += ',';
    out += fmt_double(row.foldability);
    out += ',';
    out += fmt_double(row.seconds, "%.3f");
    return out;
}

double kl_to_ref(const PolicyModel& policy, const PolicyModel& ref, KlMode mode, std::size_t mc_n,
                 Rng* rng) {
    if (policy.config().alphabet != ref.config().alphabet ||
        policy.config().length != ref.config().length) {
        throw UsageError("kl_to_ref: policy/reference shape mismatch");
    }
    if (mode == KlMode::exact) {
        const std::vector<Sequence> seqs = policy.enumerate_sequences();
        double kl = 0.0;
        for (const auto& s : seqs) {
            const double lp = policy.log_prob(s);
            const double lq = ref.log_prob(s);
            kl += std::exp(lp) * (lp - lq);
        }
        return kl;
    }
    if (mc_n < 1 || rng == nullptr) throw UsageError("kl_to_ref: monte_carlo needs n and rng");
    const std::vector<Sequence> samples = policy.sample(mc_n, *rng);
    double acc = 0.0;
    for (const auto& s : samples) acc += policy.log_prob(s) - ref.log_prob(s);
    return acc / static_cast<double>(mc_n);
}

namespace {

struct DynamicsProbe {
    const EnergyOracle& oracle;
    const TrainConfig& cfg;
    const PolicyModel& ref;
    bool kl_exact;

    DynamicsProbe(const EnergyOracle& o, const TrainConfig& c, const PolicyModel& r)
        : oracle(o), cfg(c), ref(r) {
        kl_exact = true;
        try {
            enumeration_size(ref.config().alphabet, ref.config().length);
        } catch (const CapabilityError&) {
            kl_exact = false;
        }
    }

    TrainRow measure(const PolicyModel& policy, std::size_t step, double loss, Rng base) {
        Rng sample_rng = base.child(step);
        const std::vector<Sequence> samples = policy.sample(cfg.eval_samples, sample_rng);
        double energy = 0.0;
        double folded = 0.0;
        std::unordered_map<std::string, FoldReport> memo;
        for (const auto& s : samples) {
            auto [it, fresh] = memo.try_emplace(s.str());
            if (fresh) it->second = oracle.score(s);
            energy += it->second.e_per_res(s.length());
            folded += is_foldable(it->second, s.length(), cfg.foldability) ? 1.0 : 0.0;
        }
        const double n = static_cast<double>(samples.size());

        TrainRow row;
        row.step = step;
        row.loss = loss;
        row.energy_per_res = energy / n;
        row.foldability = folded / n;
        if (kl_exact) {
            row.kl = kl_to_ref(policy, ref, KlMode::exact);
        } else {
            Rng kl_rng = base.child(step).child(1);
            row.kl = kl_to_ref(policy, ref, KlMode::monte_carlo, cfg.eval_samples, &kl_rng);
        }
        return row;
    }
};

}  // namespace

TrainResult run_training(const TrainConfig& cfg, const DatasetSplit& dataset,
                         const PolicyModel& ref, const EnergyOracle& oracle,
                         std::ostream* log_stream) {
    cfg.validate();
    if (!ref.frozen()) throw UsageError("run_training: reference must be frozen");
    const auto t_start = std::chrono::steady_clock::now();

    PolicyModel policy = ref.with_role(Role::trainable);
    AdamState opt = AdamState::init(policy.params(), cfg.adam);

    const std::vector<PreferencePair>& pairs = dataset.train;
    const bool pair_based = cfg.objective == "dpo" || cfg.objective == "ipo" ||
                            cfg.objective == "kto" || cfg.objective == "physio" ||
                            cfg.objective == "physio-linear";
    const bool is_sft = cfg.objective == "sft";
    if ((pair_based || is_sft) && pairs.empty()) {
        throw DataError("run_training: dataset has no training pairs");
    }

    // The reference side of every pair is fixed for the whole run.
    std::vector<double> ref_lp_w(pairs.size()), ref_lp_l(pairs.size());
    if (pair_based) {
        std::unordered_map<std::string, double> memo;
        auto ref_lp = [&](const Sequence& s) {
            auto [it, fresh] = memo.try_emplace(s.str());
            if (fresh) it->second = ref.log_prob(s);
            return it->second;
        };
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            ref_lp_w[i] = ref_lp(pairs[i].y_w);
            ref_lp_l[i] = ref_lp(pairs[i].y_l);
        }
    }

    PhysioParams physio_params = cfg.physio;
    if (cfg.objective == "physio-linear") physio_params.psi = PsiKind::linear;

    Rng master(cfg.seed);
    Rng shuffle_rng = master.child(kChildShuffle);
    Rng dynamics_base = master.child(kChildDynamics);
    Rng pg_rng = master.child(kChildPg);

    // pg trains its reward model up front from the same dataset.
    std::unique_ptr<RewardModel> rm;
    PgState pg_state;
    if (cfg.objective == "pg") {
        if (pairs.empty()) throw DataError("run_training: dataset has no training pairs");
        PolicyConfig rm_cfg = ref.config();
        rm_cfg.seed = master.child(kChildRmInit).seed();
        rm = std::make_unique<RewardModel>(rm_cfg);
        std::vector<Sequence> ws, ls;
        std::vector<double> ds;
        for (const auto& p : pairs) {
            ws.push_back(p.y_w);
            ls.push_back(p.y_l);
            ds.push_back(p.delta_e);
        }
        PairBatch all = PairBatch::build(ws, ls, ds, ref);
        Rng rm_rng = master.child(kChildRmTrain);
        bt_reward_train(all, *rm, cfg.rm_steps, rm_rng, cfg.batch_size, cfg.adam);
    }

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();

    DynamicsProbe probe(oracle, cfg, ref);
    TrainResult result{std::move(policy), {}};

    auto emit = [&](std::size_t step, double loss) {
        TrainRow row = probe.measure(result.model, step, loss, dynamics_base);
        if (cfg.timing) {
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                              .count();
        }
        result.log.push_back(row);
        if (log_stream) {
            *log_stream << format_train_row(row) << '\n';
            log_stream->flush();
        }
    };

    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        double loss = 0.0;
        ParameterSet grad;

        if (pair_based || is_sft) {
            PairBatch batch;
            std::vector<Sequence> winners;
            for (std::size_t b = 0; b < cfg.batch_size; ++b) {
                if (cursor == order.size()) {
                    shuffle_rng.shuffle(order);
                    cursor = 0;
                }
                const std::size_t i = order[cursor++];
                if (is_sft) {
                    winners.push_back(pairs[i].y_w);
                } else {
                    PairItem item;
                    item.y_w = pairs[i].y_w;
                    item.y_l = pairs[i].y_l;
                    item.delta_e = pairs[i].delta_e;
                    item.lp_w_ref = ref_lp_w[i];
                    item.lp_l_ref = ref_lp_l[i];
                    batch.items.push_back(std::move(item));
                }
            }
            LossResult res;
            if (is_sft) res = sft_loss(winners, result.model);
            else if (cfg.objective == "dpo") res = dpo_loss(batch, result.model, cfg.physio.beta);
            else if (cfg.objective == "ipo") res = ipo_loss(batch, result.model, cfg.ipo_tau);
            else if (cfg.objective == "kto")
                res = kto_loss(batch, result.model, cfg.physio.beta, cfg.kto_lambda_w,
                               cfg.kto_lambda_l);
            else res = physio_loss(batch, result.model, physio_params);
            loss = res.loss;
            grad = std::move(res.grad);
        } else {
            PgResult res = pg_step(result.model, ref, *rm, cfg.batch_size, cfg.pg_kl_coef,
                                   cfg.pg_clip_eps, pg_rng, pg_state);
            loss = -res.mean_reward;
            grad = std::move(res.grad);
        }

        if (!std::isfinite(loss)) {
            throw NumericError("training aborted: non-finite loss at step " +
                               std::to_string(step));
        }
        adam_step(result.model.mutable_params(), grad, opt);

        if (step % cfg.eval_every == 0 || step == cfg.steps) emit(step, loss);
    }

    return result;
}

std::vector<Sequence> block_process_corpus(AlphabetMode alphabet, std::size_t length,
                                           std::size_t count, double mean_run, double h_fraction,
                                           Rng& rng) {
    if (!(mean_run >= 1.0)) throw ConfigError("block corpus: mean_run must be >= 1");
    if (!(h_fraction > 0.0 && h_fraction < 1.0)) {
        throw ConfigError("block corpus: h_fraction must lie in (0,1)");
    }
    const double leave_h = 1.0 / mean_run;
    const double leave_p = h_fraction * leave_h / (1.0 - h_fraction);
    if (leave_p > 1.0) {
        throw ConfigError("block corpus: mean_run/h_fraction combination is infeasible");
    }

    // AA20 sequences carry the same H/P block structure, with each position
    // drawn uniformly from the residues of its hydrophobicity class.
    const Alphabet& a = Alphabet::get(alphabet);
    std::vector<std::uint8_t> h_class, p_class;
    for (std::size_t i = 0; i < a.size(); ++i) {
        (a.hydrophobic(i) ? h_class : p_class).push_back(static_cast<std::uint8_t>(i));
    }

    std::vector<Sequence> corpus;
    corpus.reserve(count);
    std::vector<std::uint8_t> hp(length);
    std::vector<std::uint8_t> toks(length);
    for (std::size_t i = 0; i < count; ++i) {
        hp[0] = rng.uniform() < h_fraction ? 0 : 1;  // 0 = H
        for (std::size_t t = 1; t < length; ++t) {
            const double leave = hp[t - 1] == 0 ? leave_h : leave_p;
            hp[t] = rng.uniform() < leave ? static_cast<std::uint8_t>(1 - hp[t - 1]) : hp[t - 1];
        }
        if (alphabet == AlphabetMode::HP2) {
            toks = hp;
        } else {
            for (std::size_t t = 0; t < length; ++t) {
                const auto& cls = hp[t] == 0 ? h_class : p_class;
                toks[t] = cls[rng.below(cls.size())];
            }
        }
        corpus.emplace_back(alphabet, toks);
    }
    return corpus;
}

PolicyModel train_reference(const PolicyConfig& model_cfg, const std::vector<Sequence>& corpus,
                            std::size_t steps, std::size_t batch_size, AdamParams adam, Rng& rng) {
    if (corpus.empty()) throw UsageError("train_reference: empty corpus");
    PolicyModel model(model_cfg, Role::trainable);
    AdamState opt = AdamState::init(model.params(), adam);

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();

    std::vector<Sequence> batch;
    for (std::size_t step = 1; step <= steps; ++step) {
        batch.clear();
        for (std::size_t b = 0; b < batch_size; ++b) {
            if (cursor == order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            batch.push_back(corpus[order[cursor++]]);
        }
        LossResult res = sft_loss(batch, model);
        if (!std::isfinite(res.loss)) {
            throw NumericError("train_reference: non-finite loss at step " + std::to_string(step));
        }
        adam_step(model.mutable_params(), res.grad, opt);
    }
    return model.with_role(Role::frozen_reference);
}

}  // namespace physio
