#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "physiopref/policy.hpp"

namespace physio {

enum class PsiKind { sigmoid, linear, const1 };

PsiKind psi_from_name(const std::string& name);
const char* psi_name(PsiKind k);

// Hyperparameters of the energy-weighted preference objective. The sigmoid
// gain lambda * sigma((d - mu) / tau) crosses lambda/2 at d = mu; tau sets
// the transition sharpness. Defaults are on the lattice energy scale.
struct PhysioParams {
    double beta = 0.1;
    double lambda = 1.0;
    double mu = 2.0;
    double tau = 0.5;
    PsiKind psi = PsiKind::sigmoid;
    double linear_scale = 0.25;  // slope for the linear-gain ablation

    void validate() const;
};

// Energy gap: max(0, e_l - e_w). Inverted pairs clamp to zero.
double delta_e(double e_w, double e_l);

// Sigmoid gain lambda * sigma((d - mu) / tau), strictly increasing,
// bounded in (0, lambda).
double psi(double d, const PhysioParams& p);

// Unbounded linear gain scale * d (ablation).
double linear_psi(double d, double scale);

// Gain actually applied to a pair, dispatched on p.psi.
double psi_weight(double d, const PhysioParams& p);

// Per-pair gradient magnitude factor psi(d) * sigma(-margin).
double gradient_gain(double d, double margin, const PhysioParams& p);

// One preference pair with the frozen-reference log-probs cached. The
// reference side is computed once from the frozen model and never changes.
struct PairItem {
    Sequence y_w, y_l;
    double delta_e = 0.0;
    double lp_w_ref = 0.0, lp_l_ref = 0.0;
};

struct PairBatch {
    std::vector<PairItem> items;

    static PairBatch build(std::span<const Sequence> winners, std::span<const Sequence> losers,
                           std::span<const double> deltas, const PolicyModel& ref);
};

// beta * [(log pi(y_w) - log ref(y_w)) - (log pi(y_l) - log ref(y_l))].
double implicit_reward_margin(const PairItem& item, const PolicyModel& policy, double beta);

struct LossResult {
    double loss = 0.0;
    ParameterSet grad;
};

// -mean psi(delta_e) * log sigma(margin). The gain is a detached weight:
// no gradient flows through it or into the reference.
LossResult physio_loss(const PairBatch& batch, const PolicyModel& policy, const PhysioParams& p);

// -mean log sigma(margin); the unweighted special case.
LossResult dpo_loss(const PairBatch& batch, const PolicyModel& policy, double beta);

// mean (h - 1/(2 tau_ipo))^2 with h the unscaled log-ratio margin.
LossResult ipo_loss(const PairBatch& batch, const PolicyModel& policy, double tau_ipo);

// mean lambda_w (1 - sigma(beta (r_w - z0))) + lambda_l sigma(beta (r_l - z0))
// with r the per-sequence log-ratio and z0 = max(0, mean loser log-ratio),
// treated as a constant. z0_override pins it for gradient checking.
LossResult kto_loss(const PairBatch& batch, const PolicyModel& policy, double beta,
                    double lambda_w, double lambda_l,
                    std::optional<double> z0_override = std::nullopt);

// -mean log pi(y_w) over the winner set.
LossResult sft_loss(std::span<const Sequence> winners, const PolicyModel& policy);

// Scalar scorer with the NGRAM trunk and a mean-pooled linear head.
class RewardModel {
public:
    explicit RewardModel(PolicyConfig backbone);

    const PolicyConfig& config() const { return cfg_; }
    const ParameterSet& params() const { return params_; }
    ParameterSet& mutable_params() { return params_; }

    double score(const Sequence& s) const;
    // grads += coeff * d score / d phi
    void accumulate_grad(const Sequence& s, double coeff, ParameterSet& grads) const;

private:
    PolicyConfig cfg_;
    ParameterSet params_;
};

// Bradley-Terry pairwise loss over a batch: -mean log sigma(r(y_w) - r(y_l)).
LossResult bt_pair_loss(const PairBatch& batch, const RewardModel& rm);

struct BtTrainReport {
    double final_loss = 0.0;
    double train_accuracy = 0.0;  // fraction of pairs with r(y_w) > r(y_l)
};

BtTrainReport bt_reward_train(const PairBatch& pairs, RewardModel& rm, std::size_t steps,
                              Rng& rng, std::size_t batch_size = 64, AdamParams adam = {});

// Moving-average reward baseline carried across policy-gradient steps.
struct PgState {
    double baseline = 0.0;
    bool initialized = false;
    double momentum = 0.9;
};

struct PgResult {
    ParameterSet grad;
    double mean_reward = 0.0;
    double kl_estimate = 0.0;   // mean log pi - log ref over the samples
    double clip_fraction = 0.0;
};

// REINFORCE step with reward r(y) - kl_coef * (log pi(y) - log ref(y)),
// baseline-centered advantages clipped to [-clip_eps, clip_eps].
PgResult pg_step(const PolicyModel& policy, const PolicyModel& ref, const RewardModel& rm,
                 std::size_t n_samples, double kl_coef, double clip_eps, Rng& rng,
                 PgState& state);

}  // namespace physio
