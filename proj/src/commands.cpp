#include "physiopref/commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "physiopref/eval.hpp"
#include "physiopref/trainer.hpp"

namespace physio {

namespace fs = std::filesystem;

namespace {

// Master-seed child purposes used by the pipeline commands.
constexpr std::uint64_t kChildPool = 1;
constexpr std::uint64_t kChildRefCorpus = 2;
constexpr std::uint64_t kChildRefInit = 3;
constexpr std::uint64_t kChildRefTrain = 4;
constexpr std::uint64_t kChildPairing = 5;
constexpr std::uint64_t kChildSplit = 6;
constexpr std::uint64_t kChildFinalEval = 20;
constexpr std::uint64_t kChildPlane = 21;

std::string fmt(double v, const char* spec = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunPaths {
    fs::path out;
    bool force = false;
};

RunPaths run_paths(const Config& cfg) {
    RunPaths p;
    p.out = cfg.get_str("run.out", "out");
    p.force = cfg.get_bool("run.force", false);
    fs::create_directories(p.out);
    return p;
}

std::string artifact_path(const Config& cfg, const RunPaths& rp, const std::string& key,
                          const std::string& default_name) {
    if (auto v = cfg.get_opt(key)) return *v;
    return (rp.out / default_name).string();
}

void refuse_overwrite(const std::string& path, bool force) {
    if (!force && fs::exists(path)) {
        throw UsageError("output already exists (use --force to overwrite): " + path);
    }
}

// Reproducibility record. Written before work starts and finalized after.
class Manifest {
public:
    Manifest(const Config& cfg, const RunPaths& rp, const std::string& command)
        : cfg_(cfg), path_(rp.out / ("manifest-" + command + ".json")), command_(command),
          started_(iso_now()) {
        write(false);
    }

    void add_artifact(const std::string& path) { artifacts_.push_back(path); }

    void finish() { write(true); }

private:
    void write(bool finished) const {
        nlohmann::ordered_json j;
        j["command"] = command_;
        j["version"] = kToolVersion;
        j["started"] = started_;
        j["finished"] = finished ? nlohmann::ordered_json(iso_now()) : nullptr;
        nlohmann::ordered_json conf;
        for (const auto& [k, v] : cfg_.snapshot()) conf[k] = v;
        j["config"] = conf;
        j["artifacts"] = artifacts_;
        std::ofstream out(path_, std::ios::trunc);
        if (!out) throw DataError("cannot write manifest: " + path_.string());
        out << j.dump(2) << '\n';
    }

    const Config& cfg_;
    fs::path path_;
    std::string command_;
    std::string started_;
    std::vector<std::string> artifacts_;
};

PolicyConfig model_config(const Config& cfg) {
    PolicyConfig mc;
    mc.alphabet = Alphabet::mode_from_name(cfg.get_str("model.alphabet", "HP2"));
    mc.length = cfg.get_u64("model.length", 12);
    mc.arch = arch_from_name(cfg.get_str("model.arch", "ngram"));
    mc.ngram_k = cfg.get_u64("model.ngram_k", 4);
    mc.hidden_dim = cfg.get_u64("model.hidden_dim", 32);
    mc.embed_dim = cfg.get_u64("model.embed_dim", 8);
    mc.d_model = cfg.get_u64("model.d_model", 32);
    mc.heads = cfg.get_u64("model.heads", 2);
    mc.init_scale = cfg.get_dbl("model.init_scale", 0.02);
    mc.validate();
    return mc;
}

struct OracleBundle {
    std::unique_ptr<EnergyOracle> oracle;
    FoldabilityParams foldability;
    std::string kind;
    std::string cache_path;

    void save_cache() const {
        if (cache_path.empty() || kind != "lattice") return;
        static_cast<const LatticeOracle*>(oracle.get())->save_cache(cache_path);
    }
};

OracleBundle oracle_bundle(const Config& cfg) {
    OracleBundle b;
    b.kind = cfg.get_str("oracle.kind", "lattice");
    const std::size_t l_max = cfg.get_u64("oracle.l_max", 14);
    b.oracle = make_oracle(b.kind, l_max);
    b.foldability.g_max = cfg.get_u64("oracle.g_max", 4);
    if (auto e = cfg.get_opt_int("oracle.e_thresh")) {
        b.foldability.e_thresh_override = static_cast<int>(*e);
    }
    if (auto c = cfg.get_opt("oracle.cache")) {
        b.cache_path = *c;
    } else if (const char* env = std::getenv("PHYSIOPREF_CACHE")) {
        b.cache_path = env;
    }
    if (!b.cache_path.empty() && b.kind == "lattice" && fs::exists(b.cache_path)) {
        static_cast<LatticeOracle*>(b.oracle.get())->load_cache(b.cache_path);
    }
    return b;
}

AdamParams adam_params(const Config& cfg) {
    AdamParams a;
    a.lr = cfg.get_dbl("optimizer.lr", 1e-3);
    a.beta1 = cfg.get_dbl("optimizer.beta1", 0.9);
    a.beta2 = cfg.get_dbl("optimizer.beta2", 0.999);
    a.eps = cfg.get_dbl("optimizer.eps", 1e-8);
    return a;
}

// The gain midpoint/sharpness defaults depend on the oracle's energy scale:
// lattice gaps are small integers, the surrogate keeps the REU-scale
// convention.
PhysioParams physio_params(const Config& cfg, const std::string& oracle_kind) {
    PhysioParams p;
    const bool lattice = oracle_kind == "lattice";
    p.beta = cfg.get_dbl("objective.beta", 0.1);
    p.lambda = cfg.get_dbl("objective.lambda", 1.0);
    p.mu = cfg.get_dbl("objective.mu", lattice ? 2.0 : 50.0);
    p.tau = cfg.get_dbl("objective.tau", lattice ? 0.5 : 10.0);
    p.psi = psi_from_name(cfg.get_str("objective.psi", "sigmoid"));
    p.linear_scale = cfg.get_dbl("objective.linear_scale", p.lambda / (2.0 * std::max(p.mu, 1e-9)));
    p.validate();
    return p;
}

TrainConfig train_config(const Config& cfg, const std::string& oracle_kind,
                         const FoldabilityParams& fold) {
    TrainConfig t;
    t.objective = cfg.get_str("objective.name", "physio");
    t.physio = physio_params(cfg, oracle_kind);
    t.ipo_tau = cfg.get_dbl("objective.ipo_tau", 0.1);
    t.kto_lambda_w = cfg.get_dbl("objective.kto_lambda_w", 1.0);
    t.kto_lambda_l = cfg.get_dbl("objective.kto_lambda_l", 1.0);
    t.pg_kl_coef = cfg.get_dbl("objective.pg_kl_coef", 0.1);
    t.pg_clip_eps = cfg.get_dbl("objective.pg_clip_eps", 10.0);
    t.rm_steps = cfg.get_u64("objective.rm_steps", 1500);
    t.kl_cap = cfg.get_dbl("objective.kl_cap", 5.0);
    t.adam = adam_params(cfg);
    t.batch_size = cfg.get_u64("train.batch", 64);
    t.steps = cfg.get_u64("train.steps", 5000);
    t.eval_every = cfg.get_u64("train.eval_every", 250);
    t.eval_samples = cfg.get_u64("train.eval_samples", 256);
    t.seed = cfg.get_u64("run.seed", 1);
    t.timing = cfg.get_bool("run.timing", false);
    t.threads = cfg.get_u64("run.threads", 1);
    t.foldability = fold;
    t.validate();
    return t;
}

PolicyModel load_reference(const Config& cfg, const RunPaths& rp) {
    const std::string path = artifact_path(cfg, rp, "ref.checkpoint", "ref.bin");
    if (!fs::exists(path)) {
        throw DataError("reference checkpoint not found: " + path + " (run make-ref first)");
    }
    return PolicyModel::load(path).with_role(Role::frozen_reference);
}

void append_results_row(const std::string& path, const EvalReport& r) {
    const bool fresh = !fs::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw DataError("cannot write results file: " + path);
    if (fresh) out << kResultsHeader << '\n';
    out << format_results_row(r) << '\n';
}

void print_report(const EvalReport& r) {
    std::cout << "method=" << r.method << " seed=" << r.seed << " samples=" << r.sample_count
              << "\n"
              << "  energy_per_res = " << fmt(r.energy_per_res) << "\n"
              << "  foldability    = " << fmt(r.foldability) << "\n"
              << "  perplexity     = " << fmt(r.perplexity) << "\n"
              << "  identity_mean  = " << fmt(r.identity_mean) << " (max " << fmt(r.identity_max)
              << ")\n"
              << "  kl             = " << fmt(r.kl) << "\n"
              << "  spearman       = " << fmt(r.spearman_energy) << "\n";
}

EvalReport evaluate_checkpoint(const Config& cfg, const RunPaths& rp, const PolicyModel& policy,
                               const PolicyModel& ref, const OracleBundle& ob,
                               const std::string& method) {
    const std::string dataset_path = artifact_path(cfg, rp, "data.dataset", "dataset.jsonl");
    std::vector<Sequence> train_seqs;
    if (fs::exists(dataset_path)) {
        const DatasetSplit ds = load_dataset(dataset_path);
        train_seqs = pair_sequences(ds.train);
    }
    const std::size_t n = cfg.get_u64("eval.samples", 2000);
    const std::uint64_t seed = cfg.get_u64("run.seed", 1);
    Rng rng = Rng(seed).child(kChildFinalEval);
    EvalReport r = evaluate(policy, ref, *ob.oracle, train_seqs, n, rng, ob.foldability);
    r.method = method;
    r.seed = seed;
    return r;
}

}  // namespace

int cmd_oracle(const Config& cfg, const std::string& seq_text) {
    if (seq_text.empty()) throw UsageError("oracle: --seq is required");
    const AlphabetMode mode = Alphabet::mode_from_name(cfg.get_str("model.alphabet", "HP2"));
    OracleBundle ob = oracle_bundle(cfg);
    const Sequence s = Sequence::parse(seq_text, mode);
    const FoldReport r = ob.oracle->score(s);
    std::cout << seq_text << ',' << r.e_min << ',' << r.g << ',' << r.n_conf << ','
              << fmt(r.e_per_res(s.length()), "%.6g") << '\n';
    ob.save_cache();
    return 0;
}

int cmd_make_ref(const Config& cfg) {
    RunPaths rp = run_paths(cfg);
    const std::uint64_t seed = cfg.get_u64("run.seed", 1);
    const std::string ref_path = artifact_path(cfg, rp, "ref.checkpoint", "ref.bin");
    refuse_overwrite(ref_path, rp.force);

    PolicyConfig mc = model_config(cfg);
    const std::size_t corpus_n = cfg.get_u64("ref.corpus_n", 20000);
    const double mean_run = cfg.get_dbl("ref.mean_run", 2.0);
    const double h_fraction = cfg.get_dbl("ref.h_fraction", 0.5);
    const std::size_t steps = cfg.get_u64("ref.steps", 1500);
    const std::size_t batch = cfg.get_u64("ref.batch", 64);
    const AdamParams adam = adam_params(cfg);

    Manifest manifest(cfg, rp, "make-ref");
    Rng master(seed);
    Rng corpus_rng = master.child(kChildRefCorpus);
    const std::vector<Sequence> corpus =
        block_process_corpus(mc.alphabet, mc.length, corpus_n, mean_run, h_fraction, corpus_rng);
    mc.seed = master.child(kChildRefInit).seed();
    Rng train_rng = master.child(kChildRefTrain);
    const PolicyModel ref = train_reference(mc, corpus, steps, batch, adam, train_rng);
    ref.save(ref_path);

    manifest.add_artifact(ref_path);
    manifest.finish();
    std::cout << "make-ref: corpus=" << corpus_n << " steps=" << steps << " params="
              << ref.params().total_params() << " -> " << ref_path << '\n';
    return 0;
}

int cmd_gen_data(const Config& cfg) {
    RunPaths rp = run_paths(cfg);
    const std::uint64_t seed = cfg.get_u64("run.seed", 1);
    const std::string dataset_path = artifact_path(cfg, rp, "data.dataset", "dataset.jsonl");
    refuse_overwrite(dataset_path, rp.force);

    const PolicyModel ref = load_reference(cfg, rp);
    OracleBundle ob = oracle_bundle(cfg);
    const std::size_t pool_n = cfg.get_u64("data.pool", 2000);
    const double q_conf = cfg.get_dbl("data.q_conf", 0.75);
    PairBuildOptions pb;
    pb.strategy = pairing_from_name(cfg.get_str("data.strategy", "max_gap"));
    pb.count = cfg.get_u64("data.pairs", 5000);
    pb.allow_zero_delta = cfg.get_bool("data.allow_zero_delta", false);
    pb.hard_negatives_only = cfg.get_bool("data.hard_negatives_only", false);
    const bool hp2 = ref.config().alphabet == AlphabetMode::HP2;
    const double threshold = cfg.get_dbl("data.split_threshold", hp2 ? 0.75 : 0.30);
    SplitFractions fractions;
    fractions.train = cfg.get_dbl("data.frac_train", 0.90);
    fractions.val = cfg.get_dbl("data.frac_val", 0.05);
    fractions.test = cfg.get_dbl("data.frac_test", 0.05);
    const std::size_t threads = cfg.get_u64("run.threads", 1);

    Manifest manifest(cfg, rp, "gen-data");
    Rng master(seed);
    Rng pool_rng = master.child(kChildPool);
    std::vector<ScoredSequence> pool =
        generate_fold_score(ref, *ob.oracle, pool_n, pool_rng, ob.foldability, threads);
    const std::vector<std::size_t> hard = mine_hard_negatives(pool, q_conf);

    std::size_t stable = 0, unstable = 0;
    for (const auto& e : pool) {
        if (e.label == SeqLabel::stable) ++stable;
        else if (e.label == SeqLabel::unstable) ++unstable;
    }

    Rng pair_rng = master.child(kChildPairing);
    const std::vector<PreferencePair> pairs = build_pairs(pool, pb, pair_rng);

    DatasetHeader header;
    header.alphabet = ref.config().alphabet;
    header.length = ref.config().length;
    header.oracle_name = ob.oracle->name();
    header.seed = seed;
    Rng split_rng = master.child(kChildSplit);
    const DatasetSplit split = split_by_identity(pairs, header, threshold, fractions, split_rng);
    save_dataset(split, dataset_path);

    manifest.add_artifact(dataset_path);
    manifest.finish();
    ob.save_cache();
    std::cout << "gen-data: pool=" << pool.size() << " stable=" << stable << " unstable="
              << unstable << " hard_negative=" << hard.size() << " pairs=" << pairs.size()
              << " split=" << split.train.size() << "/" << split.val.size() << "/"
              << split.test.size() << " -> " << dataset_path << '\n';
    return 0;
}

int cmd_train(const Config& cfg) {
    RunPaths rp = run_paths(cfg);
    const std::string dataset_path = artifact_path(cfg, rp, "data.dataset", "dataset.jsonl");
    if (!fs::exists(dataset_path)) {
        throw DataError("dataset not found: " + dataset_path + " (run gen-data first)");
    }
    const DatasetSplit dataset = load_dataset(dataset_path);
    const PolicyModel ref = load_reference(cfg, rp);
    OracleBundle ob = oracle_bundle(cfg);
    TrainConfig tc = train_config(cfg, ob.kind, ob.foldability);

    const std::string ckpt_path = artifact_path(cfg, rp, "train.checkpoint", "checkpoint.bin");
    const std::string log_path = artifact_path(cfg, rp, "train.log", "train_log.csv");
    refuse_overwrite(ckpt_path, rp.force);
    refuse_overwrite(log_path, rp.force);

    Manifest manifest(cfg, rp, "train");
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw DataError("cannot write train log: " + log_path);
    log << kTrainLogHeader << '\n';
    log.flush();

    const TrainResult result = run_training(tc, dataset, ref, *ob.oracle, &log);
    result.model.save(ckpt_path);

    manifest.add_artifact(ckpt_path);
    manifest.add_artifact(log_path);
    manifest.finish();
    ob.save_cache();
    if (!result.log.empty()) {
        const TrainRow& last = result.log.back();
        std::cout << "train[" << tc.objective << "]: steps=" << tc.steps << " final loss="
                  << fmt(last.loss) << " energy_per_res=" << fmt(last.energy_per_res) << " kl="
                  << fmt(last.kl) << " foldability=" << fmt(last.foldability) << '\n';
    } else {
        std::cout << "train[" << tc.objective << "]: steps=0 (checkpoint equals reference)\n";
    }
    return 0;
}

int cmd_eval(const Config& cfg) {
    RunPaths rp = run_paths(cfg);
    const std::string ckpt_path = artifact_path(cfg, rp, "eval.checkpoint", "checkpoint.bin");
    if (!fs::exists(ckpt_path)) throw DataError("checkpoint not found: " + ckpt_path);
    const PolicyModel policy = PolicyModel::load(ckpt_path);
    const PolicyModel ref = load_reference(cfg, rp);
    OracleBundle ob = oracle_bundle(cfg);
    const std::string method =
        cfg.get_str("eval.method", cfg.get_str("objective.name", "physio"));

    Manifest manifest(cfg, rp, "eval");
    const EvalReport report = evaluate_checkpoint(cfg, rp, policy, ref, ob, method);
    print_report(report);

    const std::string results_path = artifact_path(cfg, rp, "eval.results", "results.csv");
    append_results_row(results_path, report);
    manifest.add_artifact(results_path);

    if (auto plane_path = cfg.get_opt("eval.plane")) {
        refuse_overwrite(*plane_path, rp.force);
        const std::size_t n = cfg.get_u64("eval.samples", 2000);
        const std::uint64_t seed = cfg.get_u64("run.seed", 1);
        Rng ref_rng = Rng(seed).child(kChildPlane);
        const Plane ref_plane = energy_confidence_plane(ref, *ob.oracle, n, ref_rng);
        Rng pol_rng = Rng(seed).child(kChildPlane);
        const Plane plane =
            energy_confidence_plane(policy, *ob.oracle, n, pol_rng, ref_plane.axes);
        std::ofstream out(*plane_path, std::ios::trunc);
        if (!out) throw DataError("cannot write plane file: " + *plane_path);
        out << "seq,energy_per_res,confidence,quadrant\n";
        for (const auto& row : plane.rows) {
            out << row.seq.str() << ',' << fmt(row.energy_per_res) << ',' << fmt(row.confidence)
                << ',' << quadrant_name(row.quadrant) << '\n';
        }
        manifest.add_artifact(*plane_path);
        std::cout << "plane: hc_he=" << plane.quadrant_counts[0] << " hc_le="
                  << plane.quadrant_counts[1] << " lc_he=" << plane.quadrant_counts[2]
                  << " lc_le=" << plane.quadrant_counts[3] << " -> " << *plane_path << '\n';
    }

    manifest.finish();
    ob.save_cache();
    return 0;
}

int cmd_sweep(const Config& cfg) {
    RunPaths rp = run_paths(cfg);
    const std::string param = cfg.get_str("sweep.param", "beta");
    if (param != "beta" && param != "mu") {
        throw UsageError("sweep: param must be 'beta' or 'mu'");
    }
    const std::string grid_text = cfg.get_str("sweep.grid", "");
    if (grid_text.empty()) throw UsageError("sweep: --grid is required (comma-separated values)");
    std::vector<double> grid;
    std::size_t pos = 0;
    while (pos < grid_text.size()) {
        const auto comma = grid_text.find(',', pos);
        const std::string tok = grid_text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                                 : comma - pos);
        try {
            grid.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError("sweep: bad grid value '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (grid.empty()) throw UsageError("sweep: empty grid");

    const std::string sweep_path = artifact_path(cfg, rp, "sweep.output", "sweep.csv");
    refuse_overwrite(sweep_path, rp.force);

    const std::string dataset_path = artifact_path(cfg, rp, "data.dataset", "dataset.jsonl");
    if (!fs::exists(dataset_path)) {
        throw DataError("dataset not found: " + dataset_path + " (run gen-data first)");
    }
    const DatasetSplit dataset = load_dataset(dataset_path);
    const PolicyModel ref = load_reference(cfg, rp);
    OracleBundle ob = oracle_bundle(cfg);
    const std::vector<Sequence> train_seqs = pair_sequences(dataset.train);
    const std::size_t eval_n = cfg.get_u64("eval.samples", 2000);
    const std::uint64_t seed = cfg.get_u64("run.seed", 1);

    Manifest manifest(cfg, rp, "sweep");
    std::ofstream out(sweep_path, std::ios::trunc);
    if (!out) throw DataError("cannot write sweep file: " + sweep_path);
    out << "param,value,energy_per_res,foldability,ppl,kl\n";
    out.flush();

    for (const double value : grid) {
        try {
            TrainConfig tc = train_config(cfg, ob.kind, ob.foldability);
            if (param == "beta") tc.physio.beta = value;
            else tc.physio.mu = value;

            const fs::path sub = rp.out / ("sweep_" + param + "_" + fmt(value, "%g"));
            fs::create_directories(sub);
            std::ofstream log(sub / "train_log.csv", std::ios::trunc);
            log << kTrainLogHeader << '\n';
            const TrainResult res = run_training(tc, dataset, ref, *ob.oracle, &log);
            res.model.save((sub / "checkpoint.bin").string());

            Rng eval_rng = Rng(seed).child(kChildFinalEval);
            const EvalReport r = evaluate(res.model, ref, *ob.oracle, train_seqs, eval_n,
                                          eval_rng, ob.foldability);
            out << param << ',' << fmt(value, "%g") << ',' << fmt(r.energy_per_res) << ','
                << fmt(r.foldability) << ',' << fmt(r.perplexity) << ',' << fmt(r.kl) << '\n';
            out.flush();
        } catch (const std::exception& e) {
            out << "# value=" << fmt(value, "%g") << " failed: " << e.what() << '\n';
            out.flush();
        }
    }

    manifest.add_artifact(sweep_path);
    manifest.finish();
    ob.save_cache();
    std::cout << "sweep[" << param << "]: " << grid.size() << " points -> " << sweep_path << '\n';
    return 0;
}

int cmd_repro_table1(const Config& cfg) {
    RunPaths rp = run_paths(cfg);
    const std::string ref_path = artifact_path(cfg, rp, "ref.checkpoint", "ref.bin");
    if (!fs::exists(ref_path)) cmd_make_ref(cfg);
    const std::string dataset_path = artifact_path(cfg, rp, "data.dataset", "dataset.jsonl");
    if (!fs::exists(dataset_path)) cmd_gen_data(cfg);

    const DatasetSplit dataset = load_dataset(dataset_path);
    const PolicyModel ref = load_reference(cfg, rp);
    OracleBundle ob = oracle_bundle(cfg);
    const std::vector<Sequence> train_seqs = pair_sequences(dataset.train);
    const std::size_t eval_n = cfg.get_u64("eval.samples", 2000);
    const std::uint64_t seed = cfg.get_u64("run.seed", 1);
    const std::string results_path = artifact_path(cfg, rp, "eval.results", "results.csv");

    Manifest manifest(cfg, rp, "repro-table1");
    std::vector<EvalReport> table;

    Rng ref_eval = Rng(seed).child(kChildFinalEval);
    EvalReport ref_row =
        evaluate(ref, ref, *ob.oracle, train_seqs, eval_n, ref_eval, ob.foldability);
    ref_row.method = "reference";
    ref_row.seed = seed;
    append_results_row(results_path, ref_row);
    table.push_back(ref_row);

    const char* objectives[] = {"sft", "dpo", "ipo", "kto", "physio", "physio-linear", "pg"};
    for (const char* obj : objectives) {
        TrainConfig tc = train_config(cfg, ob.kind, ob.foldability);
        tc.objective = obj;

        const fs::path sub = rp.out / obj;
        fs::create_directories(sub);
        std::ofstream log(sub / "train_log.csv", std::ios::trunc);
        log << kTrainLogHeader << '\n';
        const TrainResult res = run_training(tc, dataset, ref, *ob.oracle, &log);
        res.model.save((sub / "checkpoint.bin").string());

        Rng eval_rng = Rng(seed).child(kChildFinalEval);
        EvalReport row =
            evaluate(res.model, ref, *ob.oracle, train_seqs, eval_n, eval_rng, ob.foldability);
        row.method = obj;
        row.seed = seed;
        append_results_row(results_path, row);
        table.push_back(row);
        std::cout << "repro-table1: finished " << obj << '\n';
    }

    manifest.add_artifact(results_path);
    manifest.finish();
    ob.save_cache();

    std::printf("\n%-14s %12s %12s %8s %8s %8s %9s\n", "method", "energy/res", "foldability",
                "ppl", "max_id", "kl", "spearman");
    for (const auto& r : table) {
        std::printf("%-14s %12.4f %12.4f %8.3f %8.3f %8.3f %9.3f\n", r.method.c_str(),
                    r.energy_per_res, r.foldability, r.perplexity, r.identity_mean, r.kl,
                    r.spearman_energy);
    }
    return 0;
}

}  // namespace physio
