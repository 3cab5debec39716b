// physiopref: preference-dataset construction, alignment training, and
// evaluation against an exact lattice folding oracle, from one binary.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "physiopref/commands.hpp"

namespace {

struct FlagOverrides {
    std::string config_path;
    std::string seed, out, threads, objective, psi, oracle;
    bool force = false;

    void apply(physio::Config& cfg) const {
        if (!config_path.empty()) cfg.load_file(config_path);
        if (!seed.empty()) cfg.set("run.seed", seed);
        if (!out.empty()) cfg.set("run.out", out);
        if (!threads.empty()) cfg.set("run.threads", threads);
        if (force) cfg.set("run.force", "true");
        if (!objective.empty()) cfg.set("objective.name", objective);
        if (!psi.empty()) cfg.set("objective.psi", psi);
        if (!oracle.empty()) cfg.set("oracle.kind", oracle);
    }
};

void add_common_flags(CLI::App* app, FlagOverrides& fo) {
    app->add_option("--config", fo.config_path, "Config file (INI sections)");
    app->add_option("--seed", fo.seed, "Master seed (run.seed)");
    app->add_option("--out", fo.out, "Output directory (run.out)");
    app->add_option("--threads", fo.threads, "Worker threads; 1 = fully deterministic");
    app->add_flag("--force", fo.force, "Overwrite existing outputs");
    app->add_option("--objective", fo.objective, "Objective name (objective.name)");
    app->add_option("--psi", fo.psi, "Gain shape: sigmoid, linear or const1");
    app->add_option("--oracle", fo.oracle, "Energy oracle: lattice or surrogate");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"physiopref: energy-gap-weighted preference optimization workbench"};
    app.require_subcommand(1);

    FlagOverrides fo;
    std::string seq_text, checkpoint, dataset, ref_path, plane, results, param, grid, method;

    auto* oracle_cmd = app.add_subcommand("oracle", "Score one sequence with the energy oracle");
    add_common_flags(oracle_cmd, fo);
    oracle_cmd->add_option("--seq", seq_text, "Residue string, e.g. HPPH")->required();

    auto* make_ref = app.add_subcommand("make-ref", "Fit and freeze the reference model");
    add_common_flags(make_ref, fo);
    make_ref->add_option("--ref", ref_path, "Reference checkpoint path (ref.checkpoint)");

    auto* gen_data = app.add_subcommand("gen-data", "Build the preference dataset");
    add_common_flags(gen_data, fo);
    gen_data->add_option("--ref", ref_path, "Reference checkpoint path");
    gen_data->add_option("--dataset", dataset, "Dataset output path (data.dataset)");

    auto* train = app.add_subcommand("train", "Train a policy on the dataset");
    add_common_flags(train, fo);
    train->add_option("--ref", ref_path, "Reference checkpoint path");
    train->add_option("--dataset", dataset, "Dataset path");
    train->add_option("--checkpoint", checkpoint, "Checkpoint output path (train.checkpoint)");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_common_flags(eval_cmd, fo);
    eval_cmd->add_option("--ref", ref_path, "Reference checkpoint path");
    eval_cmd->add_option("--dataset", dataset, "Dataset path (train-identity reference)");
    eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate (eval.checkpoint)");
    eval_cmd->add_option("--plane", plane, "Also write the energy/confidence plane CSV");
    eval_cmd->add_option("--results", results, "Results CSV path (eval.results)");
    eval_cmd->add_option("--method", method, "Method label for the results row");

    auto* sweep = app.add_subcommand("sweep", "Train+eval over a hyperparameter grid");
    add_common_flags(sweep, fo);
    sweep->add_option("--ref", ref_path, "Reference checkpoint path");
    sweep->add_option("--dataset", dataset, "Dataset path");
    sweep->add_option("--param", param, "Swept parameter: beta or mu");
    sweep->add_option("--grid", grid, "Comma-separated grid values");

    auto* repro = app.add_subcommand("repro-table1", "Chain every objective on one dataset");
    add_common_flags(repro, fo);
    repro->add_option("--ref", ref_path, "Reference checkpoint path");
    repro->add_option("--dataset", dataset, "Dataset path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        physio::Config cfg;
        fo.apply(cfg);
        if (!ref_path.empty()) cfg.set("ref.checkpoint", ref_path);
        if (!dataset.empty()) cfg.set("data.dataset", dataset);
        if (!plane.empty()) cfg.set("eval.plane", plane);
        if (!results.empty()) cfg.set("eval.results", results);
        if (!method.empty()) cfg.set("eval.method", method);
        if (!param.empty()) cfg.set("sweep.param", param);
        if (!grid.empty()) cfg.set("sweep.grid", grid);

        if (oracle_cmd->parsed()) return physio::cmd_oracle(cfg, seq_text);
        if (make_ref->parsed()) return physio::cmd_make_ref(cfg);
        if (gen_data->parsed()) return physio::cmd_gen_data(cfg);
        if (train->parsed()) {
            if (!checkpoint.empty()) cfg.set("train.checkpoint", checkpoint);
            return physio::cmd_train(cfg);
        }
        if (eval_cmd->parsed()) {
            if (!checkpoint.empty()) cfg.set("eval.checkpoint", checkpoint);
            return physio::cmd_eval(cfg);
        }
        if (sweep->parsed()) return physio::cmd_sweep(cfg);
        if (repro->parsed()) return physio::cmd_repro_table1(cfg);
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return physio::exit_code_for(e);
    }
}
