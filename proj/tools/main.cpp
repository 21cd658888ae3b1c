#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lbvae/errors.hpp"

using namespace lbvae::cli;

namespace {

void add_single_run_flags(CLI::App *cmd, SingleRunArgs &a) {
    cmd->add_option("--config", a.config, "GenerativeConfig JSON (or a manifest); sampled from --seed when omitted");
    cmd->add_option("--beta", a.beta, "KL weight")->required();
    cmd->add_option("--lambda", a.lambda, "L2 penalty weight")->capture_default_str();
    cmd->add_option("--seed", a.seed, "master seed for config sampling and initialization")->required();
    cmd->add_option("--trace", a.trace, "write the per-iteration trace CSV here");
    cmd->add_option("--out", a.out, "also write the JSON report here");
    cmd->add_flag("--trivial-init", a.trivial_init, "start from (0, 0, Sigma_Y, I)");
    cmd->add_option("--init-scale", a.init_scale, "scale of the random initialization")->capture_default_str();
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Linear-Gaussian beta-VAE / lambda-beta-VAE toolkit"};
    app.set_version_flag("--version", LBVAE_VERSION);
    app.require_subcommand(1);

    GenConfigArgs gen;
    auto *gen_cmd = app.add_subcommand("gen-config", "write a generative or sweep config JSON");
    gen_cmd->add_option("--kind", gen.kind, "generative | sweep")->capture_default_str();
    gen_cmd->add_option("--n", gen.n, "observation dimension")->capture_default_str();
    gen_cmd->add_option("--m", gen.m, "latent dimension")->capture_default_str();
    gen_cmd->add_option("--s", gen.s, "number of factors")->capture_default_str();
    gen_cmd->add_option("--sigma-sq", gen.sigma_sq, "observation noise variance")->capture_default_str();
    gen_cmd->add_option("--variance-range", gen.variance_range, "factor variance range: low high")
        ->expected(2)
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "master seed")->required();
    gen_cmd->add_option("--out", gen.out, "output path")->required();
    gen_cmd->add_option("--beta-grid", gen.beta_grid, "sweep: beta values");
    gen_cmd->add_option("--lambda-grid", gen.lambda_grid, "sweep: lambda values");
    gen_cmd->add_option("--trials", gen.trials, "sweep: trials per cell");
    gen_cmd->add_option("--procedures", gen.procedures, "sweep: fixed_point and/or optimize");

    SingleRunArgs fp;
    auto *fp_cmd = app.add_subcommand("fixed-point", "run the fixed-point iteration for one trial");
    add_single_run_flags(fp_cmd, fp);
    fp_cmd->add_option("--tol", fp.tol, "residual tolerance")->capture_default_str();
    fp_cmd->add_option("--max-iter", fp.max_iter, "iteration cap")->capture_default_str();

    SingleRunArgs opt;
    auto *opt_cmd = app.add_subcommand("optimize", "run full-batch AdamW for one trial");
    add_single_run_flags(opt_cmd, opt);
    opt_cmd->add_option("--lr", opt.lr, "learning rate")->capture_default_str();
    opt_cmd->add_option("--weight-decay", opt.weight_decay, "decoupled weight decay")->capture_default_str();
    opt_cmd->add_option("--steps", opt.steps, "number of steps")->capture_default_str();
    opt_cmd->add_option("--grad-tol", opt.grad_tol, "stop once the gradient norm drops below this")
        ->capture_default_str();
    opt_cmd->add_option("--record-every", opt.record_every, "trace stride")->capture_default_str();

    SweepArgs sw;
    auto *sw_cmd = app.add_subcommand("sweep", "run a (beta, lambda) grid sweep");
    sw_cmd->add_option("--config", sw.config, "SweepConfig JSON or a previous sweep manifest");
    sw_cmd->add_option("--seed", sw.seed, "master seed")->required();
    sw_cmd->add_option("--out-dir", sw.out_dir, "output directory")->required();
    sw_cmd->add_option("--threads", sw.threads, "worker threads (0 = all cores)");
    sw_cmd->add_option("--trials", sw.trials, "override trials per cell");
    sw_cmd->add_option("--procedures", sw.procedures, "override procedures");

    SelectArgs sel;
    auto *sel_cmd = app.add_subcommand("select", "pick (beta, lambda) by augmented Tchebycheff scalarization");
    sel_cmd->add_option("--input", sel.input, "aggregates.json or records.csv from a sweep")->required();
    sel_cmd->add_option("--w1", sel.w1, "weight on reconstruction; w2 = 1 - w1")->capture_default_str();
    sel_cmd->add_option("--rho", sel.rho, "augmentation parameter")->capture_default_str();
    sel_cmd->add_option("--metric", sel.metric, "entanglement backend: im | mig")->capture_default_str();
    sel_cmd->add_option("--procedure", sel.procedure, "fixed_point | optimize")->capture_default_str();
    sel_cmd->add_option("--out-dir", sel.out_dir, "output directory")->required();

    VerifyArgs ver;
    auto *ver_cmd = app.add_subcommand("verify", "run the runtime invariant suite");
    ver_cmd->add_option("--seed", ver.seed, "master seed")->required();
    ver_cmd->add_option("--n", ver.n)->capture_default_str();
    ver_cmd->add_option("--m", ver.m)->capture_default_str();
    ver_cmd->add_option("--s", ver.s)->capture_default_str();
    ver_cmd->add_option("--trials", ver.trials, "trials per check")->capture_default_str();
    ver_cmd->add_option("--mc-samples", ver.mc_samples, "Monte-Carlo samples per parameter set")
        ->capture_default_str();
    ver_cmd->add_option("--out", ver.out, "write the check list as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen_cmd) { return cmd_gen_config(gen); }
        if (*fp_cmd) { return cmd_fixed_point(fp); }
        if (*opt_cmd) { return cmd_optimize(opt); }
        if (*sw_cmd) { return cmd_sweep(sw); }
        if (*sel_cmd) { return cmd_select(sel); }
        if (*ver_cmd) { return cmd_verify(ver); }
    } catch (const lbvae::NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const lbvae::DomainError &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
