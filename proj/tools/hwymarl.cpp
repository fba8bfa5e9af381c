// Command-line front end: train, evaluate, ablation, rollout.

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hwymarl/errors.hpp"
#include "hwymarl/harness.hpp"

namespace fs = std::filesystem;
using namespace hwy;
using namespace hwy::harness;

namespace {

// Flags shared by every subcommand that builds a RunConfig.
struct ConfigFlags {
    std::string config_file;
    std::map<std::string, std::string> named;  // config key -> flag value
    std::vector<std::string> sets;

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "flat key = value config file")->check(CLI::ExistingFile);
        add(app, "--density", "density_mode", "traffic density D1 | D2 | D3");
        add(app, "--seed", "seed", "training / evaluation seed");
        add(app, "--seeds", "seeds", "comma-separated seed list for ablations");
        add(app, "--total-steps", "total_steps", "environment steps to train");
        add(app, "--trunk", "trunk", "shared | separate actor-critic trunk");
        add(app, "--reward-scope", "reward_scope", "local | global");
        add(app, "--neighbor-radius", "neighbor_radius", "local reward radius, m");
        add(app, "--comfort-weight", "comfort_weight", "comfort penalty weight w_c");
        add(app, "--politeness", "politeness", "HDV MOBIL politeness p in [0,1]");
        add(app, "--threads", "threads", "worker threads (1 = serial, deterministic)");
        add(app, "--n-envs", "n_envs", "environments collected per update");
        add(app, "--eval-episodes", "eval_episodes", "episodes per evaluation");
        app->add_option("--set", sets, "override any config key: --set key=value");
    }

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(
            flag, [this, key](const std::string& v) { named[key] = v; }, help);
    }

    RunConfig build() const {
        RunConfig cfg = config_file.empty() ? RunConfig{} : load_config_file(config_file);
        for (const auto& [key, value] : named) apply_setting(cfg, key, value);
        for (const std::string& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ContractError("--set expects key=value, got '" + s + "'");
            apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
        }
        validate(cfg);
        return cfg;
    }
};

fs::path output_root(const RunConfig& cfg, const std::string& flag) {
    if (!flag.empty()) return flag;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    return default_output_root();
}

Policy policy_from(const std::string& checkpoint, const std::string& baseline, nn::NetworkParams& storage,
                   const RunConfig& cfg) {
    if (!checkpoint.empty() && !baseline.empty()) throw ContractError("pass either --checkpoint or --policy, not both");
    if (!baseline.empty()) return baseline_policy(baseline);
    if (checkpoint.empty()) throw ContractError("--checkpoint or --policy is required");
    storage = nn::load_checkpoint(checkpoint);
    if (storage.architecture().n_obs != cfg.n_obs) {
        throw ContractError("checkpoint expects n_obs = " + std::to_string(storage.architecture().n_obs) +
                            " but the config uses n_obs = " + std::to_string(cfg.n_obs));
    }
    return greedy_policy(storage);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent A2C for cooperative highway lane changing"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a shared-parameter MA2C policy");
    ConfigFlags train_flags;
    train_flags.attach(train_cmd);
    std::string train_out, resume;
    train_cmd->add_option("--out", train_out, "run directory (default: <output root>/train_<density>_seed<seed>)");
    train_cmd->add_option("--resume", resume, "run directory to continue from")->check(CLI::ExistingDirectory);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "greedy evaluation of a checkpoint or baseline policy");
    ConfigFlags eval_flags;
    eval_flags.attach(eval_cmd);
    std::string eval_ckpt, eval_policy, eval_out;
    int eval_episodes = 3;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "network checkpoint");
    eval_cmd->add_option("--policy", eval_policy, "baseline policy: random | idle");
    eval_cmd->add_option("--episodes", eval_episodes, "evaluation episodes")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--out", eval_out, "write the metrics record to this CSV file");

    // ablation
    auto* abl_cmd = app.add_subcommand("ablation", "paired runs differing in one axis");
    ConfigFlags abl_flags;
    abl_flags.attach(abl_cmd);
    std::string axis, abl_out;
    int jobs = 1;
    abl_cmd->add_option("--axis", axis, "reward_scope | trunk | comfort | politeness")->required();
    abl_cmd->add_option("--out", abl_out, "output root");
    abl_cmd->add_option("--jobs", jobs, "runs trained concurrently")->check(CLI::PositiveNumber);

    // rollout
    auto* roll_cmd = app.add_subcommand("rollout", "write a per-step JSON-lines trace of one episode");
    ConfigFlags roll_flags;
    roll_flags.attach(roll_cmd);
    std::string roll_ckpt, roll_policy, roll_out;
    int roll_steps = 40;
    roll_cmd->add_option("--checkpoint", roll_ckpt, "network checkpoint");
    roll_cmd->add_option("--policy", roll_policy, "baseline policy: random | idle");
    roll_cmd->add_option("--steps", roll_steps, "maximum steps to record")->check(CLI::PositiveNumber);
    roll_cmd->add_option("--out", roll_out, "trace file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            const RunConfig cfg = train_flags.build();
            fs::path dir = train_out.empty() ? output_root(cfg, "") / ("train_" + std::string(to_string(cfg.density_mode)) +
                                                                       "_seed" + std::to_string(cfg.seed))
                                             : fs::path(train_out);
            std::optional<fs::path> from;
            if (!resume.empty()) from = fs::path(resume);
            const RunOutcome out = run_training(cfg, dir, from);
            std::ifstream summary(out.dir / "summary.txt");
            std::cout << summary.rdbuf() << "run directory: " << out.dir.string() << "\n";
        } else if (*eval_cmd) {
            const RunConfig cfg = eval_flags.build();
            nn::NetworkParams storage;
            const Policy policy = policy_from(eval_ckpt, eval_policy, storage, cfg);
            const EvalMetrics m = evaluate(policy, to_env_config(cfg), cfg.density_mode, eval_episodes, cfg.seed);
            const std::string line = format_metrics_row(to_metrics_row(m));
            std::cout << kMetricsHeader << "\n" << line << "\n";
            if (!eval_out.empty()) write_metrics(eval_out, {to_metrics_row(m)});
        } else if (*abl_cmd) {
            const RunConfig cfg = abl_flags.build();
            const AblationResult res = run_ablation(parse_axis(axis), cfg, output_root(cfg, abl_out), jobs);
            std::ifstream table(res.table);
            std::cout << table.rdbuf() << "comparison table: " << res.table.string() << "\n";
        } else if (*roll_cmd) {
            const RunConfig cfg = roll_flags.build();
            nn::NetworkParams storage;
            const Policy policy = policy_from(roll_ckpt, roll_policy, storage, cfg);
            const EnvConfig env = to_env_config(cfg);
            if (roll_out.empty()) {
                write_trace(policy, env, cfg.density_mode, cfg.seed, roll_steps, std::cout);
            } else {
                std::ofstream out(roll_out, std::ios::trunc);
                if (!out) throw Error("cannot write " + roll_out);
                const int n = write_trace(policy, env, cfg.density_mode, cfg.seed, roll_steps, out);
                std::cerr << n << " step records written to " << roll_out << "\n";
            }
        }
    } catch (const hwy::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
