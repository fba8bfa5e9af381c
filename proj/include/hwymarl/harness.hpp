#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hwymarl/ma2c.hpp"

namespace hwy::harness {

// Everything a run needs. Field names double as config-file keys.
struct RunConfig {
    DensityMode density_mode = DensityMode::D1;
    double politeness = 0.0;
    std::string reward_scope = "local";  // local | global
    double neighbor_radius = 60.0;
    std::string trunk = "shared";        // shared | separate
    double comfort_weight = 1.0;

    double w_s = 200.0;
    double w_d = 4.0;
    double w_v = 1.0;
    double t_d = 1.2;
    double a_th = 3.0;
    double v_min = 20.0;
    double v_max = 30.0;

    double v0 = 30.0;
    double T = 1.5;
    double a_max = 3.0;
    double b_comf = 5.0;
    double delta = 4.0;
    double s0 = 10.0;
    double b_safe = 9.0;
    double delta_a_th = 0.1;

    int n_obs = 5;
    double obs_range = 100.0;
    int horizon = 100;

    double gamma = 0.99;
    double eta = 5e-4;
    int rollout_len = 20;
    std::int64_t total_steps = 50000;
    int eval_every = 200;
    int eval_episodes = 3;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    bool normalize_advantages = true;
    double reward_scale = 20.0;
    int n_envs = 8;
    int threads = 1;
    // Zeroes the wall-clock column so metrics files are byte-reproducible.
    bool deterministic = true;

    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds = {1, 2};
    std::string output_dir;

    bool operator==(const RunConfig&) const = default;
};

// Config keys in the order they are written.
const std::vector<std::string>& config_keys();
std::string get_setting(const RunConfig& cfg, const std::string& key);
// Throws ContractError for unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// Flat "key = value" text, '#' comments allowed.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});
std::string to_config_text(const RunConfig& cfg);
void validate(const RunConfig& cfg);

std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b);

EnvConfig to_env_config(const RunConfig& cfg);
TrainConfig to_train_config(const RunConfig& cfg, std::uint64_t seed);

// $HWYMARL_OUTPUT_ROOT, else ./runs
std::filesystem::path default_output_root();

// metrics.csv
inline constexpr const char* kMetricsHeader =
    "step,episode,eval_return_mean,eval_return_std,collision_rate,mean_speed,accel_std,lane_changes_per_episode,"
    "wall_clock_s";
std::string format_metrics_row(const MetricsRow& row);
void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
// Strict: exact header, nine numeric columns, non-decreasing step.
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

struct RunOutcome {
    std::filesystem::path dir;
    TrainResult result;
};

// Trains one seed into `dir`: config.txt, metrics.csv, best.ckpt, last.ckpt, train_state.txt, summary.txt.
// With `resume_dir`, continues from that run's last checkpoint and counters.
RunOutcome run_training(const RunConfig& cfg, const std::filesystem::path& dir,
                        const std::optional<std::filesystem::path>& resume_dir = std::nullopt);

enum class AblationAxis { RewardScope, Trunk, Comfort, Politeness };
AblationAxis parse_axis(const std::string& text);
const char* to_string(AblationAxis axis);

struct AblationArm {
    std::string name;
    RunConfig config;
};
std::vector<AblationArm> ablation_arms(AblationAxis axis, const RunConfig& base);

struct ArmSummary {
    std::string arm;
    int seeds = 0;
    double final_return_mean = 0.0;  // mean over seeds of the final evaluation return
    double final_return_std = 0.0;   // spread over seeds
    double accel_std = 0.0;
    double collision_rate = 0.0;
    double mean_speed = 0.0;
};

struct AblationResult {
    std::vector<ArmSummary> arms;
    std::filesystem::path table;
};

// Runs every arm on every seed in base.seeds under out_dir/<axis>/<arm>/seed_<s>, then
// writes out_dir/<axis>/comparison.csv. `jobs` > 1 trains runs concurrently.
AblationResult run_ablation(AblationAxis axis, const RunConfig& base, const std::filesystem::path& out_dir,
                            int jobs = 1);

Policy baseline_policy(const std::string& kind);

// Evaluation summary in MetricsRow shape.
MetricsRow to_metrics_row(const EvalMetrics& m, std::int64_t step = 0, std::int64_t episode = 0);

// Line-delimited JSON, one record per control step:
// {"type":"step","step":k,"time":s,"done":b,"collisions":[[id,id],..],
//  "vehicles":[{"id","kind","lane","target_lane","x","y","v","a","action"},..]}
// Uses the same episode and policy streams as evaluate(policy, ..., 1, seed).
int write_trace(const Policy& policy, const EnvConfig& env, DensityMode density, std::uint64_t seed, int steps,
                std::ostream& out);

}  // namespace hwy::harness
