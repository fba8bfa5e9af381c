#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hwymarl/errors.hpp"
#include "hwymarl/harness.hpp"

namespace hwy::harness {

namespace fs = std::filesystem;

namespace {

std::string num(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto strip = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
    }
    return kv;
}

template <typename T>
T parse_field(const std::string& text, const fs::path& path, int line) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw LoadError(path.string() + ":" + std::to_string(line) + ": bad field '" + text + "'");
    }
    return value;
}

}  // namespace

std::string format_metrics_row(const MetricsRow& r) {
    return std::to_string(r.step) + "," + std::to_string(r.episode) + "," + num(r.eval_return_mean) + "," +
           num(r.eval_return_std) + "," + num(r.collision_rate) + "," + num(r.mean_speed) + "," + num(r.accel_std) +
           "," + num(r.lane_changes_per_episode) + "," + num(r.wall_clock_s);
}

void write_metrics(const fs::path& path, const std::vector<MetricsRow>& rows) {
    std::string out = std::string(kMetricsHeader) + "\n";
    for (const MetricsRow& r : rows) out += format_metrics_row(r) + "\n";
    write_text(path, out);
}

std::vector<MetricsRow> read_metrics(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open metrics file " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw LoadError(path.string() + ": unexpected metrics header");
    }
    std::vector<MetricsRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) cols.push_back(item);
        if (cols.size() != 9) throw LoadError(path.string() + ":" + std::to_string(line_no) + ": expected 9 columns");
        MetricsRow r;
        r.step = parse_field<std::int64_t>(cols[0], path, line_no);
        r.episode = parse_field<std::int64_t>(cols[1], path, line_no);
        r.eval_return_mean = parse_field<double>(cols[2], path, line_no);
        r.eval_return_std = parse_field<double>(cols[3], path, line_no);
        r.collision_rate = parse_field<double>(cols[4], path, line_no);
        r.mean_speed = parse_field<double>(cols[5], path, line_no);
        r.accel_std = parse_field<double>(cols[6], path, line_no);
        r.lane_changes_per_episode = parse_field<double>(cols[7], path, line_no);
        r.wall_clock_s = parse_field<double>(cols[8], path, line_no);
        if (!rows.empty() && r.step < rows.back().step) {
            throw LoadError(path.string() + ":" + std::to_string(line_no) + ": step column decreases");
        }
        rows.push_back(r);
    }
    return rows;
}

MetricsRow to_metrics_row(const EvalMetrics& m, std::int64_t step, std::int64_t episode) {
    return {step, episode, m.return_mean, m.return_std, m.collision_rate, m.mean_speed, m.accel_std,
            m.lane_changes_per_episode, 0.0};
}

RunOutcome run_training(const RunConfig& cfg, const fs::path& dir, const std::optional<fs::path>& resume_dir) {
    validate(cfg);
    if (cfg.deterministic && cfg.threads > 1) {
        throw ContractError("deterministic runs are single-threaded; set threads = 1 or deterministic = false");
    }
    const TrainConfig tc = to_train_config(cfg, cfg.seed);

    TrainState start;
    std::vector<MetricsRow> previous;
    if (resume_dir) {
        const fs::path ckpt = *resume_dir / "last.ckpt";
        nn::NetworkParams params = nn::load_checkpoint(ckpt);
        if (params.architecture().trunk != tc.arch.trunk) {
            throw ContractError("checkpoint " + ckpt.string() + " holds a " + nn::to_string(params.architecture().trunk) +
                                "-trunk network but trunk = " + cfg.trunk +
                                " was requested; resume with --trunk " + nn::to_string(params.architecture().trunk) +
                                " or start a fresh run");
        }
        if (!(params.architecture() == tc.arch)) {
            throw ContractError("checkpoint " + ckpt.string() + " has different network dimensions (n_obs = " +
                                std::to_string(params.architecture().n_obs) + ")");
        }
        const auto state = read_key_values(*resume_dir / "train_state.txt");
        try {
            start.step = std::stoll(state.at("step"));
            start.episode = std::stoll(state.at("episode"));
        } catch (const std::exception&) {
            throw LoadError("malformed train_state.txt in " + resume_dir->string());
        }
        start.params = std::move(params);
        if (fs::exists(*resume_dir / "metrics.csv")) previous = read_metrics(*resume_dir / "metrics.csv");
    }

    fs::create_directories(dir);
    write_text(dir / "config.txt", to_config_text(cfg));

    RunOutcome outcome{dir, train(tc, start)};
    TrainResult& res = outcome.result;
    if (cfg.deterministic) {
        for (MetricsRow& r : res.log) r.wall_clock_s = 0.0;
    }
    std::vector<MetricsRow> rows = previous;
    rows.insert(rows.end(), res.log.begin(), res.log.end());
    write_metrics(dir / "metrics.csv", rows);

    nn::save_checkpoint(res.final_params, dir / "last.ckpt");
    nn::save_checkpoint(res.best_params, dir / "best.ckpt");
    write_text(dir / "train_state.txt",
               "step = " + std::to_string(res.steps) + "\nepisode = " + std::to_string(res.episodes) + "\n");

    std::ostringstream summary;
    summary << "density " << to_string(cfg.density_mode) << ", seed " << cfg.seed << ", trunk " << cfg.trunk
            << ", reward_scope " << cfg.reward_scope << ", comfort_weight " << cfg.comfort_weight << ", politeness "
            << cfg.politeness << "\n";
    summary << "trained " << res.steps - start.step << " steps (" << res.steps << " total), "
            << res.episodes - start.episode << " episodes (" << res.episodes << " total)\n";
    if (!res.log.empty()) {
        const MetricsRow& last = res.log.back();
        summary << "final eval: return " << last.eval_return_mean << " +- " << last.eval_return_std
                << ", collision rate " << last.collision_rate << ", mean speed " << last.mean_speed
                << " m/s, accel std " << last.accel_std << " m/s^2, lane changes/episode "
                << last.lane_changes_per_episode << "\n";
        summary << "best eval return " << res.best_return << " (best.ckpt)\n";
    }
    write_text(dir / "summary.txt", summary.str());
    return outcome;
}

AblationAxis parse_axis(const std::string& text) {
    if (text == "reward_scope") return AblationAxis::RewardScope;
    if (text == "trunk") return AblationAxis::Trunk;
    if (text == "comfort") return AblationAxis::Comfort;
    if (text == "politeness") return AblationAxis::Politeness;
    throw ContractError("unknown ablation axis '" + text + "' (reward_scope, trunk, comfort, politeness)");
}

const char* to_string(AblationAxis axis) {
    switch (axis) {
        case AblationAxis::RewardScope: return "reward_scope";
        case AblationAxis::Trunk: return "trunk";
        case AblationAxis::Comfort: return "comfort";
        case AblationAxis::Politeness: return "politeness";
    }
    return "?";
}

std::vector<AblationArm> ablation_arms(AblationAxis axis, const RunConfig& base) {
    AblationArm a{"", base}, b{"", base};
    switch (axis) {
        case AblationAxis::RewardScope:
            a.name = "local", a.config.reward_scope = "local";
            b.name = "global", b.config.reward_scope = "global";
            break;
        case AblationAxis::Trunk:
            a.name = "shared", a.config.trunk = "shared";
            b.name = "separate", b.config.trunk = "separate";
            break;
        case AblationAxis::Comfort:
            a.name = "comfort", a.config.comfort_weight = 1.0;
            b.name = "no_comfort", b.config.comfort_weight = 0.0;
            break;
        case AblationAxis::Politeness:
            a.name = "p0", a.config.politeness = 0.0;
            b.name = "p1", b.config.politeness = 1.0;
            break;
    }
    return {a, b};
}

AblationResult run_ablation(AblationAxis axis, const RunConfig& base, const fs::path& out_dir, int jobs) {
    validate(base);
    const auto arms = ablation_arms(axis, base);
    const fs::path root = out_dir / to_string(axis);

    struct Job {
        std::size_t arm;
        std::uint64_t seed;
    };
    std::vector<Job> job_list;
    for (std::size_t a = 0; a < arms.size(); ++a) {
        for (std::uint64_t s : base.seeds) job_list.push_back({a, s});
    }
    std::vector<MetricsRow> finals(job_list.size());

#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs)) if (jobs > 1)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(job_list.size()); ++j) {
        const Job& job = job_list[static_cast<std::size_t>(j)];
        RunConfig cfg = arms[job.arm].config;
        cfg.seed = job.seed;
        const fs::path dir = root / arms[job.arm].name / ("seed_" + std::to_string(job.seed));
        const RunOutcome outcome = run_training(cfg, dir);
        if (!outcome.result.log.empty()) finals[static_cast<std::size_t>(j)] = outcome.result.log.back();
    }

    AblationResult result;
    std::string table = "arm,seeds,final_return_mean,final_return_std,accel_std,collision_rate,mean_speed\n";
    for (std::size_t a = 0; a < arms.size(); ++a) {
        ArmSummary s;
        s.arm = arms[a].name;
        std::vector<double> rets;
        for (std::size_t j = 0; j < job_list.size(); ++j) {
            if (job_list[j].arm != a) continue;
            rets.push_back(finals[j].eval_return_mean);
            s.accel_std += finals[j].accel_std;
            s.collision_rate += finals[j].collision_rate;
            s.mean_speed += finals[j].mean_speed;
        }
        s.seeds = static_cast<int>(rets.size());
        const double n = static_cast<double>(rets.size());
        for (double r : rets) s.final_return_mean += r / n;
        for (double r : rets) s.final_return_std += (r - s.final_return_mean) * (r - s.final_return_mean) / n;
        s.final_return_std = std::sqrt(s.final_return_std);
        s.accel_std /= n;
        s.collision_rate /= n;
        s.mean_speed /= n;
        table += s.arm + "," + std::to_string(s.seeds) + "," + num(s.final_return_mean) + "," +
                 num(s.final_return_std) + "," + num(s.accel_std) + "," + num(s.collision_rate) + "," +
                 num(s.mean_speed) + "\n";
        result.arms.push_back(s);
    }
    fs::create_directories(root);
    result.table = root / "comparison.csv";
    write_text(result.table, table);
    return result;
}

Policy baseline_policy(const std::string& kind) {
    if (kind == "random") return random_policy();
    if (kind == "idle") return idle_policy();
    throw ContractError("unknown baseline policy '" + kind + "' (random or idle)");
}

}  // namespace hwy::harness
