#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "hwymarl/errors.hpp"
#include "hwymarl/harness.hpp"

namespace hwy::harness {

namespace {

std::string fmt_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const std::string t = trim(text);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ContractError("invalid value '" + text + "' for " + key);
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    throw ContractError("invalid boolean '" + text + "' for " + key + " (use true/false)");
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
Field number(const char* key, T RunConfig::*member) {
    return {key,
            [member](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<T>) {
                    return fmt_double(c.*member);
                } else {
                    return std::to_string(c.*member);
                }
            },
            [member, key](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); }};
}

Field flag(const char* key, bool RunConfig::*member) {
    return {key, [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); },
            [member, key](RunConfig& c, const std::string& v) { c.*member = parse_bool(key, v); }};
}

Field text(const char* key, std::string RunConfig::*member) {
    return {key, [member](const RunConfig& c) { return c.*member; },
            [member](RunConfig& c, const std::string& v) { c.*member = trim(v); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        {"density_mode", [](const RunConfig& c) { return std::string(to_string(c.density_mode)); },
         [](RunConfig& c, const std::string& v) { c.density_mode = parse_density(trim(v)); }},
        number("politeness", &RunConfig::politeness),
        text("reward_scope", &RunConfig::reward_scope),
        number("neighbor_radius", &RunConfig::neighbor_radius),
        text("trunk", &RunConfig::trunk),
        number("comfort_weight", &RunConfig::comfort_weight),
        number("w_s", &RunConfig::w_s),
        number("w_d", &RunConfig::w_d),
        number("w_v", &RunConfig::w_v),
        number("t_d", &RunConfig::t_d),
        number("a_th", &RunConfig::a_th),
        number("v_min", &RunConfig::v_min),
        number("v_max", &RunConfig::v_max),
        number("v0", &RunConfig::v0),
        number("T", &RunConfig::T),
        number("a_max", &RunConfig::a_max),
        number("b_comf", &RunConfig::b_comf),
        number("delta", &RunConfig::delta),
        number("s0", &RunConfig::s0),
        number("b_safe", &RunConfig::b_safe),
        number("delta_a_th", &RunConfig::delta_a_th),
        number("n_obs", &RunConfig::n_obs),
        number("obs_range", &RunConfig::obs_range),
        number("horizon", &RunConfig::horizon),
        number("gamma", &RunConfig::gamma),
        number("eta", &RunConfig::eta),
        number("rollout_len", &RunConfig::rollout_len),
        number("total_steps", &RunConfig::total_steps),
        number("eval_every", &RunConfig::eval_every),
        number("eval_episodes", &RunConfig::eval_episodes),
        number("entropy_coef", &RunConfig::entropy_coef),
        number("value_coef", &RunConfig::value_coef),
        flag("normalize_advantages", &RunConfig::normalize_advantages),
        number("reward_scale", &RunConfig::reward_scale),
        number("n_envs", &RunConfig::n_envs),
        number("threads", &RunConfig::threads),
        flag("deterministic", &RunConfig::deterministic),
        number("seed", &RunConfig::seed),
        {"seeds",
         [](const RunConfig& c) {
             std::string out;
             for (std::size_t i = 0; i < c.seeds.size(); ++i) out += (i ? "," : "") + std::to_string(c.seeds[i]);
             return out;
         },
         [](RunConfig& c, const std::string& v) {
             std::vector<std::uint64_t> seeds;
             std::stringstream ss(v);
             std::string item;
             while (std::getline(ss, item, ',')) seeds.push_back(parse_number<std::uint64_t>("seeds", item));
             if (seeds.empty()) throw ContractError("seeds must list at least one seed");
             c.seeds = seeds;
         }},
        text("output_dir", &RunConfig::output_dir),
    };
    return table;
}

const Field& field(const std::string& key) {
    for (const Field& f : fields()) {
        if (f.key == key) return f;
    }
    throw ContractError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const Field& f : fields()) k.push_back(f.key);
        return k;
    }();
    return keys;
}

std::string get_setting(const RunConfig& cfg, const std::string& key) { return field(key).get(cfg); }

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) { field(key).set(cfg, value); }

RunConfig parse_config(const std::string& content, RunConfig base) {
    std::istringstream in(content);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ContractError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string to_config_text(const RunConfig& cfg) {
    std::string out;
    for (const Field& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
    return out;
}

void validate(const RunConfig& cfg) {
    if (cfg.reward_scope != "local" && cfg.reward_scope != "global") {
        throw ContractError("reward_scope must be 'local' or 'global', got '" + cfg.reward_scope + "'");
    }
    nn::parse_trunk(cfg.trunk);
    if (cfg.seeds.empty()) throw ContractError("seeds must list at least one seed");
    to_env_config(cfg).validate();
    to_train_config(cfg, cfg.seed).hp.validate();
}

std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b) {
    std::vector<std::string> keys;
    for (const Field& f : fields()) {
        if (f.get(a) != f.get(b)) keys.push_back(f.key);
    }
    return keys;
}

EnvConfig to_env_config(const RunConfig& cfg) {
    EnvConfig env;
    RewardConfig& r = env.reward;
    r.w_s = cfg.w_s;
    r.w_d = cfg.w_d;
    r.w_v = cfg.w_v;
    r.w_c = cfg.comfort_weight;
    r.t_d = cfg.t_d;
    r.a_th = cfg.a_th;
    r.v_min = cfg.v_min;
    r.v_max = cfg.v_max;
    // The global-reward arm is the local rule with a radius spanning the whole road.
    r.neighbor_radius = cfg.reward_scope == "global" ? env.traffic.road.length : cfg.neighbor_radius;
    env.traffic.road.speed_min = cfg.v_min;
    env.traffic.road.speed_max = cfg.v_max;

    env.idm = {cfg.v0, cfg.T, cfg.a_max, cfg.b_comf, cfg.delta, cfg.s0};
    env.mobil = {cfg.politeness, cfg.b_safe, cfg.delta_a_th};
    env.n_obs = cfg.n_obs;
    env.obs_range = cfg.obs_range;
    env.horizon = cfg.horizon;
    return env;
}

TrainConfig to_train_config(const RunConfig& cfg, std::uint64_t seed) {
    TrainConfig tc;
    tc.env = to_env_config(cfg);
    tc.density = cfg.density_mode;
    Hyperparams& hp = tc.hp;
    hp.gamma = cfg.gamma;
    hp.eta = cfg.eta;
    hp.rollout_len = cfg.rollout_len;
    hp.total_steps = cfg.total_steps;
    hp.eval_every = cfg.eval_every;
    hp.eval_episodes = cfg.eval_episodes;
    hp.entropy_coef = cfg.entropy_coef;
    hp.value_coef = cfg.value_coef;
    hp.normalize_advantages = cfg.normalize_advantages;
    hp.reward_scale = cfg.reward_scale;
    hp.seed = seed;
    hp.n_envs = cfg.n_envs;
    hp.threads = cfg.threads;
    tc.arch.n_obs = cfg.n_obs;
    tc.arch.trunk = nn::parse_trunk(cfg.trunk);
    return tc;
}

std::filesystem::path default_output_root() {
    if (const char* root = std::getenv("HWYMARL_OUTPUT_ROOT"); root && *root) return root;
    return "runs";
}

}  // namespace hwy::harness
