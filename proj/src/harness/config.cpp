#include "matsg/harness/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "matsg/core/error.hpp"

namespace matsg::harness {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (item.empty()) throw Error("empty list item");
        out.push_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::uint64_t to_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw Error("expected a non-negative integer, got '" + s + "'");
    return v;
}

double to_real(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw Error("expected a number, got '" + s + "'");
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw Error("expected true or false, got '" + s + "'");
}

sim::ActionSpace to_space(const std::string& s) {
    const auto a = sim::action_space_from_name(s);
    if (!a) throw Error("unknown action space '" + s + "'");
    return *a;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> s = {
        {"experiment",
         {{"kind",
           [](ExperimentConfig& c, const std::string& v) {
               if (v == "actions") c.kind = ExperimentKind::actions;
               else if (v == "ued") c.kind = ExperimentKind::ued;
               else throw Error("unknown experiment kind '" + v + "' (expected actions or ued)");
           }},
          {"seeds", [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_seed_list(v); }},
          {"env_steps", [](ExperimentConfig& c, const std::string& v) { c.env_steps = to_u64(v); }},
          {"updates", [](ExperimentConfig& c, const std::string& v) { c.updates = to_u64(v); }},
          {"bin", [](ExperimentConfig& c, const std::string& v) { c.bin = to_u64(v); }},
          {"out", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
          {"action_spaces",
           [](ExperimentConfig& c, const std::string& v) {
               c.action_spaces.clear();
               for (const auto& s : split_list(v)) c.action_spaces.push_back(to_space(s));
           }},
          {"action_space", [](ExperimentConfig& c, const std::string& v) { c.action_space = to_space(v); }},
          {"methods",
           [](ExperimentConfig& c, const std::string& v) {
               c.methods.clear();
               for (const auto& s : split_list(v)) c.methods.push_back(curriculum::method_from_name(s));
           }},
          {"eval_every", [](ExperimentConfig& c, const std::string& v) { c.eval_every = to_u64(v); }},
          {"eval_episodes", [](ExperimentConfig& c, const std::string& v) { c.eval_episodes = to_u64(v); }},
          {"checkpoints", [](ExperimentConfig& c, const std::string& v) { c.checkpoints = to_u64(v); }},
          {"hidden", [](ExperimentConfig& c, const std::string& v) { c.hidden = to_u64(v); }},
          {"freeze_policy", [](ExperimentConfig& c, const std::string& v) { c.freeze_policy = to_bool(v); }}}},
        {"scenario",
         {{"file", [](ExperimentConfig& c, const std::string& v) { c.scenario_file = v; }},
          {"map", [](ExperimentConfig& c, const std::string& v) { c.map_file = v; }}}},
        {"curriculum",
         {{"method",
           [](ExperimentConfig& c, const std::string& v) { c.methods = {curriculum::method_from_name(v)}; }},
          {"replay_prob", [](ExperimentConfig& c, const std::string& v) { c.curriculum.replay_prob = to_real(v); }},
          {"cem_population", [](ExperimentConfig& c, const std::string& v) { c.curriculum.cem.population = to_u64(v); }},
          {"cem_elite_fraction",
           [](ExperimentConfig& c, const std::string& v) { c.curriculum.cem.elite_fraction = to_real(v); }},
          {"cem_smoothing", [](ExperimentConfig& c, const std::string& v) { c.curriculum.cem.smoothing = to_real(v); }},
          {"buffer_capacity",
           [](ExperimentConfig& c, const std::string& v) { c.curriculum.buffer.capacity = to_u64(v); }},
          {"buffer_temperature",
           [](ExperimentConfig& c, const std::string& v) { c.curriculum.buffer.temperature = to_real(v); }},
          {"buffer_staleness",
           [](ExperimentConfig& c, const std::string& v) { c.curriculum.buffer.staleness_mix = to_real(v); }}}},
        {"ppo",
         {{"clip", [](ExperimentConfig& c, const std::string& v) { c.ppo.clip = to_real(v); }},
          {"gae_lambda", [](ExperimentConfig& c, const std::string& v) { c.ppo.gae_lambda = to_real(v); }},
          {"gamma", [](ExperimentConfig& c, const std::string& v) { c.ppo.gamma = to_real(v); }},
          {"epochs", [](ExperimentConfig& c, const std::string& v) { c.ppo.epochs = to_u64(v); }},
          {"minibatch", [](ExperimentConfig& c, const std::string& v) { c.ppo.minibatch = to_u64(v); }},
          {"learning_rate", [](ExperimentConfig& c, const std::string& v) { c.ppo.learning_rate = to_real(v); }},
          {"entropy_coef", [](ExperimentConfig& c, const std::string& v) { c.ppo.entropy_coef = to_real(v); }},
          {"value_coef", [](ExperimentConfig& c, const std::string& v) { c.ppo.value_coef = to_real(v); }},
          {"batch", [](ExperimentConfig& c, const std::string& v) { c.ppo.batch = to_u64(v); }},
          {"max_grad_norm", [](ExperimentConfig& c, const std::string& v) { c.ppo.max_grad_norm = to_real(v); }}}},
    };
    return s;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_list(text)) seeds.push_back(to_u64(s));
    return seeds;
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw Error("at least one seed is required");
    if (updates == 0) throw Error("updates must be positive");
    if (bin == 0) throw Error("bin size must be positive");
    if (hidden == 0) throw Error("hidden width must be positive");
    if (checkpoints == 0) throw Error("checkpoint count must be positive");
    if (eval_every > 0 && eval_episodes == 0) throw Error("eval_episodes must be positive when evaluating");
    if (kind == ExperimentKind::actions && action_spaces.empty()) throw Error("no action spaces selected");
    if (kind == ExperimentKind::ued && methods.empty()) throw Error("no curriculum methods selected");
    if (scenario_file.empty()) throw Error("scenario file is required");
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) throw Error("seeds must be distinct");
    curriculum.validate();
    learn::PpoConfig p = ppo;
    p.updates = updates;
    p.validate();
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::istringstream in{std::string(text)};
    std::string raw, section;
    std::set<std::string> seen;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        const auto where = "config line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(where + "unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!schema().count(section)) throw Error(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(where + "expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (section.empty()) throw Error(where + "key '" + key + "' outside a section");
        const auto& keys = schema().at(section);
        const auto it = keys.find(key);
        if (it == keys.end()) throw Error(where + "unknown key '" + key + "' in [" + section + "]");
        if (!seen.insert(section + "." + key).second) throw Error(where + "duplicate key '" + key + "'");
        if (value.empty()) throw Error(where + "missing value for '" + key + "'");
        try {
            it->second(cfg, value);
        } catch (const Error& e) {
            throw Error(where + e.what());
        }
    }
    cfg.ppo.updates = cfg.updates;
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    auto cfg = parse_config(ss.str());
    const auto dir = std::filesystem::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (dir / p).lexically_normal().string();
    };
    resolve(cfg.scenario_file);
    resolve(cfg.map_file);
    return cfg;
}

}  // namespace matsg::harness
