#include "matsg/harness/analysis.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <regex>
#include <sstream>

#include "matsg/core/error.hpp"
#include "matsg/dsl/parser.hpp"
#include "matsg/harness/experiments.hpp"
#include "matsg/harness/plot.hpp"

namespace matsg::harness {

namespace fs = std::filesystem;

namespace {

const std::string* bound(const dsl::ScenarioSpec& spec, dsl::Knob k) {
    const auto it = spec.bindings.find(k);
    return it == spec.bindings.end() ? nullptr : &it->second;
}

double as_number(const dsl::ParamValue& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return NAN;
}

struct SnapshotFile {
    std::string run;
    std::uint64_t seed = 0;
    std::size_t checkpoint = 0;
    std::string path;
    std::uint64_t step = 0;
};

// snapshots/<run>_s<seed>_c<k>_<kind>.csv, sorted by run, seed, checkpoint.
std::vector<SnapshotFile> list_snapshots(const std::string& dir, const std::string& kind) {
    std::vector<SnapshotFile> out;
    const auto snap = fs::path(dir) / "snapshots";
    if (!fs::exists(snap)) return out;
    const std::regex re("(.+)_s([0-9]+)_c([0-9]+)_" + kind + "\\.csv");
    for (const auto& e : fs::directory_iterator(snap)) {
        std::smatch m;
        const auto name = e.path().filename().string();
        if (!std::regex_match(name, m, re)) continue;
        SnapshotFile f{m[1], std::stoull(m[2]), std::stoull(m[3]), e.path().string(), 0};
        const auto gen = snap / (m[1].str() + "_s" + m[2].str() + "_c" + m[3].str() + "_generator.txt");
        if (fs::exists(gen)) {
            std::istringstream in(read_text(gen.string()));
            std::string word;
            in >> word >> f.step;
        }
        out.push_back(std::move(f));
    }
    std::sort(out.begin(), out.end(), [](const SnapshotFile& a, const SnapshotFile& b) {
        return std::tie(a.run, a.seed, a.checkpoint) < std::tie(b.run, b.seed, b.checkpoint);
    });
    return out;
}

std::string cell(double v) { return std::isfinite(v) ? format_number(v) : "NA"; }

std::size_t npc_bucket(double n) {
    if (!(n > 0.0)) return 0;
    return std::min<std::size_t>(3, static_cast<std::size_t>(std::ceil(n / 2.0)));
}

}  // namespace

ParamSummary summarize_params(const dsl::ScenarioSpec& spec, const std::vector<dsl::ScenarioParams>& params) {
    ParamSummary s;
    s.scenarios = params.size();
    const auto* route = bound(spec, dsl::Knob::route);
    const auto* npcs = bound(spec, dsl::Knob::npc_count);
    const auto* keeps = bound(spec, dsl::Knob::keeps_safety_distance);
    const auto* lights = bound(spec, dsl::Knob::respects_traffic_lights);
    const auto* speed = bound(spec, dsl::Knob::npc_target_speed);
    const double n = static_cast<double>(params.size());
    if (params.empty()) {
        s.straight = s.left = s.right = s.mean_npc_count = s.unsafe_distance = s.ignores_lights = s.mean_npc_speed = NAN;
        return s;
    }
    auto mean_of = [&](const std::string* name, auto&& f) -> double {
        if (!name) return NAN;
        double total = 0.0;
        for (const auto& p : params) {
            const auto* v = p.get(*name);
            if (!v) throw Error("scenario lacks parameter '" + *name + "'");
            total += f(*v);
        }
        return total / n;
    };
    auto is = [](const char* m) {
        return [m](const dsl::ParamValue& v) {
            const auto* s = std::get_if<std::string>(&v);
            return s && *s == m ? 1.0 : 0.0;
        };
    };
    auto is_false = [](const dsl::ParamValue& v) {
        const auto* b = std::get_if<bool>(&v);
        return b && !*b ? 1.0 : 0.0;
    };
    s.straight = mean_of(route, is("straight"));
    s.left = mean_of(route, is("left"));
    s.right = mean_of(route, is("right"));
    s.mean_npc_count = mean_of(npcs, as_number);
    s.unsafe_distance = mean_of(keeps, is_false);
    s.ignores_lights = mean_of(lights, is_false);
    s.mean_npc_speed = mean_of(speed, as_number);
    return s;
}

RegretMatrix regret_matrix(const dsl::ScenarioSpec& spec, const std::vector<curriculum::BufferEntry>& entries) {
    RegretMatrix m;
    const auto* route = bound(spec, dsl::Knob::route);
    const auto* npcs = bound(spec, dsl::Knob::npc_count);
    m.rows = route ? std::vector<std::string>{"straight", "left", "right"} : std::vector<std::string>{"any"};
    m.cols = npcs ? std::vector<std::string>{"0", "1-2", "3-4", "5+"} : std::vector<std::string>{"any"};
    std::vector<std::vector<double>> sum(m.rows.size(), std::vector<double>(m.cols.size(), 0.0));
    m.count.assign(m.rows.size(), std::vector<std::size_t>(m.cols.size(), 0));
    for (const auto& e : entries) {
        std::size_t r = 0, c = 0;
        if (route) {
            const auto* v = e.params.get(*route);
            const auto* s = v ? std::get_if<std::string>(v) : nullptr;
            const auto it = s ? std::find(m.rows.begin(), m.rows.end(), *s) : m.rows.end();
            if (it == m.rows.end()) throw Error("buffer entry with an unknown route");
            r = static_cast<std::size_t>(it - m.rows.begin());
        }
        if (npcs) {
            const auto* v = e.params.get(*npcs);
            if (!v) throw Error("buffer entry lacks '" + *npcs + "'");
            c = npc_bucket(as_number(*v));
        }
        sum[r][c] += e.regret_score;
        ++m.count[r][c];
    }
    m.mean.assign(m.rows.size(), std::vector<double>(m.cols.size(), NAN));
    for (std::size_t r = 0; r < m.rows.size(); ++r)
        for (std::size_t c = 0; c < m.cols.size(); ++c)
            if (m.count[r][c] > 0) m.mean[r][c] = sum[r][c] / static_cast<double>(m.count[r][c]);
    return m;
}

double normalized_entropy(const RegretMatrix& m) {
    double total = 0.0;
    std::size_t cells = 0;
    for (const auto& row : m.mean)
        for (double v : row) {
            ++cells;
            if (std::isfinite(v)) total += v;
        }
    if (cells <= 1 || !(total > 0.0)) return 1.0;
    double h = 0.0;
    for (const auto& row : m.mean)
        for (double v : row)
            if (std::isfinite(v) && v > 0.0) h -= (v / total) * std::log(v / total);
    return h / std::log(static_cast<double>(cells));
}

void analyze_params_dir(const std::string& dir) {
    const auto spec = dsl::load_spec_or_throw(dir + "/spec.scen");
    std::ostringstream o;
    o << "run,seed,checkpoint,step,scenarios,straight,left,right,mean_npc_count,unsafe_distance,ignores_lights,"
         "mean_npc_speed\n";
    std::map<std::string, std::vector<MetricsRow>> curves;
    for (const auto& f : list_snapshots(dir, "params")) {
        const auto s = summarize_params(spec, parse_params_csv(read_text(f.path), spec.id));
        o << f.run << ',' << f.seed << ',' << f.checkpoint << ',' << f.step << ',' << s.scenarios << ','
          << cell(s.straight) << ',' << cell(s.left) << ',' << cell(s.right) << ',' << cell(s.mean_npc_count) << ','
          << cell(s.unsafe_distance) << ',' << cell(s.ignores_lights) << ',' << cell(s.mean_npc_speed) << '\n';
        const std::pair<const char*, double> fields[] = {
            {"straight", s.straight}, {"mean_npc_count", s.mean_npc_count}, {"unsafe_distance", s.unsafe_distance},
            {"ignores_lights", s.ignores_lights}, {"mean_npc_speed", s.mean_npc_speed}};
        for (const auto& [name, v] : fields)
            if (std::isfinite(v)) curves[name].push_back({f.run, f.seed, f.checkpoint, name, v});
    }
    write_text(dir + "/params_report.csv", o.str());
    for (const auto& [name, rows] : curves) {
        std::vector<std::string> runs;
        std::map<std::string, std::map<std::uint64_t, std::pair<double, int>>> acc;
        for (const auto& r : rows) {
            if (!acc.count(r.run)) runs.push_back(r.run);
            auto& a = acc[r.run][r.step];
            a.first += r.value;
            ++a.second;
        }
        std::vector<Series> series;
        for (const auto& run : runs) {
            Series s{run, {}, {}, {}};
            for (const auto& [k, a] : acc[run]) {
                s.x.push_back(static_cast<double>(k));
                s.y.push_back(a.first / a.second);
            }
            series.push_back(std::move(s));
        }
        write_text(dir + "/params_" + name + ".svg",
                   line_plot_svg(name + " of generated scenarios", "checkpoint", name, series));
    }
}

void analyze_regret_dir(const std::string& dir) {
    const auto spec = dsl::load_spec_or_throw(dir + "/spec.scen");
    std::ostringstream mat, ent;
    mat << "run,seed,checkpoint,maneuver,npc_bucket,entries,mean_regret\n";
    ent << "run,seed,checkpoint,step,entropy\n";
    const auto files = list_snapshots(dir, "buffer");
    for (std::size_t i = 0; i < files.size(); ++i) {
        const auto& f = files[i];
        const auto buf = curriculum::LevelBuffer::from_csv(read_text(f.path), spec.id,
                                                           {std::max<std::size_t>(1, 1 << 20), 0.3, 0.3});
        const auto m = regret_matrix(spec, buf.entries());
        for (std::size_t r = 0; r < m.rows.size(); ++r)
            for (std::size_t c = 0; c < m.cols.size(); ++c)
                mat << f.run << ',' << f.seed << ',' << f.checkpoint << ',' << m.rows[r] << ',' << m.cols[c] << ','
                    << m.count[r][c] << ',' << cell(m.mean[r][c]) << '\n';
        const double h = normalized_entropy(m);
        ent << f.run << ',' << f.seed << ',' << f.checkpoint << ',' << f.step << ',' << format_number(h) << '\n';
        const bool last = i + 1 == files.size() || files[i + 1].run != f.run || files[i + 1].seed != f.seed;
        if (last)
            write_text(dir + "/regret_" + f.run + "_s" + std::to_string(f.seed) + ".svg",
                       heatmap_svg(f.run + " seed " + std::to_string(f.seed) + ": mean regret (entropy " +
                                       format_number(std::round(h * 1000.0) / 1000.0) + ")",
                                   m.rows, m.cols, m.mean));
    }
    write_text(dir + "/regret_matrix.csv", mat.str());
    write_text(dir + "/regret_entropy.csv", ent.str());
}

}  // namespace matsg::harness
