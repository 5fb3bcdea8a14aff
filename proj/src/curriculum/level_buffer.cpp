#include "matsg/curriculum/level_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "matsg/core/error.hpp"

namespace matsg::curriculum {

LevelBuffer::LevelBuffer(BufferConfig cfg) : cfg_(cfg) {
    if (cfg_.capacity == 0) throw Error("buffer capacity must be positive");
    if (!(cfg_.temperature > 0.0)) throw Error("buffer temperature must be positive");
    if (!(cfg_.staleness_mix >= 0.0 && cfg_.staleness_mix <= 1.0)) throw Error("staleness mix must lie in [0, 1]");
}

std::optional<std::size_t> LevelBuffer::find(const dsl::ScenarioParams& params) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].params == params) return i;
    return std::nullopt;
}

bool LevelBuffer::insert(const dsl::ScenarioParams& params, double regret, std::uint64_t step, double max_return) {
    if (!(regret >= 0.0) || !std::isfinite(regret)) throw Error("buffer scores must be finite and non-negative");
    if (auto i = find(params)) {
        entries_[*i].regret_score = std::max(entries_[*i].regret_score, regret);
        entries_[*i].max_return_seen = std::max(entries_[*i].max_return_seen, max_return);
        return true;
    }
    BufferEntry e{params, regret, step, step, max_return};
    if (entries_.size() < cfg_.capacity) {
        entries_.push_back(std::move(e));
        return true;
    }
    std::size_t victim = 0;
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = entries_[victim];
        if (a.regret_score < b.regret_score || (a.regret_score == b.regret_score && a.insert_step < b.insert_step))
            victim = i;
    }
    if (regret < entries_[victim].regret_score) return false;
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(victim));
    entries_.push_back(std::move(e));
    return true;
}

void LevelBuffer::rescore(std::size_t index, double regret, double max_return) {
    if (!(regret >= 0.0) || !std::isfinite(regret)) throw Error("buffer scores must be finite and non-negative");
    auto& e = entries_.at(index);
    e.regret_score = regret;
    e.max_return_seen = std::max(e.max_return_seen, max_return);
}

std::vector<double> LevelBuffer::weights(std::uint64_t current_step) const {
    const std::size_t n = entries_.size();
    std::vector<double> w(n, 0.0);
    if (n == 0) return w;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (entries_[a].regret_score != entries_[b].regret_score)
            return entries_[a].regret_score > entries_[b].regret_score;
        return entries_[a].insert_step < entries_[b].insert_step;
    });
    std::vector<double> rank(n), stale(n);
    double rank_total = 0.0, stale_total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        rank[order[r]] = std::pow(1.0 / static_cast<double>(r + 1), 1.0 / cfg_.temperature);
        rank_total += rank[order[r]];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto last = entries_[i].last_sampled_step;
        stale[i] = current_step > last ? static_cast<double>(current_step - last) : 0.0;
        stale_total += stale[i];
    }
    const double rho = cfg_.staleness_mix;
    for (std::size_t i = 0; i < n; ++i) {
        const double ps = stale_total > 0.0 ? stale[i] / stale_total : 1.0 / static_cast<double>(n);
        w[i] = (1.0 - rho) * rank[i] / rank_total + rho * ps;
    }
    return w;
}

std::size_t LevelBuffer::sample(std::uint64_t current_step, Rng& rng) {
    if (entries_.empty()) throw Error("cannot sample from an empty buffer");
    const auto w = weights(current_step);
    const std::size_t i = rng.categorical(w);
    entries_[i].last_sampled_step = current_step;
    return i;
}

double LevelBuffer::mean_regret() const {
    if (entries_.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : entries_) s += e.regret_score;
    return s / static_cast<double>(entries_.size());
}

std::string LevelBuffer::to_csv() const {
    std::ostringstream out;
    out << "assignment,seed,regret,last_sampled_step,insert_step,max_return_seen\n";
    for (const auto& e : entries_)
        out << dsl::format_assignment(e.params.assignment) << ',' << e.params.seed << ','
            << dsl::format_real(e.regret_score) << ',' << e.last_sampled_step << ',' << e.insert_step << ','
            << dsl::format_real(e.max_return_seen) << '\n';
    return out.str();
}

LevelBuffer LevelBuffer::from_csv(std::string_view text, const std::string& spec_id, BufferConfig cfg) {
    LevelBuffer b(cfg);
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cols.push_back(c);
        if (cols.size() != 6) throw Error("buffer snapshot line " + std::to_string(line_no) + ": expected 6 columns");
        try {
            BufferEntry e;
            e.params.spec_id = spec_id;
            e.params.assignment = dsl::parse_assignment(cols[0]);
            e.params.seed = std::stoull(cols[1]);
            e.regret_score = std::stod(cols[2]);
            e.last_sampled_step = std::stoull(cols[3]);
            e.insert_step = std::stoull(cols[4]);
            e.max_return_seen = std::stod(cols[5]);
            b.entries_.push_back(std::move(e));
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error("buffer snapshot line " + std::to_string(line_no) + ": malformed number");
        }
    }
    return b;
}

}  // namespace matsg::curriculum
