#include "matsg/harness/metrics.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "matsg/core/error.hpp"
#include "matsg/dsl/scenario.hpp"

namespace matsg::harness {

std::string format_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
    return dsl::format_real(v);
}

void MetricsLog::add(const std::string& run, std::uint64_t seed, std::uint64_t step, const std::string& metric,
                     double value) {
    for (auto it = rows_.rbegin(); it != rows_.rend(); ++it) {
        if (it->run == run && it->seed == seed) {
            if (step < it->step) throw Error("metric step went backwards in run " + run);
            break;
        }
    }
    rows_.push_back({run, seed, step, metric, value});
}

std::string MetricsLog::to_csv() const {
    std::ostringstream out;
    out << "run,seed,step,metric,value\n";
    for (const auto& r : rows_)
        out << r.run << ',' << r.seed << ',' << r.step << ',' << r.metric << ',' << format_number(r.value) << '\n';
    return out.str();
}

MetricsLog MetricsLog::from_csv(std::string_view text) {
    MetricsLog log;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "run,seed,step,metric,value") throw Error("metrics CSV: bad header");
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::vector<std::string> c;
        std::stringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) c.push_back(f);
        if (c.size() != 5) throw Error("metrics CSV line " + std::to_string(n) + ": expected 5 columns");
        try {
            log.rows_.push_back({c[0], std::stoull(c[1]), std::stoull(c[2]), c[3], std::stod(c[4])});
        } catch (const std::exception&) {
            throw Error("metrics CSV line " + std::to_string(n) + ": malformed number");
        }
    }
    return log;
}

std::vector<BinnedRow> bin_metrics(const std::vector<MetricsRow>& rows, std::size_t k) {
    if (k == 0) throw Error("bin size must be positive");
    using Key = std::tuple<std::string, std::uint64_t, std::string>;
    std::vector<Key> order;
    std::map<Key, std::vector<const MetricsRow*>> series;
    for (const auto& r : rows) {
        Key key{r.run, r.seed, r.metric};
        auto [it, fresh] = series.try_emplace(key);
        if (fresh) order.push_back(key);
        it->second.push_back(&r);
    }
    std::vector<BinnedRow> out;
    for (const auto& key : order) {
        const auto& s = series.at(key);
        for (std::size_t b = 0; b * k < s.size(); ++b) {
            const std::size_t lo = b * k, hi = std::min(s.size(), lo + k);
            BinnedRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key), b, s[lo]->step, s[hi - 1]->step,
                          hi - lo};
            for (std::size_t i = lo; i < hi; ++i) row.mean += s[i]->value;
            row.mean /= static_cast<double>(row.count);
            for (std::size_t i = lo; i < hi; ++i) row.stddev += (s[i]->value - row.mean) * (s[i]->value - row.mean);
            row.stddev = std::sqrt(row.stddev / static_cast<double>(row.count));
            out.push_back(row);
        }
    }
    return out;
}

std::string binned_csv(const std::vector<BinnedRow>& rows) {
    std::ostringstream out;
    out << "run,seed,metric,bin,first_step,last_step,count,mean,std\n";
    for (const auto& r : rows)
        out << r.run << ',' << r.seed << ',' << r.metric << ',' << r.bin << ',' << r.first_step << ',' << r.last_step
            << ',' << r.count << ',' << format_number(r.mean) << ',' << format_number(r.stddev) << '\n';
    return out.str();
}

}  // namespace matsg::harness
