#include "matsg/curriculum/cem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "matsg/core/error.hpp"

namespace matsg::curriculum {

using dsl::BernoulliFactor;
using dsl::CategoricalFactor;
using dsl::GaussianFactor;
using dsl::kProbabilityFloor;

void CemConfig::validate() const {
    if (population == 0) throw Error("CEM population must be positive");
    if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) throw Error("CEM elite fraction must lie in (0, 1]");
    if (!(smoothing >= 0.0 && smoothing <= 1.0)) throw Error("CEM smoothing must lie in [0, 1]");
}

std::size_t CemConfig::elite_count() const {
    const auto n = static_cast<std::size_t>(std::ceil(elite_fraction * static_cast<double>(population) - 1e-9));
    return std::clamp<std::size_t>(n, 1, population);
}

namespace {

double numeric_value(const dsl::ParamValue& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    throw Error("non-numeric value for a range parameter");
}

// Mixes the fit toward uniform so every value keeps at least the floor.
std::vector<double> floored(std::vector<double> p) {
    const double k = static_cast<double>(p.size());
    for (auto& x : p) x = kProbabilityFloor + (1.0 - k * kProbabilityFloor) * x;
    return p;
}

}  // namespace

dsl::GeneratorDistribution update_generator(const dsl::ScenarioSpec& spec, const dsl::GeneratorDistribution& current,
                                            const std::vector<ScoredParams>& history, const CemConfig& cfg) {
    cfg.validate();
    dsl::validate_distribution(spec, current);
    if (history.size() < cfg.population)
        throw Error("CEM needs " + std::to_string(cfg.population) + " scored scenarios, have " +
                    std::to_string(history.size()));
    std::vector<std::size_t> order(cfg.population);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return history[a].second > history[b].second; });
    order.resize(cfg.elite_count());
    const double ne = static_cast<double>(order.size());
    const double a = cfg.smoothing;

    dsl::GeneratorDistribution next;
    for (std::size_t f = 0; f < spec.params.size(); ++f) {
        const auto& p = spec.params[f];
        const auto& factor = current.factors[f];
        auto value_of = [&](std::size_t h) -> const dsl::ParamValue& {
            const auto* v = history[h].first.get(p.name);
            if (!v) throw Error("scored scenario lacks parameter '" + p.name + "'");
            return *v;
        };
        if (const auto* cd = std::get_if<dsl::CategoricalDomain>(&p.kind)) {
            std::vector<double> freq(cd->values.size(), 0.0);
            for (auto h : order) {
                const auto* s = std::get_if<std::string>(&value_of(h));
                const auto it = s ? std::find(cd->values.begin(), cd->values.end(), *s) : cd->values.end();
                if (it == cd->values.end()) throw Error("elite value outside the domain of '" + p.name + "'");
                freq[static_cast<std::size_t>(it - cd->values.begin())] += 1.0 / ne;
            }
            const auto fit = floored(std::move(freq));
            const auto& old = std::get<CategoricalFactor>(factor).probs;
            CategoricalFactor out;
            for (std::size_t i = 0; i < fit.size(); ++i) out.probs.push_back(a * fit[i] + (1.0 - a) * old[i]);
            next.factors.emplace_back(std::move(out));
        } else if (std::holds_alternative<dsl::BooleanDomain>(p.kind)) {
            double rate = 0.0;
            for (auto h : order) {
                const auto* b = std::get_if<bool>(&value_of(h));
                if (!b) throw Error("elite value outside the domain of '" + p.name + "'");
                rate += *b ? 1.0 / ne : 0.0;
            }
            rate = std::clamp(rate, kProbabilityFloor, 1.0 - kProbabilityFloor);
            next.factors.emplace_back(BernoulliFactor{a * rate + (1.0 - a) * std::get<BernoulliFactor>(factor).p});
        } else {
            const auto [lo, hi] = dsl::sampling_bounds(p.kind);
            double mean = 0.0;
            for (auto h : order) mean += numeric_value(value_of(h)) / ne;
            double var = 0.0;
            for (auto h : order) {
                const double d = numeric_value(value_of(h)) - mean;
                var += d * d / ne;
            }
            const auto& old = std::get<GaussianFactor>(factor);
            const double floor = std::max(kStddevFloorFraction * (hi - lo), 1e-9);
            const double sd = a * std::sqrt(var) + (1.0 - a) * old.stddev;
            next.factors.emplace_back(GaussianFactor{a * mean + (1.0 - a) * old.mean, std::max(sd, floor)});
        }
    }
    dsl::validate_distribution(spec, next);
    return next;
}

std::string format_generator(const dsl::ScenarioSpec& spec, const dsl::GeneratorDistribution& dist) {
    dsl::validate_distribution(spec, dist);
    std::ostringstream out;
    out << "ranges " << (dist.uniform_ranges ? "uniform" : "gaussian") << '\n';
    for (std::size_t f = 0; f < spec.params.size(); ++f) {
        out << spec.params[f].name;
        std::visit(
            [&](const auto& x) {
                using F = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<F, CategoricalFactor>) {
                    const auto& values = std::get<dsl::CategoricalDomain>(spec.params[f].kind).values;
                    out << " categorical";
                    for (std::size_t i = 0; i < values.size(); ++i)
                        out << ' ' << values[i] << '=' << dsl::format_real(x.probs[i]);
                } else if constexpr (std::is_same_v<F, GaussianFactor>) {
                    out << " gaussian mean=" << dsl::format_real(x.mean) << " stddev=" << dsl::format_real(x.stddev);
                } else {
                    out << " bernoulli p=" << dsl::format_real(x.p);
                }
            },
            dist.factors[f]);
        out << '\n';
    }
    return out.str();
}

dsl::GeneratorDistribution parse_generator(const dsl::ScenarioSpec& spec, std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    dsl::GeneratorDistribution dist;
    auto field = [](const std::string& tok, std::string_view key) {
        if (tok.size() <= key.size() || tok.compare(0, key.size(), key) != 0 || tok[key.size()] != '=')
            throw Error("generator snapshot: expected '" + std::string(key) + "=' in '" + tok + "'");
        return std::stod(tok.substr(key.size() + 1));
    };
    if (!std::getline(in, line) || (line != "ranges uniform" && line != "ranges gaussian"))
        throw Error("generator snapshot: missing ranges header");
    dist.uniform_ranges = line == "ranges uniform";
    for (const auto& p : spec.params) {
        if (!std::getline(in, line)) throw Error("generator snapshot: missing factor for '" + p.name + "'");
        std::istringstream ls(line);
        std::string name, kind, tok;
        ls >> name >> kind;
        if (name != p.name) throw Error("generator snapshot: expected factor '" + p.name + "', got '" + name + "'");
        if (kind == "categorical") {
            const auto& values = std::get<dsl::CategoricalDomain>(p.kind).values;
            CategoricalFactor c;
            for (const auto& v : values) {
                ls >> tok;
                c.probs.push_back(field(tok, v));
            }
            dist.factors.emplace_back(std::move(c));
        } else if (kind == "gaussian") {
            std::string m, s;
            ls >> m >> s;
            dist.factors.emplace_back(GaussianFactor{field(m, "mean"), field(s, "stddev")});
        } else if (kind == "bernoulli") {
            ls >> tok;
            dist.factors.emplace_back(BernoulliFactor{field(tok, "p")});
        } else {
            throw Error("generator snapshot: unknown factor kind '" + kind + "'");
        }
    }
    dsl::validate_distribution(spec, dist);
    return dist;
}

}  // namespace matsg::curriculum
