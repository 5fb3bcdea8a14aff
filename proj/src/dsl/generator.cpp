#include "matsg/dsl/generator.hpp"

#include <cmath>

#include "matsg/core/error.hpp"

namespace matsg::dsl {

namespace {

constexpr int kMaxRejections = 10000;

bool factor_matches(const Factor& f, const DomainKind& d) {
    if (const auto* c = std::get_if<CategoricalFactor>(&f)) {
        const auto* cd = std::get_if<CategoricalDomain>(&d);
        return cd && cd->values.size() == c->probs.size();
    }
    if (std::holds_alternative<GaussianFactor>(f))
        return std::holds_alternative<IntegerRange>(d) || std::holds_alternative<RealRange>(d);
    return std::holds_alternative<BooleanDomain>(d);
}

double sample_truncated(double mean, double stddev, double lo, double hi, Rng& rng) {
    if (lo == hi) return lo;
    for (int i = 0; i < kMaxRejections; ++i) {
        const double x = rng.normal(mean, stddev);
        if (x >= lo && x <= hi) return x;
    }
    // Mass inside [lo, hi] is negligible; fall back to the nearest bound.
    return std::clamp(mean, lo, hi);
}

}  // namespace

std::pair<double, double> sampling_bounds(const DomainKind& d) {
    if (const auto* i = std::get_if<IntegerRange>(&d))
        return {static_cast<double>(i->lo) - 0.5, static_cast<double>(i->hi) + 0.5};
    if (const auto* r = std::get_if<RealRange>(&d)) return {r->lo, r->hi};
    throw Error("sampling_bounds on a non-range domain");
}

GeneratorDistribution uniform_distribution(const ScenarioSpec& spec) {
    GeneratorDistribution dist;
    for (const auto& p : spec.params) {
        std::visit(
            [&](const auto& d) {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, CategoricalDomain>) {
                    const double n = static_cast<double>(d.values.size());
                    dist.factors.push_back(CategoricalFactor{std::vector<double>(d.values.size(), 1.0 / n)});
                } else if constexpr (std::is_same_v<D, BooleanDomain>) {
                    dist.factors.push_back(BernoulliFactor{0.5});
                } else {
                    const double lo = static_cast<double>(d.lo), hi = static_cast<double>(d.hi);
                    // Degenerate ranges still need a positive stddev.
                    const double sd = hi > lo ? (hi - lo) / 2.0 : 0.5;
                    dist.factors.push_back(GaussianFactor{(lo + hi) / 2.0, sd});
                }
            },
            p.kind);
    }
    return dist;
}

ScenarioParams sample_params(const ScenarioSpec& spec, const GeneratorDistribution& dist, Rng& rng) {
    if (dist.factors.size() != spec.params.size())
        throw Error("generator has " + std::to_string(dist.factors.size()) + " factors for " +
                    std::to_string(spec.params.size()) + " parameters");
    ScenarioParams out;
    out.spec_id = spec.id;
    for (std::size_t i = 0; i < spec.params.size(); ++i) {
        const auto& p = spec.params[i];
        const auto& f = dist.factors[i];
        if (!factor_matches(f, p.kind)) throw Error("factor/domain mismatch for parameter '" + p.name + "'");
        if (const auto* cat = std::get_if<CategoricalDomain>(&p.kind)) {
            const auto& probs = std::get<CategoricalFactor>(f).probs;
            out.assignment[p.name] = cat->values[rng.categorical(probs)];
        } else if (std::holds_alternative<BooleanDomain>(p.kind)) {
            out.assignment[p.name] = rng.bernoulli(std::get<BernoulliFactor>(f).p);
        } else {
            const auto [lo, hi] = sampling_bounds(p.kind);
            const auto& g = std::get<GaussianFactor>(f);
            const double x = dist.uniform_ranges ? rng.uniform(lo, hi) : sample_truncated(g.mean, g.stddev, lo, hi, rng);
            if (const auto* ir = std::get_if<IntegerRange>(&p.kind)) {
                auto v = static_cast<std::int64_t>(std::llround(x));
                out.assignment[p.name] = std::clamp(v, ir->lo, ir->hi);
            } else {
                out.assignment[p.name] = x;
            }
        }
    }
    out.seed = rng.next_u64() & ~kReservedSeedBit;
    return out;
}

void validate_distribution(const ScenarioSpec& spec, const GeneratorDistribution& dist) {
    if (dist.factors.size() != spec.params.size()) throw Error("generator factor count mismatch");
    for (std::size_t i = 0; i < spec.params.size(); ++i) {
        const auto& name = spec.params[i].name;
        const auto& f = dist.factors[i];
        if (!factor_matches(f, spec.params[i].kind)) throw Error("factor/domain mismatch for '" + name + "'");
        if (const auto* c = std::get_if<CategoricalFactor>(&f)) {
            double sum = 0.0;
            for (double p : c->probs) {
                if (!(p >= kProbabilityFloor - 1e-12)) throw Error("probability below floor for '" + name + "'");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw Error("probabilities of '" + name + "' do not sum to 1");
        } else if (const auto* g = std::get_if<GaussianFactor>(&f)) {
            if (!(g->stddev > 0.0) || !std::isfinite(g->mean)) throw Error("invalid Gaussian factor for '" + name + "'");
        } else {
            const double p = std::get<BernoulliFactor>(f).p;
            if (!(p >= kProbabilityFloor - 1e-12 && p <= 1.0 - kProbabilityFloor + 1e-12))
                throw Error("Bernoulli p outside floor band for '" + name + "'");
        }
    }
}

}  // namespace matsg::dsl
