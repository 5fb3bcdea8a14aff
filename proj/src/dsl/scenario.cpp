#include "matsg/dsl/scenario.hpp"

#include <charconv>
#include <cmath>

#include "matsg/core/error.hpp"

namespace matsg::dsl {

namespace {

constexpr std::pair<Knob, std::string_view> kKnobNames[] = {
    {Knob::route, "route"},
    {Knob::npc_count, "npc_count"},
    {Knob::npc_target_speed, "npc_target_speed"},
    {Knob::keeps_safety_distance, "keeps_safety_distance"},
    {Knob::respects_traffic_lights, "respects_traffic_lights"},
    {Knob::ego_target_speed, "ego_target_speed"},
};

bool looks_integer(std::string_view t) {
    if (t.empty()) return false;
    std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
        if (t[i] < '0' || t[i] > '9') return false;
    return true;
}

bool looks_real(std::string_view t) {
    double d = 0.0;
    const auto* first = t.data() + ((!t.empty() && t[0] == '+') ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), d);
    return ec == std::errc{} && ptr == t.data() + t.size();
}

}  // namespace

std::optional<Knob> knob_from_name(std::string_view name) {
    for (auto [k, n] : kKnobNames)
        if (n == name) return k;
    return std::nullopt;
}

std::string_view knob_name(Knob k) {
    for (auto [kk, n] : kKnobNames)
        if (kk == k) return n;
    return "?";
}

const ParamDomain* ScenarioSpec::find(std::string_view name) const {
    for (const auto& p : params)
        if (p.name == name) return &p;
    return nullptr;
}

const ParamValue* ScenarioParams::get(std::string_view name) const {
    auto it = assignment.find(std::string(name));
    return it == assignment.end() ? nullptr : &it->second;
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, ptr);
    if (s.find_first_of(".einfa") == std::string::npos) s += ".0";
    return s;
}

std::string format_value(const ParamValue& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::string>) {
                return x;
            } else if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(x);
            } else {
                return format_real(x);
            }
        },
        v);
}

ParamValue parse_value(std::string_view text) {
    if (text == "true") return true;
    if (text == "false") return false;
    if (looks_integer(text)) {
        std::int64_t i = 0;
        const auto* first = text.data() + (text[0] == '+' ? 1 : 0);
        auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), i);
        if (ec == std::errc{}) return i;
    }
    if (looks_real(text)) {
        double d = 0.0;
        const auto* first = text.data() + (text[0] == '+' ? 1 : 0);
        std::from_chars(first, text.data() + text.size(), d);
        return d;
    }
    return std::string(text);
}

bool value_in_domain(const ParamValue& v, const DomainKind& d) {
    return std::visit(
        [&](const auto& dom) -> bool {
            using D = std::decay_t<decltype(dom)>;
            if constexpr (std::is_same_v<D, CategoricalDomain>) {
                const auto* s = std::get_if<std::string>(&v);
                if (!s) return false;
                for (const auto& val : dom.values)
                    if (val == *s) return true;
                return false;
            } else if constexpr (std::is_same_v<D, IntegerRange>) {
                const auto* i = std::get_if<std::int64_t>(&v);
                return i && *i >= dom.lo && *i <= dom.hi;
            } else if constexpr (std::is_same_v<D, RealRange>) {
                const auto* x = std::get_if<double>(&v);
                return x && std::isfinite(*x) && *x >= dom.lo && *x <= dom.hi;
            } else {
                return std::holds_alternative<bool>(v);
            }
        },
        d);
}

std::string format_assignment(const std::map<std::string, ParamValue>& a) {
    std::string out;
    for (const auto& [k, v] : a) {
        if (!out.empty()) out += ';';
        out += k;
        out += '=';
        out += format_value(v);
    }
    return out;
}

std::map<std::string, ParamValue> parse_assignment(std::string_view text) {
    std::map<std::string, ParamValue> out;
    while (!text.empty()) {
        auto semi = text.find(';');
        std::string_view item = text.substr(0, semi);
        text = semi == std::string_view::npos ? std::string_view{} : text.substr(semi + 1);
        if (item.empty()) continue;
        auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0)
            throw Error("malformed assignment item '" + std::string(item) + "'");
        out[std::string(item.substr(0, eq))] = parse_value(item.substr(eq + 1));
    }
    return out;
}

void validate_params(const ScenarioSpec& spec, const ScenarioParams& params) {
    for (const auto& p : spec.params) {
        const ParamValue* v = params.get(p.name);
        if (!v) throw Error("parameter '" + p.name + "' missing from assignment");
        if (!value_in_domain(*v, p.kind))
            throw Error("parameter '" + p.name + "' value " + format_value(*v) + " out of domain");
    }
    for (const auto& [k, v] : params.assignment)
        if (!spec.find(k)) throw Error("assignment names unknown parameter '" + k + "'");
}

}  // namespace matsg::dsl
