// scenario.hpp - typed scenario schema and concrete parameter assignments.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace matsg::dsl {

struct CategoricalDomain {
    std::vector<std::string> values;
    bool operator==(const CategoricalDomain&) const = default;
};

struct IntegerRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    bool operator==(const IntegerRange&) const = default;
};

struct RealRange {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const RealRange&) const = default;
};

struct BooleanDomain {
    bool operator==(const BooleanDomain&) const = default;
};

using DomainKind = std::variant<CategoricalDomain, IntegerRange, RealRange, BooleanDomain>;

struct ParamDomain {
    std::string name;
    DomainKind kind;
    bool operator==(const ParamDomain&) const = default;
};

// Controlled-agent descriptor: how many learning agents the scenario spawns.
struct EgoRole {
    int count = 1;
    bool operator==(const EgoRole&) const = default;
};

// Simulator knobs a parameter may be bound to.
enum class Knob {
    route,
    npc_count,
    npc_target_speed,
    keeps_safety_distance,
    respects_traffic_lights,
    ego_target_speed,
};

std::optional<Knob> knob_from_name(std::string_view name);
std::string_view knob_name(Knob k);

struct ScenarioSpec {
    std::string id = "scenario";
    std::string map_id = "fourway";
    EgoRole ego;
    std::vector<ParamDomain> params;
    std::map<Knob, std::string> bindings;  // knob -> parameter name

    const ParamDomain* find(std::string_view name) const;
    bool operator==(const ScenarioSpec&) const = default;
};

// A single parameter value. Symbols hold categorical values.
using ParamValue = std::variant<std::string, std::int64_t, double, bool>;

// Shortest round-trip text; always carries a '.' or exponent so it reads back as real.
std::string format_real(double v);
std::string format_value(const ParamValue& v);
// Type is inferred from the text: true/false, integer literal, real literal
// (contains '.', 'e' or 'inf'), otherwise a symbol.
ParamValue parse_value(std::string_view text);

bool value_in_domain(const ParamValue& v, const DomainKind& d);

struct ScenarioParams {
    std::string spec_id;
    std::map<std::string, ParamValue> assignment;
    std::uint64_t seed = 0;

    const ParamValue* get(std::string_view name) const;

    bool operator==(const ScenarioParams&) const = default;
    auto operator<=>(const ScenarioParams&) const = default;
};

// `key=value;key=value` in key order; reversible with parse_assignment.
std::string format_assignment(const std::map<std::string, ParamValue>& a);
std::map<std::string, ParamValue> parse_assignment(std::string_view text);

// Throws matsg::Error when the assignment is not total over spec.params or a
// value falls outside its domain.
void validate_params(const ScenarioSpec& spec, const ScenarioParams& params);

}  // namespace matsg::dsl
