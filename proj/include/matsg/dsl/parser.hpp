// parser.hpp - line-oriented partial-scenario language.
//
//   # comment
//   scenario <id>
//   map <id>
//   ego count <n>
//   param <name> in {a, b, c}      categorical
//   param <name> in 0..5           integer range (inclusive)
//   param <name> in 2.0..8.0       real range (a bound written with '.' or exponent)
//   param <name> in bool
//   bind <knob> = <name>
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "matsg/dsl/scenario.hpp"

namespace matsg::dsl {

enum class Severity { error, warning };

struct Diagnostic {
    int line = 0;
    int column = 0;
    Severity severity = Severity::error;
    std::string message;

    // `file:line:col: severity: message`
    std::string to_string(std::string_view file) const;
};

struct ParseResult {
    std::optional<ScenarioSpec> spec;  // set iff no error diagnostics
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return spec.has_value(); }
};

ParseResult parse_spec(std::string_view text);

// Canonical text; parse_spec(format_spec(s)) reproduces s.
std::string format_spec(const ScenarioSpec& spec);

// Reads and parses a file; I/O failure is reported as a diagnostic at 0:0.
ParseResult parse_spec_file(const std::string& path);

// Convenience for callers that treat diagnostics as fatal.
ScenarioSpec load_spec_or_throw(const std::string& path);

}  // namespace matsg::dsl
