#include "matsg/dsl/parser.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "matsg/core/error.hpp"

namespace matsg::dsl {

namespace {

enum class Tok { ident, number, lbrace, rbrace, comma, dotdot, equals, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    bool is_real = false;
    int line = 0;
    int column = 0;
};

std::string describe(const Token& t) {
    switch (t.kind) {
        case Tok::ident: return "'" + t.text + "'";
        case Tok::number: return "number " + t.text;
        case Tok::lbrace: return "'{'";
        case Tok::rbrace: return "'}'";
        case Tok::comma: return "','";
        case Tok::dotdot: return "'..'";
        case Tok::equals: return "'='";
        case Tok::end: return "end of line";
    }
    return "?";
}

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

struct LexError {
    int column;
    std::string message;
};

// Tokenizes one line. Columns are 1-based and count code points.
std::vector<Token> lex_line(std::string_view line, int line_no, std::optional<LexError>& err) {
    std::vector<Token> out;
    std::size_t i = 0;
    int col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < line.size(); ++k, ++i)
            if ((static_cast<unsigned char>(line[i]) & 0xC0) != 0x80) ++col;
    };
    while (i < line.size()) {
        const char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            advance(1);
            continue;
        }
        if (c == '#') break;
        Token t;
        t.line = line_no;
        t.column = col;
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < line.size() && is_ident_char(line[j])) ++j;
            t.kind = Tok::ident;
            t.text = std::string(line.substr(i, j - i));
            advance(j - i);
        } else if (is_digit(c) || (c == '-' && i + 1 < line.size() && is_digit(line[i + 1]))) {
            std::size_t j = i + (c == '-' ? 1 : 0);
            while (j < line.size() && is_digit(line[j])) ++j;
            if (j + 1 < line.size() && line[j] == '.' && is_digit(line[j + 1])) {
                t.is_real = true;
                ++j;
                while (j < line.size() && is_digit(line[j])) ++j;
            }
            if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
                if (k < line.size() && is_digit(line[k])) {
                    t.is_real = true;
                    j = k;
                    while (j < line.size() && is_digit(line[j])) ++j;
                }
            }
            if (j < line.size() && is_ident_char(line[j])) {
                err = LexError{col, "lexical error: malformed number"};
                return out;
            }
            t.kind = Tok::number;
            t.text = std::string(line.substr(i, j - i));
            advance(j - i);
        } else if (c == '.' && i + 1 < line.size() && line[i + 1] == '.') {
            t.kind = Tok::dotdot;
            advance(2);
        } else if (c == '{') {
            t.kind = Tok::lbrace;
            advance(1);
        } else if (c == '}') {
            t.kind = Tok::rbrace;
            advance(1);
        } else if (c == ',') {
            t.kind = Tok::comma;
            advance(1);
        } else if (c == '=') {
            t.kind = Tok::equals;
            advance(1);
        } else {
            std::string shown;
            if (static_cast<unsigned char>(c) < 0x80) {
                shown = std::string(1, c);
            } else {
                std::size_t j = i + 1;
                while (j < line.size() && (static_cast<unsigned char>(line[j]) & 0xC0) == 0x80) ++j;
                shown = std::string(line.substr(i, j - i));
            }
            err = LexError{col, "lexical error: unexpected character '" + shown + "'"};
            return out;
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::end;
    end.line = line_no;
    end.column = col;
    out.push_back(end);
    return out;
}

struct PendingBind {
    Token knob;
    Token param;
};

class LineParser {
public:
    LineParser(const std::vector<Token>& toks, std::vector<Diagnostic>& diags)
        : toks_(toks), diags_(diags) {}

    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    bool expect(Tok kind, const char* what, Token* out = nullptr) {
        const Token& t = peek();
        if (t.kind != kind) {
            error(t, std::string("syntax error: expected ") + what + ", found " + describe(t));
            return false;
        }
        if (out) *out = t;
        next();
        return true;
    }

    bool expect_keyword(std::string_view kw) {
        const Token& t = peek();
        if (t.kind != Tok::ident || t.text != kw) {
            error(t, "syntax error: expected '" + std::string(kw) + "', found " + describe(t));
            return false;
        }
        next();
        return true;
    }

    bool expect_end() { return expect(Tok::end, "end of line"); }

    void error(const Token& t, std::string msg) {
        diags_.push_back({t.line, t.column, Severity::error, std::move(msg)});
    }

    std::optional<DomainKind> domain() {
        const Token& t = peek();
        if (t.kind == Tok::ident && t.text == "bool") {
            next();
            return BooleanDomain{};
        }
        if (t.kind == Tok::lbrace) {
            const Token open = t;
            next();
            CategoricalDomain cat;
            std::set<std::string> seen;
            if (peek().kind == Tok::rbrace) {
                error(open, "empty categorical domain");
                return std::nullopt;
            }
            while (true) {
                Token v;
                if (!expect(Tok::ident, "categorical value", &v)) return std::nullopt;
                if (!seen.insert(v.text).second) {
                    error(v, "duplicate categorical value '" + v.text + "'");
                    return std::nullopt;
                }
                cat.values.push_back(v.text);
                if (peek().kind == Tok::comma) {
                    next();
                    continue;
                }
                if (!expect(Tok::rbrace, "',' or '}'")) return std::nullopt;
                break;
            }
            return cat;
        }
        if (t.kind == Tok::number) {
            Token lo_tok = t;
            next();
            if (!expect(Tok::dotdot, "'..'")) return std::nullopt;
            Token hi_tok;
            if (!expect(Tok::number, "number", &hi_tok)) return std::nullopt;
            if (lo_tok.is_real || hi_tok.is_real) {
                double lo = 0, hi = 0;
                if (!to_real(lo_tok, lo) || !to_real(hi_tok, hi)) return std::nullopt;
                if (lo > hi) {
                    error(lo_tok, "inverted range " + lo_tok.text + ".." + hi_tok.text);
                    return std::nullopt;
                }
                return RealRange{lo, hi};
            }
            std::int64_t lo = 0, hi = 0;
            if (!to_int(lo_tok, lo) || !to_int(hi_tok, hi)) return std::nullopt;
            if (lo > hi) {
                error(lo_tok, "inverted range " + lo_tok.text + ".." + hi_tok.text);
                return std::nullopt;
            }
            return IntegerRange{lo, hi};
        }
        error(t, "syntax error: expected domain ('{', number or 'bool'), found " + describe(t));
        return std::nullopt;
    }

private:
    bool to_int(const Token& t, std::int64_t& out) {
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), out);
        if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) {
            error(t, "number out of range: " + t.text);
            return false;
        }
        return true;
    }
    bool to_real(const Token& t, double& out) {
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), out);
        if (ec != std::errc{} || !std::isfinite(out)) {
            error(t, "number out of range: " + t.text);
            return false;
        }
        return true;
    }

    const std::vector<Token>& toks_;
    std::vector<Diagnostic>& diags_;
    std::size_t pos_ = 0;
};

bool knob_accepts(Knob k, const DomainKind& d) {
    switch (k) {
        case Knob::route: {
            const auto* cat = std::get_if<CategoricalDomain>(&d);
            if (!cat) return false;
            for (const auto& v : cat->values)
                if (v != "straight" && v != "left" && v != "right") return false;
            return true;
        }
        case Knob::npc_count: return std::holds_alternative<IntegerRange>(d);
        case Knob::npc_target_speed:
        case Knob::ego_target_speed:
            return std::holds_alternative<RealRange>(d) || std::holds_alternative<IntegerRange>(d);
        case Knob::keeps_safety_distance:
        case Knob::respects_traffic_lights: return std::holds_alternative<BooleanDomain>(d);
    }
    return false;
}

}  // namespace

std::string Diagnostic::to_string(std::string_view file) const {
    std::ostringstream os;
    os << file << ':' << line << ':' << column << ": "
       << (severity == Severity::error ? "error" : "warning") << ": " << message;
    return os.str();
}

ParseResult parse_spec(std::string_view text) {
    ParseResult result;
    auto& diags = result.diagnostics;
    ScenarioSpec spec;
    bool seen_scenario = false, seen_map = false, seen_ego = false;
    std::vector<Token> param_name_tokens;
    std::vector<PendingBind> binds;

    int line_no = 0;
    while (!text.empty() || line_no == 0) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        std::optional<LexError> lex_err;
        auto toks = lex_line(line, line_no, lex_err);
        if (lex_err) {
            diags.push_back({line_no, lex_err->column, Severity::error, lex_err->message});
            if (text.empty()) break;
            continue;
        }
        LineParser p(toks, diags);
        const Token head = p.peek();
        if (head.kind == Tok::end) {
            if (text.empty()) break;
            continue;
        }
        if (head.kind != Tok::ident) {
            p.error(head, "syntax error: expected statement keyword, found " + describe(head));
        } else if (head.text == "scenario" || head.text == "map") {
            p.next();
            Token id;
            if (p.expect(Tok::ident, "identifier", &id) && p.expect_end()) {
                bool& seen = head.text == "scenario" ? seen_scenario : seen_map;
                if (seen) {
                    p.error(head, "duplicate '" + head.text + "' declaration");
                } else {
                    seen = true;
                    (head.text == "scenario" ? spec.id : spec.map_id) = id.text;
                }
            }
        } else if (head.text == "ego") {
            p.next();
            Token n;
            if (p.expect_keyword("count") && p.expect(Tok::number, "agent count", &n) && p.expect_end()) {
                int count = 0;
                auto [ptr, ec] = std::from_chars(n.text.data(), n.text.data() + n.text.size(), count);
                if (n.is_real || ec != std::errc{} || ptr != n.text.data() + n.text.size() || count < 1) {
                    p.error(n, "agent count must be a positive integer, found " + n.text);
                } else if (seen_ego) {
                    p.error(head, "duplicate 'ego' declaration");
                } else {
                    seen_ego = true;
                    spec.ego.count = count;
                }
            }
        } else if (head.text == "param") {
            p.next();
            Token name;
            if (p.expect(Tok::ident, "parameter name", &name) && p.expect_keyword("in")) {
                auto dom = p.domain();
                if (dom && p.expect_end()) {
                    if (spec.find(name.text)) {
                        p.error(name, "duplicate parameter name '" + name.text + "'");
                    } else {
                        spec.params.push_back({name.text, *dom});
                        param_name_tokens.push_back(name);
                    }
                }
            }
        } else if (head.text == "bind") {
            p.next();
            PendingBind b;
            if (p.expect(Tok::ident, "knob name", &b.knob) && p.expect(Tok::equals, "'='") &&
                p.expect(Tok::ident, "parameter name", &b.param) && p.expect_end())
                binds.push_back(b);
        } else {
            p.error(head, "syntax error: unknown statement '" + head.text + "'");
        }
        if (text.empty()) break;
    }

    for (const auto& b : binds) {
        auto knob = knob_from_name(b.knob.text);
        if (!knob) {
            diags.push_back({b.knob.line, b.knob.column, Severity::error, "unknown knob '" + b.knob.text + "'"});
            continue;
        }
        if (spec.bindings.count(*knob)) {
            diags.push_back({b.knob.line, b.knob.column, Severity::error, "knob '" + b.knob.text + "' bound twice"});
            continue;
        }
        const ParamDomain* dom = spec.find(b.param.text);
        if (!dom) {
            diags.push_back({b.param.line, b.param.column, Severity::error,
                             "bind references undeclared parameter '" + b.param.text + "'"});
            continue;
        }
        if (!knob_accepts(*knob, dom->kind)) {
            diags.push_back({b.param.line, b.param.column, Severity::error,
                             "parameter '" + b.param.text + "' has a domain incompatible with knob '" +
                                 b.knob.text + "'"});
            continue;
        }
        spec.bindings[*knob] = b.param.text;
    }

    bool has_error = false;
    for (const auto& d : diags) has_error |= d.severity == Severity::error;
    if (!has_error) result.spec = std::move(spec);
    return result;
}

std::string format_spec(const ScenarioSpec& spec) {
    std::ostringstream os;
    os << "scenario " << spec.id << '\n';
    os << "map " << spec.map_id << '\n';
    os << "ego count " << spec.ego.count << '\n';
    for (const auto& p : spec.params) {
        os << "param " << p.name << " in ";
        std::visit(
            [&](const auto& d) {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, CategoricalDomain>) {
                    os << '{';
                    for (std::size_t i = 0; i < d.values.size(); ++i) os << (i ? ", " : "") << d.values[i];
                    os << '}';
                } else if constexpr (std::is_same_v<D, IntegerRange>) {
                    os << d.lo << ".." << d.hi;
                } else if constexpr (std::is_same_v<D, RealRange>) {
                    os << format_real(d.lo) << ".." << format_real(d.hi);
                } else {
                    os << "bool";
                }
            },
            p.kind);
        os << '\n';
    }
    for (const auto& [knob, name] : spec.bindings) os << "bind " << knob_name(knob) << " = " << name << '\n';
    return os.str();
}

ParseResult parse_spec_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ParseResult r;
        r.diagnostics.push_back({0, 0, Severity::error, "cannot open file"});
        return r;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

ScenarioSpec load_spec_or_throw(const std::string& path) {
    auto r = parse_spec_file(path);
    if (!r.ok()) {
        std::string msg;
        for (const auto& d : r.diagnostics) msg += d.to_string(path) + "\n";
        throw Error(msg);
    }
    return *r.spec;
}

}  // namespace matsg::dsl
