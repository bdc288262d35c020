#include "reqsim/seqlang.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace reqsim {

namespace {

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += v[i];
    }
    return out;
}

std::string format_error(const SourceSpan& span, const std::string& message,
                         const std::vector<std::string>& expected) {
    std::ostringstream os;
    os << span.line << ":" << span.column << ": " << message;
    if (!expected.empty()) os << " (expected " << join(expected) << ")";
    return os.str();
}

struct Token {
    enum Kind { word, number, dotdot, eol } kind = eol;
    std::string text;
    double value = 0.0;
    SourceSpan span;
};

bool is_keyword(const std::string& w) {
    static const char* kw[] = {"material", "burn",     "readout", "fixed",
                               "scan",     "duration", "repeat",  "strength"};
    for (const char* k : kw)
        if (w == k) return true;
    return false;
}

// tokens of one line ('#' comment already handled here)
class LineLexer {
public:
    LineLexer(const std::string& text, int line) : text_(text), line_(line) {}

    Token next() {
        skip_ws();
        Token t;
        t.span = {line_, static_cast<int>(pos_) + 1, 1};
        if (pos_ >= text_.size() || text_[pos_] == '#') {
            t.kind = Token::eol;
            return t;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '_'))
                ++pos_;
            t.kind = Token::word;
            t.text = text_.substr(start, pos_ - start);
            t.span.length = static_cast<int>(pos_ - start);
            return t;
        }
        if (c == '.' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '.') {
            pos_ += 2;
            t.kind = Token::dotdot;
            t.text = "..";
            t.span.length = 2;
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' ||
            c == '-' ||
            (c == '.' && pos_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            return lex_number();
        }
        throw ParseError(t.span,
                         std::string("unexpected character '") + c + "'");
    }

    // remainder of the line as one token (material references may contain
    // ':', '/', '.', ...)
    Token rest() {
        skip_ws();
        Token t;
        t.span = {line_, static_cast<int>(pos_) + 1, 1};
        size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(
                                          text_[pos_])) &&
               text_[pos_] != '#')
            ++pos_;
        if (pos_ == start) {
            t.kind = Token::eol;
            return t;
        }
        t.kind = Token::word;
        t.text = text_.substr(start, pos_ - start);
        t.span.length = static_cast<int>(pos_ - start);
        return t;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    Token lex_number() {
        size_t start = pos_;
        Token t;
        t.kind = Token::number;
        t.span = {line_, static_cast<int>(pos_) + 1, 1};
        if (text_[pos_] == '+' || text_[pos_] == '-') ++pos_;
        bool digits = false;
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
            digits = true;
        }
        // a '.' is part of the number only when a digit follows ("3..5"
        // must lex as 3, '..', 5)
        if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
            std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
            ++pos_;
            while (pos_ < text_.size() &&
                   std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                digits = true;
            }
        }
        if (digits && pos_ < text_.size() &&
            (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() &&
                (text_[pos_] == '+' || text_[pos_] == '-'))
                ++pos_;
            bool exp_digits = false;
            while (pos_ < text_.size() &&
                   std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                exp_digits = true;
            }
            if (!exp_digits) {
                t.span.length = static_cast<int>(pos_ - start);
                throw ParseError(t.span, "malformed number '" +
                                             text_.substr(start, pos_ - start) +
                                             "'");
            }
        }
        t.text = text_.substr(start, pos_ - start);
        t.span.length = static_cast<int>(pos_ - start);
        if (!digits)
            throw ParseError(t.span, "malformed number '" + t.text + "'");
        t.value = std::strtod(t.text.c_str(), nullptr);
        if (!std::isfinite(t.value))
            throw ParseError(t.span, "number out of range '" + t.text + "'");
        return t;
    }

    const std::string& text_;
    int line_;
    size_t pos_ = 0;
};

// cursor over the tokens of one statement line
class StmtParser {
public:
    StmtParser(const std::string& text, int line) : lex_(text, line) {
        cur_ = lex_.next();
    }

    const Token& peek() const { return cur_; }

    Token take() {
        Token t = cur_;
        cur_ = lex_.next();
        return t;
    }

    Token expect_word(const std::string& what,
                      std::vector<std::string> options) {
        if (cur_.kind != Token::word)
            throw ParseError(cur_.span, "expected " + what,
                             std::move(options));
        for (const auto& o : options)
            if (cur_.text == o) return take();
        throw ParseError(cur_.span,
                         "unknown keyword '" + cur_.text + "' in " + what,
                         std::move(options));
    }

    Token expect_number(const std::string& what) {
        if (cur_.kind != Token::number)
            throw ParseError(cur_.span, "expected " + what, {"number"});
        return take();
    }

    double quantity(const std::string& what,
                    const std::vector<std::pair<std::string, double>>& units) {
        Token num = expect_number(what);
        std::vector<std::string> names;
        for (const auto& u : units) names.push_back(u.first);
        if (cur_.kind == Token::word) {
            for (const auto& u : units)
                if (cur_.text == u.first) {
                    take();
                    return num.value * u.second;
                }
            // a grammar keyword here means the unit was left off; any other
            // word is most plausibly a typo'd unit
            if (!is_keyword(cur_.text))
                throw ParseError(cur_.span, "unknown unit '" + cur_.text + "'",
                                 names);
        }
        throw ParseError(num.span, "missing unit suffix on " + what, names);
    }

    double freq_mhz() {
        return quantity("frequency", {{"MHz", 1.0}, {"GHz", 1000.0}});
    }
    double time_ms() {
        return quantity("duration", {{"us", 1e-3}, {"ms", 1.0}, {"s", 1e3}});
    }

    void expect_eol() {
        if (cur_.kind != Token::eol)
            throw ParseError(cur_.span, "unexpected trailing input '" +
                                            (cur_.kind == Token::dotdot
                                                 ? std::string("..")
                                                 : cur_.text) +
                                            "'");
    }

private:
    LineLexer lex_;
    Token cur_;
};

}  // namespace

ParseError::ParseError(SourceSpan s, const std::string& msg,
                       std::vector<std::string> exp)
    : std::runtime_error(format_error(s, msg, exp)),
      span(s),
      message(msg),
      expected(std::move(exp)) {}

PulseSequence parse_sequence(const std::string& source) {
    PulseSequence seq;
    bool have_material = false;

    std::vector<std::string> lines;
    {
        std::string cur;
        for (char c : source) {
            if (c == '\n') {
                lines.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        lines.push_back(cur);
    }

    for (int ln = 0; ln < static_cast<int>(lines.size()); ++ln) {
        size_t first = lines[ln].find_first_not_of(" \t\r");
        if (first == std::string::npos || lines[ln][first] == '#') continue;

        if (!have_material) {
            // material references ('builtin:x', 'dir/file.json') need raw
            // rest-of-line lexing, not the token grammar
            LineLexer lx(lines[ln], ln + 1);
            Token head = lx.next();
            if (head.kind != Token::word || head.text != "material")
                throw ParseError(head.span, "expected material declaration",
                                 {"material"});
            Token ref = lx.rest();
            if (ref.kind == Token::eol)
                throw ParseError(ref.span, "expected material reference",
                                 {"path", "builtin:<name>"});
            seq.material_ref = ref.text;
            if (seq.material_ref.rfind("builtin:", 0) == 0) {
                std::string name = seq.material_ref.substr(8);
                if (!is_builtin_material(name))
                    throw ParseError(ref.span,
                                     "undefined material '" + name + "'");
                seq.material = load_material(seq.material_ref);
            }
            Token tail = lx.next();
            if (tail.kind != Token::eol)
                throw ParseError(tail.span, "unexpected trailing input");
            have_material = true;
            continue;
        }

        StmtParser p(lines[ln], ln + 1);
        if (p.peek().kind == Token::word && p.peek().text == "material")
            throw ParseError(p.peek().span,
                             "material may only be declared once");
        Token head = p.expect_word("statement", {"burn", "readout"});

        Pulse pulse;
        if (head.text == "burn") {
            Token mode = p.expect_word("burn mode", {"fixed", "scan"});
            if (mode.text == "fixed") {
                pulse.kind = PulseKind::burn_fixed;
                pulse.center = p.freq_mhz();
            } else {
                pulse.kind = PulseKind::burn_scan;
                Token start = p.peek();
                pulse.lo = p.freq_mhz();
                if (p.peek().kind != Token::dotdot)
                    throw ParseError(p.peek().span, "expected range",
                                     {".."});
                p.take();
                pulse.hi = p.freq_mhz();
                if (!(pulse.lo < pulse.hi))
                    throw ParseError(start.span,
                                     "scan range must satisfy lo < hi");
            }
            if (p.peek().kind == Token::word && p.peek().text == "repeat") {
                p.take();
                Token n = p.expect_number("repeat count");
                if (n.value < 1.0 || n.value > 1e9 ||
                    n.value != std::floor(n.value))
                    throw ParseError(n.span,
                                     "repeat count must be a positive integer");
                pulse.repetitions = static_cast<int>(n.value);
            }
            if (p.peek().kind != Token::word || p.peek().text != "duration")
                throw ParseError(p.peek().span, "expected 'duration'",
                                 {"duration"});
            {
                Token kw = p.take();
                Token num_probe = p.peek();
                pulse.duration_ms = p.time_ms();
                (void)kw;
                if (!(pulse.duration_ms > 0.0))
                    throw ParseError(num_probe.span,
                                     "duration must be positive");
            }
            if (p.peek().kind == Token::word &&
                p.peek().text == "strength") {
                p.take();
                Token s = p.expect_number("strength");
                if (s.value < 0.0)
                    throw ParseError(s.span, "strength must be >= 0");
                pulse.strength = s.value;
            }
        } else {  // readout
            pulse.kind = PulseKind::readout_scan;
            pulse.strength = 0.0;
            Token start = p.peek();
            pulse.lo = p.freq_mhz();
            if (p.peek().kind != Token::dotdot)
                throw ParseError(p.peek().span, "expected range", {".."});
            p.take();
            pulse.hi = p.freq_mhz();
            if (!(pulse.lo < pulse.hi))
                throw ParseError(start.span,
                                 "scan range must satisfy lo < hi");
            if (p.peek().kind != Token::word || p.peek().text != "duration")
                throw ParseError(p.peek().span, "expected 'duration'",
                                 {"duration"});
            p.take();
            Token num_probe = p.peek();
            pulse.duration_ms = p.time_ms();
            if (!(pulse.duration_ms > 0.0))
                throw ParseError(num_probe.span, "duration must be positive");
        }
        p.expect_eol();
        seq.pulses.push_back(pulse);
    }

    if (!have_material)
        throw ParseError({1, 1, 1}, "expected material declaration",
                         {"material"});
    return seq;
}

void resolve_sequence_material(PulseSequence& seq) {
    if (seq.material.isotopes.empty())
        seq.material = load_material(seq.material_ref);
}

namespace {

std::string fmt(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string print_sequence(const PulseSequence& seq) {
    std::ostringstream os;
    os << "material " << seq.material_ref << "\n";
    for (const Pulse& p : seq.pulses) {
        switch (p.kind) {
            case PulseKind::burn_fixed:
                os << "burn fixed " << fmt(p.center) << "MHz";
                break;
            case PulseKind::burn_scan:
                os << "burn scan " << fmt(p.lo) << "MHz.." << fmt(p.hi)
                   << "MHz";
                break;
            case PulseKind::readout_scan:
                os << "readout " << fmt(p.lo) << "MHz.." << fmt(p.hi)
                   << "MHz";
                break;
        }
        if (p.kind != PulseKind::readout_scan && p.repetitions != 1)
            os << " repeat " << p.repetitions;
        os << " duration " << fmt(p.duration_ms) << "ms";
        if (p.kind != PulseKind::readout_scan && p.strength != 1.0)
            os << " strength " << fmt(p.strength);
        os << "\n";
    }
    return os.str();
}

}  // namespace reqsim
