#pragma once

// Line-oriented model description format.
//
//   # comment
//   [model]
//   name = "oscillator"
//   coords = ["q"]
//   lagrangian = "0.5*dq^2 - 0.5*q^2 + gamma*z"
//   description = "damped harmonic oscillator"      (optional)
//   check_state = [1, 0, 0]                          (optional, length 2n+1)
//   [params]
//   gamma = -0.2
//   [constraints]
//   c1 = "dq"                                         (name = linear velocity form)
//
// Strings are double-quoted with \" \\ \n escapes; lists are bracketed,
// comma-separated and must fit on one line.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "contact_nh/errors.hpp"

namespace contact_nh {

struct ModelFile {
    std::string name;
    std::string description;
    std::vector<std::string> coords;
    std::vector<std::pair<std::string, double>> params;
    std::string lagrangian;
    std::vector<std::pair<std::string, std::string>> constraints;
    std::optional<std::vector<double>> check_state;
};

namespace detail {

using FileScalar = std::variant<std::string, double>;
using FileValue = std::variant<std::string, double, std::vector<FileScalar>>;

class LineReader {
public:
    LineReader(std::string_view text, std::size_t line) : s_(text), line_(line) {}

    void skip_ws() {
        while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r')) ++i_;
    }
    bool at_end() {
        skip_ws();
        return i_ >= s_.size() || s_[i_] == '#';
    }
    char peek() {
        skip_ws();
        return i_ < s_.size() ? s_[i_] : '\0';
    }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++i_;
    }
    [[noreturn]] void fail(const std::string& what) const { throw ModelError(what, line_); }

    std::string identifier() {
        skip_ws();
        const std::size_t start = i_;
        while (i_ < s_.size()) {
            const char c = s_[i_];
            const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
                            (i_ > start && ((c >= '0' && c <= '9') || c == '-'));
            if (!ok) break;
            ++i_;
        }
        if (i_ == start) fail("expected a key");
        return std::string(s_.substr(start, i_ - start));
    }

    FileScalar scalar() {
        const char c = peek();
        if (c == '"') return string_literal();
        return number();
    }

    FileValue value() {
        if (peek() == '[') {
            ++i_;
            std::vector<FileScalar> items;
            if (peek() == ']') {
                ++i_;
                return items;
            }
            while (true) {
                items.push_back(scalar());
                const char c = peek();
                ++i_;
                if (c == ']') break;
                if (c != ',') fail("expected ',' or ']' in list");
            }
            return items;
        }
        auto s = scalar();
        if (auto* str = std::get_if<std::string>(&s)) return *str;
        return std::get<double>(s);
    }

private:
    std::string string_literal() {
        ++i_;  // opening quote
        std::string out;
        while (true) {
            if (i_ >= s_.size()) fail("unterminated string");
            const char c = s_[i_++];
            if (c == '"') break;
            if (c == '\\') {
                if (i_ >= s_.size()) fail("unterminated escape");
                const char e = s_[i_++];
                if (e == 'n') out += '\n';
                else if (e == '"' || e == '\\') out += e;
                else fail(std::string("unknown escape '\\") + e + "'");
            } else {
                out += c;
            }
        }
        return out;
    }

    double number() {
        skip_ws();
        const std::size_t start = i_;
        while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != ']' && s_[i_] != ' ' && s_[i_] != '\t' &&
               s_[i_] != '#' && s_[i_] != '\r')
            ++i_;
        std::string_view tok = s_.substr(start, i_ - start);
        if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
        double v = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
            fail("expected a number or a quoted string, got '" + std::string(s_.substr(start, i_ - start)) + "'");
        return v;
    }

    std::string_view s_;
    std::size_t line_;
    std::size_t i_ = 0;
};

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out + '"';
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parses the text of a model file. Errors carry the 1-based line number.
inline ModelFile parse_model_file(std::string_view text) {
    ModelFile mf;
    enum class Section { None, Model, Params, Constraints } section = Section::None;
    bool have_name = false, have_coords = false, have_lagrangian = false;
    std::vector<std::string> seen_model_keys;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;

        detail::LineReader r(line, line_no);
        if (r.at_end()) {
            if (eol == text.size()) break;
            continue;
        }
        if (r.peek() == '[') {
            r.expect('[');
            const std::string name = r.identifier();
            r.expect(']');
            if (!r.at_end()) r.fail("trailing text after section header");
            if (name == "model") section = Section::Model;
            else if (name == "params") section = Section::Params;
            else if (name == "constraints") section = Section::Constraints;
            else r.fail("unknown section [" + name + "]");
            continue;
        }
        const std::string key = r.identifier();
        r.expect('=');
        detail::FileValue value = r.value();
        if (!r.at_end()) r.fail("trailing text after value of '" + key + "'");

        auto as_string = [&]() -> std::string {
            if (auto* s = std::get_if<std::string>(&value)) return *s;
            r.fail("'" + key + "' must be a quoted string");
        };
        auto as_number = [&]() -> double {
            if (auto* d = std::get_if<double>(&value)) return *d;
            r.fail("'" + key + "' must be a number");
        };

        switch (section) {
            case Section::None: r.fail("key '" + key + "' outside of a section");
            case Section::Model: {
                for (const auto& k : seen_model_keys)
                    if (k == key) r.fail("duplicate key '" + key + "'");
                seen_model_keys.push_back(key);
                if (key == "name") {
                    mf.name = as_string();
                    have_name = true;
                } else if (key == "description") {
                    mf.description = as_string();
                } else if (key == "lagrangian") {
                    mf.lagrangian = as_string();
                    have_lagrangian = true;
                } else if (key == "coords") {
                    auto* list = std::get_if<std::vector<detail::FileScalar>>(&value);
                    if (!list) r.fail("'coords' must be a list of strings");
                    for (const auto& item : *list) {
                        auto* s = std::get_if<std::string>(&item);
                        if (!s) r.fail("'coords' must be a list of strings");
                        mf.coords.push_back(*s);
                    }
                    have_coords = true;
                } else if (key == "check_state") {
                    auto* list = std::get_if<std::vector<detail::FileScalar>>(&value);
                    if (!list) r.fail("'check_state' must be a list of numbers");
                    std::vector<double> st;
                    for (const auto& item : *list) {
                        auto* d = std::get_if<double>(&item);
                        if (!d) r.fail("'check_state' must be a list of numbers");
                        st.push_back(*d);
                    }
                    mf.check_state = std::move(st);
                } else {
                    r.fail("unknown key '" + key + "' in [model]");
                }
                break;
            }
            case Section::Params: {
                for (const auto& [k, v] : mf.params)
                    if (k == key) r.fail("duplicate parameter '" + key + "'");
                mf.params.emplace_back(key, as_number());
                break;
            }
            case Section::Constraints: {
                for (const auto& [k, v] : mf.constraints)
                    if (k == key) r.fail("duplicate constraint '" + key + "'");
                mf.constraints.emplace_back(key, as_string());
                break;
            }
        }
    }
    if (!have_name) throw ModelError("missing 'name' in [model]");
    if (!have_coords) throw ModelError("missing 'coords' in [model]");
    if (!have_lagrangian) throw ModelError("missing 'lagrangian' in [model]");
    return mf;
}

/// Serializes back to the file format; parse_model_file(to_text(m)) == m.
inline std::string to_text(const ModelFile& m) {
    std::string out = "[model]\n";
    out += "name = " + detail::quote(m.name) + "\n";
    if (!m.description.empty()) out += "description = " + detail::quote(m.description) + "\n";
    out += "coords = [";
    for (std::size_t i = 0; i < m.coords.size(); ++i) out += (i ? ", " : "") + detail::quote(m.coords[i]);
    out += "]\n";
    out += "lagrangian = " + detail::quote(m.lagrangian) + "\n";
    if (m.check_state) {
        out += "check_state = [";
        for (std::size_t i = 0; i < m.check_state->size(); ++i)
            out += (i ? ", " : "") + detail::format_double((*m.check_state)[i]);
        out += "]\n";
    }
    if (!m.params.empty()) {
        out += "\n[params]\n";
        for (const auto& [k, v] : m.params) out += k + " = " + detail::format_double(v) + "\n";
    }
    if (!m.constraints.empty()) {
        out += "\n[constraints]\n";
        for (const auto& [k, v] : m.constraints) out += k + " = " + detail::quote(v) + "\n";
    }
    return out;
}

}  // namespace contact_nh
