#include "tabletop/agent/skill_call.hpp"

#include <cctype>

namespace tabletop::agent {
namespace {

std::string describe(std::string_view text, size_t pos) {
    if (pos >= text.size()) return "end of input";
    unsigned char c = static_cast<unsigned char>(text[pos]);
    if (std::isprint(c)) return std::string("'") + static_cast<char>(c) + "'";
    return "byte 0x" + std::string(1, "0123456789abcdef"[c >> 4]) + std::string(1, "0123456789abcdef"[c & 15]);
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    SkillCall parse() {
        skip_ws();
        SkillCall call;
        if (peek_word("vlamove")) {
            pos_ += 7;
            expect('(');
            keyword("pick");
            expect('=');
            std::string pick = string();
            expect(',');
            keyword("place");
            expect('=');
            std::string place = string();
            expect(')');
            call = SkillCall::vlamove(std::move(pick), std::move(place));
        } else if (peek_word("done")) {
            pos_ += 4;
            expect('(');
            expect(')');
            call = SkillCall::done();
        } else {
            fail("'vlamove' or 'done'");
        }
        skip_ws();
        if (pos_ != text_.size()) fail("end of input");
        return call;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek_word(std::string_view w) const {
        if (text_.substr(pos_, w.size()) != w) return false;
        // Reject prefixes of longer identifiers such as "doneX".
        size_t end = pos_ + w.size();
        return end >= text_.size() || !(std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_');
    }

    [[noreturn]] void fail(const std::string& expected) const { throw SyntaxError(pos_, expected, describe(text_, pos_)); }

    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("'") + c + "'");
        ++pos_;
    }

    void keyword(std::string_view w) {
        skip_ws();
        if (!peek_word(w)) fail("'" + std::string(w) + "'");
        pos_ += w.size();
    }

    std::string string() {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '"') fail("quoted string");
        const size_t start = ++pos_;
        while (pos_ < text_.size() && text_[pos_] != '"') ++pos_;
        if (pos_ >= text_.size()) fail("closing '\"'");
        if (pos_ == start) fail("non-empty string");
        std::string out(text_.substr(start, pos_ - start));
        ++pos_;
        return out;
    }

    std::string_view text_;
    size_t pos_ = 0;
};

}  // namespace

SyntaxError::SyntaxError(size_t position, std::string expected, std::string found)
    : Error("syntax error at " + std::to_string(position) + ": expected " + expected + ", found " + found),
      position_(position),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

SkillCall parse_skill_call(std::string_view text) { return Parser(text).parse(); }

std::string format(const SkillCall& call) {
    if (call.skill == Skill::done) return "done()";
    return "vlamove(pick=\"" + call.pick + "\", place=\"" + call.place + "\")";
}

json to_json(const SkillCall& call) {
    if (call.skill == Skill::done) return json{{"skill", "done"}};
    return json{{"skill", "vlamove"}, {"pick", call.pick}, {"place", call.place}};
}

}  // namespace tabletop::agent
