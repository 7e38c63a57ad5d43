#include <random>

#include "doctest.h"
#include "tabletop/agent/skill_call.hpp"

using namespace tabletop::agent;

namespace {

std::string random_string(std::mt19937_64& gen) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz ABCXYZ0123456789-_',.()=";
    std::string s;
    const size_t n = 1 + gen() % 16;
    for (size_t i = 0; i < n; ++i) s.push_back(alphabet[gen() % alphabet.size()]);
    return s;
}

std::string ws(std::mt19937_64& gen) {
    static const char* pads[] = {"", " ", "  ", "\t", "\n ", " \r\n"};
    return pads[gen() % 6];
}

// Generator for the grammar with arbitrary legal whitespace.
std::string spaced_call(std::mt19937_64& gen, const SkillCall& c) {
    if (c.skill == Skill::done) return ws(gen) + "done" + ws(gen) + "(" + ws(gen) + ")" + ws(gen);
    return ws(gen) + "vlamove" + ws(gen) + "(" + ws(gen) + "pick" + ws(gen) + "=" + ws(gen) + "\"" + c.pick + "\"" + ws(gen) + "," + ws(gen) +
           "place" + ws(gen) + "=" + ws(gen) + "\"" + c.place + "\"" + ws(gen) + ")" + ws(gen);
}

size_t error_position(const std::string& text) {
    try {
        parse_skill_call(text);
    } catch (const SyntaxError& e) {
        return e.position();
    }
    return std::string::npos;
}

}  // namespace

TEST_CASE("parse_skill_call worked examples") {
    CHECK(parse_skill_call(R"(vlamove(pick="red block", place="blue bowl"))") == SkillCall::vlamove("red block", "blue bowl"));
    CHECK(parse_skill_call("  done( )") == SkillCall::done());

    try {
        parse_skill_call(R"(vlamove(pick=red block, place="box"))");
        FAIL("expected a syntax error");
    } catch (const SyntaxError& e) {
        CHECK(e.position() == 13);
        CHECK(e.expected() == "quoted string");
        CHECK(e.found() == "'r'");
    }
}

TEST_CASE("parse_skill_call rejects everything outside the grammar") {
    CHECK(error_position("") == 0);
    CHECK(error_position("vlamove") == 7);
    CHECK(error_position("done()x") == 6);
    CHECK(error_position("doneX()") == 0);
    CHECK(error_position(R"(vlamove(pick="", place="box"))") == 14);
    CHECK(error_position(R"(vlamove(place="a", pick="b"))") == 8);
    CHECK(error_position(R"(vlamove(pick="a" place="b"))") == 17);
    CHECK(error_position(R"(vlamove(pick="a, place="b"))") == 24);
    CHECK(error_position(R"(vlamove(pick="a", place="b")))") == 28);
    CHECK(error_position(R"(VLAMOVE(pick="a", place="b"))") == 0);
}

TEST_CASE("format is canonical") {
    CHECK(format(SkillCall::vlamove("apple", "red plate")) == R"(vlamove(pick="apple", place="red plate"))");
    CHECK(format(SkillCall::done()) == "done()");
}

TEST_CASE("property: round trip on generated valid calls") {
    std::mt19937_64 gen(1);
    for (int i = 0; i < 1000; ++i) {
        SkillCall c = (gen() % 5 == 0) ? SkillCall::done() : SkillCall::vlamove(random_string(gen), random_string(gen));
        const std::string text = spaced_call(gen, c);
        const SkillCall parsed = parse_skill_call(text);
        CHECK(parsed == c);
        const std::string once = format(parsed);
        CHECK(format(parse_skill_call(once)) == once);
    }
}

TEST_CASE("property: fuzzing never crashes and errors are stable") {
    std::mt19937_64 gen(2);
    const std::string seed_text = R"(vlamove(pick="red block", place="blue bowl"))";
    int accepted = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string text;
        if (i % 2) {
            const size_t n = gen() % 64;
            for (size_t k = 0; k < n; ++k) text.push_back(static_cast<char>(gen() % 256));
        } else {
            text = seed_text;
            const int edits = 1 + static_cast<int>(gen() % 4);
            for (int e = 0; e < edits && !text.empty(); ++e) {
                const size_t at = gen() % text.size();
                switch (gen() % 3) {
                    case 0: text.erase(at, 1); break;
                    case 1: text.insert(at, 1, static_cast<char>(gen() % 256)); break;
                    default: text[at] = static_cast<char>(gen() % 256); break;
                }
            }
        }
        try {
            auto c = parse_skill_call(text);
            ++accepted;
            CHECK(parse_skill_call(format(c)) == c);
        } catch (const SyntaxError& e) {
            CHECK(e.position() <= text.size());
            CHECK(error_position(text) == e.position());
        }
    }
    CHECK(accepted < 10000);
}
