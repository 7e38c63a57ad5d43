#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "tabletop/common/error.hpp"
#include "tabletop/common/json_util.hpp"

namespace tabletop::agent {

enum class Skill { vlamove, done };

struct SkillCall {
    Skill skill = Skill::done;
    std::string pick;   // vlamove only
    std::string place;  // vlamove only

    static SkillCall vlamove(std::string pick, std::string place) { return {Skill::vlamove, std::move(pick), std::move(place)}; }
    static SkillCall done() { return {}; }

    bool operator==(const SkillCall&) const = default;
};

/// Syntax error with the byte offset where parsing stopped and what the
/// grammar wanted there.
class SyntaxError : public Error {
public:
    SyntaxError(size_t position, std::string expected, std::string found);

    size_t position() const noexcept { return position_; }
    const std::string& expected() const noexcept { return expected_; }
    const std::string& found() const noexcept { return found_; }

private:
    size_t position_;
    std::string expected_;
    std::string found_;
};

/// call   := "vlamove" "(" "pick" "=" STRING "," "place" "=" STRING ")"
///         | "done" "(" ")"
/// STRING := '"' [^"]+ '"'
/// Whitespace is allowed around every token. Nothing may follow the call.
SkillCall parse_skill_call(std::string_view text);

/// Canonical spelling; parse_skill_call(format(c)) == c for every valid call.
std::string format(const SkillCall& call);

json to_json(const SkillCall& call);

}  // namespace tabletop::agent
