#include "tabletop/agent/prompts.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include "tabletop/common/error.hpp"
#include "tabletop/sim/registry.hpp"

namespace tabletop::agent {
namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read prompt file " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

PromptProfile load_profile(const std::filesystem::path& dir, const std::string& name) {
    PromptProfile p;
    p.name = name;
    p.planner = slurp(dir / "planner.txt");
    p.converter = slurp(dir / "converter.txt");
    p.evaluator = slurp(dir / "evaluator.txt");
    p.examples = slurp(dir / ("examples_" + name + ".txt"));
    return p;
}

std::filesystem::path default_prompt_dir() { return sim::default_registry_path().parent_path() / "prompts"; }

const PromptProfile& default_profile(const std::string& name) {
    static std::mutex mu;
    static std::map<std::string, PromptProfile> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, load_profile(default_prompt_dir(), name)).first;
    return it->second;
}

std::string render(const std::string& tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close != std::string::npos) {
                auto it = values.find(tmpl.substr(i + 1, close - i - 1));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

}  // namespace tabletop::agent
