#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace tabletop::agent {

/// Plain-text templates with named placeholders {instruction},
/// {scene_evidence}, {examples}, {failure_context}, {goal_state}.
struct PromptProfile {
    std::string name;
    std::string planner;
    std::string converter;
    std::string evaluator;
    std::string examples;
};

/// Loads planner.txt, converter.txt, evaluator.txt and examples_<name>.txt
/// from `dir`. The "prompted" and "unprompted" profiles share the templates
/// and differ only in their examples. Throws ConfigError on missing files.
PromptProfile load_profile(const std::filesystem::path& dir, const std::string& name);

/// $TABLETOP_DATA_DIR/prompts, or the build-time data directory.
std::filesystem::path default_prompt_dir();

/// Profile from default_prompt_dir(), cached per name.
const PromptProfile& default_profile(const std::string& name = "prompted");

/// Replace every {key} present in `values`; unknown placeholders are left as is.
std::string render(const std::string& tmpl, const std::map<std::string, std::string>& values);

}  // namespace tabletop::agent
