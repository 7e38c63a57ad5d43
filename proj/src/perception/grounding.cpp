#include "tabletop/perception/grounding.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "tabletop/common/error.hpp"

namespace tabletop::perception {
namespace {

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words{"the", "all", "each", "every", "some", "of"};
    return words;
}

std::string singular(std::string w) {
    if (w.size() > 3 && w.back() == 's' && w[w.size() - 2] != 's') w.pop_back();
    return w;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

/// Replace the first occurrence of token run `from` inside `tokens` by `to`.
bool substitute(const std::vector<std::string>& tokens, const std::vector<std::string>& from, const std::vector<std::string>& to,
                std::vector<std::string>& out) {
    if (from.empty() || from.size() > tokens.size()) return false;
    for (size_t i = 0; i + from.size() <= tokens.size(); ++i) {
        if (std::equal(from.begin(), from.end(), tokens.begin() + static_cast<long>(i))) {
            out.assign(tokens.begin(), tokens.begin() + static_cast<long>(i));
            out.insert(out.end(), to.begin(), to.end());
            out.insert(out.end(), tokens.begin() + static_cast<long>(i + from.size()), tokens.end());
            return true;
        }
    }
    return false;
}

bool ranks_before(const Detection& a, double sa, const Detection& b, double sb) {
    if (sa != sb) return sa > sb;
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.label != b.label) return a.label < b.label;
    if (a.box.u_min != b.box.u_min) return a.box.u_min < b.box.u_min;
    return a.box.v_min < b.box.v_min;
}

std::vector<std::pair<double, const Detection*>> scored(const std::vector<Detection>& detections, const std::string& query,
                                                          const sim::SynonymTable& synonyms) {
    if (normalize_tokens(query).empty()) throw PreconditionError("grounding query is empty");
    if (detections.empty()) throw NotFoundError("no detections to ground '" + query + "' against");
    const auto variants = expand_query(query, synonyms);
    std::vector<std::pair<double, const Detection*>> out;
    for (const auto& d : detections) {
        double best = 0.0;
        for (const auto& v : variants) best = std::max(best, overlap_score(v, d.label));
        if (best > kMatchThreshold) out.emplace_back(best, &d);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return ranks_before(*a.second, a.first, *b.second, b.first); });
    return out;
}

}  // namespace

std::vector<std::string> normalize_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !stopwords().count(cur)) tokens.push_back(singular(cur));
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

double overlap_score(const std::string& query, const std::string& label) {
    const auto q = normalize_tokens(query);
    const auto l = normalize_tokens(label);
    std::set<std::string> qs(q.begin(), q.end()), ls(l.begin(), l.end());
    if (qs.empty() || ls.empty()) return 0.0;
    size_t common = 0;
    for (const auto& t : qs) common += ls.count(t);
    return 2.0 * static_cast<double>(common) / static_cast<double>(qs.size() + ls.size());
}

std::vector<std::string> expand_query(const std::string& query, const sim::SynonymTable& synonyms) {
    const auto tokens = normalize_tokens(query);
    std::vector<std::string> out{join(tokens)};
    std::vector<std::string> rewritten;
    for (const auto& group : synonyms.equivalent) {
        for (const auto& member : group) {
            const auto from = normalize_tokens(member);
            for (const auto& other : group) {
                if (&other == &member) continue;
                if (substitute(tokens, from, normalize_tokens(other), rewritten)) out.push_back(join(rewritten));
            }
        }
    }
    for (const auto& [term, members] : synonyms.hypernyms) {
        const auto from = normalize_tokens(term);
        for (const auto& m : members) {
            if (substitute(tokens, from, normalize_tokens(m), rewritten)) out.push_back(join(rewritten));
        }
    }
    std::vector<std::string> unique;
    for (auto& v : out) {
        if (std::find(unique.begin(), unique.end(), v) == unique.end()) unique.push_back(std::move(v));
    }
    return unique;
}

double match_score(const std::string& query, const std::string& label, const sim::SynonymTable& synonyms) {
    double best = 0.0;
    for (const auto& v : expand_query(query, synonyms)) best = std::max(best, overlap_score(v, label));
    return best;
}

Detection resolve_label(const std::vector<Detection>& detections, const std::string& query, const sim::SynonymTable& synonyms) {
    auto ranked = scored(detections, query, synonyms);
    if (ranked.empty()) throw NotFoundError("no detection matches '" + query + "'");
    return *ranked.front().second;
}

std::vector<Detection> resolve_all(const std::vector<Detection>& detections, const std::string& query, const sim::SynonymTable& synonyms) {
    std::vector<Detection> out;
    for (const auto& [score, d] : scored(detections, query, synonyms)) out.push_back(*d);
    return out;
}

}  // namespace tabletop::perception
