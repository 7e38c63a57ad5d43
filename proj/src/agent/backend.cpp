#include "tabletop/agent/backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>

#include "httplib.h"
#include "tabletop/agent/mock_backend.hpp"
#include "tabletop/common/error.hpp"

namespace tabletop::agent {
namespace {

struct ParsedUri {
    std::string scheme;
    std::string authority;  // host[:port]
    std::string path;
    std::map<std::string, std::string> query;
};

ParsedUri parse_uri(const std::string& uri) {
    ParsedUri p;
    const auto sep = uri.find("://");
    if (sep == std::string::npos) throw ConfigError("backend URI without scheme: '" + uri + "'");
    p.scheme = uri.substr(0, sep);
    std::string rest = uri.substr(sep + 3);
    if (auto q = rest.find('?'); q != std::string::npos) {
        std::string query = rest.substr(q + 1);
        rest.resize(q);
        size_t start = 0;
        while (start <= query.size()) {
            size_t amp = query.find('&', start);
            std::string kv = query.substr(start, amp == std::string::npos ? std::string::npos : amp - start);
            if (!kv.empty()) {
                auto eq = kv.find('=');
                p.query[kv.substr(0, eq)] = eq == std::string::npos ? "" : kv.substr(eq + 1);
            }
            if (amp == std::string::npos) break;
            start = amp + 1;
        }
    }
    auto slash = rest.find('/');
    p.authority = rest.substr(0, slash);
    p.path = slash == std::string::npos ? "" : rest.substr(slash);
    return p;
}

bool flag(const ParsedUri& p, const std::string& key, bool fallback) {
    auto it = p.query.find(key);
    if (it == p.query.end()) return fallback;
    return !(it->second == "0" || it->second == "false" || it->second == "no");
}

}  // namespace

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::planner: return "planner";
        case Stage::converter: return "converter";
        case Stage::evaluator: return "evaluator";
    }
    return "?";
}

bool Attachment::is_visual() const { return mime.rfind("image/", 0) == 0 || mime == kSceneMime; }

bool ChatRequest::needs_vision() const {
    for (const auto& m : messages) {
        for (const auto& a : m.attachments) {
            if (a.is_visual()) return true;
        }
    }
    return false;
}

std::string ModelBackend::complete(const ChatRequest& request) {
    if (request.needs_vision() && !caps_.vision) {
        throw PreconditionError("backend " + name_ + " is text-only but the " + std::string(to_string(request.stage)) +
                                " request carries a visual attachment");
    }
    {
        std::lock_guard lock(mu_);
        log_.push_back(request.stage);
    }
    return do_complete(request);
}

std::vector<Stage> ModelBackend::call_log() const {
    std::lock_guard lock(mu_);
    return log_;
}

size_t ModelBackend::calls(Stage stage) const {
    std::lock_guard lock(mu_);
    return static_cast<size_t>(std::count(log_.begin(), log_.end(), stage));
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
    std::lock_guard lock(req_mu_);
    return requests_;
}

std::string ScriptedBackend::do_complete(const ChatRequest& request) {
    {
        std::lock_guard lock(req_mu_);
        requests_.push_back(request);
    }
    if (fn_) return fn_(request);
    auto& queue = per_stage_[static_cast<int>(request.stage)];
    auto& source = queue.empty() ? shared_ : queue;
    if (source.empty()) throw TransportError("scripted backend has no reply left for the " + std::string(to_string(request.stage)));
    std::string reply = std::move(source.front());
    source.pop_front();
    return reply;
}

HttpChatBackend::HttpChatBackend(Options options) : ModelBackend(options.url, {true, options.vision}), opt_(std::move(options)) {
    if (opt_.url.empty()) throw ConfigError("chat backend URL is empty");
    if (!(opt_.timeout_s > 0)) throw ConfigError("chat backend timeout must be positive");
}

json HttpChatBackend::request_body(const ChatRequest& request) const {
    json messages = json::array();
    for (const auto& m : request.messages) {
        if (m.attachments.empty()) {
            messages.push_back({{"role", m.role}, {"content", m.text}});
            continue;
        }
        json parts = json::array({{{"type", "text"}, {"text", m.text}}});
        for (const auto& a : m.attachments) {
            if (a.mime.rfind("image/", 0) == 0) {
                parts.push_back({{"type", "image_url"},
                                 {"image_url", {{"url", "data:" + a.mime + ";base64," + httplib::detail::base64_encode(a.data)}}}});
            } else {
                parts.push_back({{"type", "text"}, {"text", "[" + a.mime + "]\n" + a.data}});
            }
        }
        messages.push_back({{"role", m.role}, {"content", parts}});
    }
    return json{{"model", opt_.model}, {"messages", messages}, {"temperature", 0}};
}

std::string HttpChatBackend::do_complete(const ChatRequest& request) {
    auto uri = parse_uri(opt_.url);
    httplib::Client client(uri.scheme + "://" + uri.authority);
    const auto secs = static_cast<time_t>(opt_.timeout_s);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers;
    if (!opt_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opt_.api_key);
    auto res = client.Post(uri.path.empty() ? "/v1/chat/completions" : uri.path, headers, request_body(request).dump(), "application/json");
    if (!res) throw TransportError("chat request to " + opt_.url + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        int retry = res->has_header("Retry-After") ? std::atoi(res->get_header_value("Retry-After").c_str()) : -1;
        throw TransportError("chat backend returned HTTP " + std::to_string(res->status), res->status, retry);
    }
    try {
        auto body = json::parse(res->body);
        const auto& content = body.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        std::string text;
        for (const auto& part : content) {
            if (part.value("type", "") == "text") text += part.value("text", "");
        }
        return text;
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed chat completion: ") + e.what());
    }
}

std::shared_ptr<ModelBackend> make_backend(const std::string& uri, const sim::Registry& registry) {
    const auto p = parse_uri(uri);
    if (p.scheme == "mock") {
        if (p.authority == "rules") return std::make_shared<MockRulesBackend>(registry, flag(p, "vision", true));
        if (p.authority == "garbage") return std::make_shared<GarbageBackend>();
        if (p.authority == "ambiguous") return std::make_shared<AmbiguousBackend>(registry);
        throw ConfigError("unknown mock backend '" + uri + "'");
    }
    if (p.scheme == "https") {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        throw ConfigError("https backends need a build with OpenSSL; use http:// or a local proxy");
#endif
    }
    if (p.scheme == "http" || p.scheme == "https") {
        HttpChatBackend::Options o;
        std::string path = p.path;
        o.url = p.scheme + "://" + p.authority + path;
        if (auto it = p.query.find("model"); it != p.query.end()) o.model = it->second;
        if (auto it = p.query.find("timeout"); it != p.query.end()) o.timeout_s = std::atof(it->second.c_str());
        o.vision = flag(p, "vision", true);
        if (const char* key = std::getenv("TABLETOP_API_KEY")) o.api_key = key;
        return std::make_shared<HttpChatBackend>(o);
    }
    throw ConfigError("unsupported backend scheme in '" + uri + "'");
}

}  // namespace tabletop::agent
