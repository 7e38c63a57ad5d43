#include "tabletop/speech/clients.hpp"

#include <cstdlib>

#include "httplib.h"
#include "tabletop/common/json_util.hpp"

namespace tabletop::speech {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

httplib::Result post(const std::string& base, const std::string& path, const json& body, double timeout_s) {
    httplib::Client client(base);
    const auto secs = static_cast<time_t>(timeout_s);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    return client.Post(path, body.dump(), "application/json");
}

void check(const httplib::Result& res, const std::string& what) {
    if (!res) throw TransportError(what + " request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        const int retry = res->has_header("Retry-After") ? std::atoi(res->get_header_value("Retry-After").c_str()) : -1;
        throw TransportError(what + " service returned HTTP " + std::to_string(res->status), res->status, retry);
    }
}

void check_base(const std::string& base) {
    if (base.rfind("http://", 0) != 0 && base.rfind("https://", 0) != 0) throw ConfigError("service URL must start with http:// ('" + base + "')");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (base.rfind("https://", 0) == 0) throw ConfigError("https services need a build with OpenSSL");
#endif
}

}  // namespace

std::string AsrClient::transcribe(const Audio& segment) {
    if (segment.samples.empty()) throw PreconditionError("cannot transcribe an empty audio segment");
    std::string text = trim(do_transcribe(segment));
    if (text.empty()) throw EmptyTranscriptError("recognizer returned an empty transcript");
    return text;
}

ScriptedAsr::ScriptedAsr(std::vector<std::string> transcripts) : queue_(transcripts.begin(), transcripts.end()) {}

void ScriptedAsr::push(std::string transcript) {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(transcript));
}

std::string ScriptedAsr::do_transcribe(const Audio&) {
    std::lock_guard lock(mu_);
    if (queue_.empty()) throw TransportError("scripted recognizer has no transcript left");
    std::string t = std::move(queue_.front());
    queue_.pop_front();
    return t;
}

HttpAsr::HttpAsr(std::string base_url, double timeout_s) : base_url_(std::move(base_url)), timeout_s_(timeout_s) {
    check_base(base_url_);
    if (!(timeout_s_ > 0)) throw ConfigError("ASR timeout must be positive");
}

std::string HttpAsr::do_transcribe(const Audio& segment) {
    json body{{"schema", "asr_request"}, {"v", 1}, {"sample_rate", segment.sample_rate}, {"audio_wav_b64", httplib::detail::base64_encode(encode_wav(segment))}};
    auto res = post(base_url_, "/v1/asr", body, timeout_s_);
    check(res, "ASR");
    try {
        return json::parse(res->body).at("text").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed ASR reply: ") + e.what());
    }
}

AudioHandle TtsClient::synthesize(const std::string& text) {
    if (trim(text).empty()) throw PreconditionError("cannot synthesize empty text");
    return do_synthesize(text);
}

AudioHandle TextTts::do_synthesize(const std::string& text) { return AudioHandle{AudioHandle::Kind::none, text, ""}; }

HttpTts::HttpTts(std::string base_url, double timeout_s) : base_url_(std::move(base_url)), timeout_s_(timeout_s) {
    check_base(base_url_);
    if (!(timeout_s_ > 0)) throw ConfigError("TTS timeout must be positive");
}

AudioHandle HttpTts::do_synthesize(const std::string& text) {
    auto res = post(base_url_, "/v1/tts", json{{"schema", "tts_request"}, {"v", 1}, {"text", text}}, timeout_s_);
    check(res, "TTS");
    if (res->get_header_value("Content-Type").rfind("audio/", 0) == 0) return AudioHandle{AudioHandle::Kind::wav, text, res->body};
    try {
        return AudioHandle{AudioHandle::Kind::url, text, json::parse(res->body).at("audio_url").get<std::string>()};
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed TTS reply: ") + e.what());
    }
}

std::shared_ptr<AsrClient> make_asr(const std::string& spec) {
    if (spec == "text") return std::make_shared<ScriptedAsr>();
    if (spec.rfind("text:", 0) == 0) return std::make_shared<ScriptedAsr>(std::vector<std::string>{spec.substr(5)});
    return std::make_shared<HttpAsr>(spec);
}

std::shared_ptr<TtsClient> make_tts(const std::string& spec) {
    if (spec == "text") return std::make_shared<TextTts>();
    return std::make_shared<HttpTts>(spec);
}

}  // namespace tabletop::speech
