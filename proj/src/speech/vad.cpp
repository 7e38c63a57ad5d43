#include "tabletop/speech/vad.hpp"

#include <algorithm>
#include <cmath>

#include "tabletop/common/error.hpp"

namespace tabletop::speech {

namespace {

size_t whole_frames(double seconds, double frame_ms) {
    // 1000 / 30 is 33.33.. frames; a partial frame still counts.
    return static_cast<size_t>(std::ceil(seconds * 1000.0 / frame_ms - 1e-9));
}

}  // namespace

size_t VadConfig::frame_samples() const { return static_cast<size_t>(std::lround(sample_rate * frame_ms / 1000.0)); }
size_t VadConfig::monitor_frames() const { return whole_frames(monitor_s, frame_ms); }
size_t VadConfig::silence_frames() const { return whole_frames(end_silence_s, frame_ms); }

void validate(const VadConfig& c) {
    if (c.sample_rate <= 0) throw ConfigError("sample rate must be positive");
    if (!(c.frame_ms > 0)) throw ConfigError("frame length must be positive");
    const double exact = c.sample_rate * c.frame_ms / 1000.0;
    if (std::abs(exact - std::round(exact)) > 1e-9 || exact < 1)
        throw ConfigError("frame length must be a whole number of samples");
    if (!(c.monitor_s > 0) || !(c.end_silence_s > 0)) throw ConfigError("monitor and silence windows must be positive");
    if (!(c.k > 0)) throw ConfigError("adaptive multiplier k must be positive");
    if (!(c.floor_rms >= 0)) throw ConfigError("threshold floor must be non-negative");
}

json to_json(const VadConfig& c) {
    return json{{"sample_rate", c.sample_rate},
                {"frame_ms", c.frame_ms},
                {"monitor_s", c.monitor_s},
                {"end_silence_s", c.end_silence_s},
                {"mode", c.mode == ThresholdMode::absolute ? "absolute" : "adaptive"},
                {"k", c.k},
                {"floor_rms", c.floor_rms}};
}

VadConfig vad_config_from_json(const json& j) {
    VadConfig c;
    c.sample_rate = j.value("sample_rate", c.sample_rate);
    c.frame_ms = j.value("frame_ms", c.frame_ms);
    c.monitor_s = j.value("monitor_s", c.monitor_s);
    c.end_silence_s = j.value("end_silence_s", c.end_silence_s);
    const std::string mode = j.value("mode", "absolute");
    if (mode == "absolute") c.mode = ThresholdMode::absolute;
    else if (mode == "adaptive") c.mode = ThresholdMode::adaptive;
    else throw ConfigError("unknown threshold mode '" + mode + "'");
    c.k = j.value("k", c.k);
    c.floor_rms = j.value("floor_rms", c.floor_rms);
    validate(c);
    return c;
}

json to_json(const CaptureSegment& s, const VadConfig& c) {
    json rms = json::array();
    for (double r : s.rms) rms.push_back(round_micro(r));
    return json{{"start_frame", s.start},
                {"end_frame", s.end},
                {"start_s", round_micro(s.start_seconds(c))},
                {"end_s", round_micro(s.end_seconds(c))},
                {"trigger_rms", round_micro(s.trigger_rms)},
                {"threshold", round_micro(s.threshold)},
                {"rms", rms}};
}

const char* to_string(VadPhase p) {
    switch (p) {
        case VadPhase::monitoring: return "monitoring";
        case VadPhase::armed: return "armed";
        case VadPhase::recording: return "recording";
    }
    return "?";
}

double frame_rms(std::span<const float> frame) {
    if (frame.empty()) return 0.0;
    double acc = 0.0;
    for (float s : frame) acc += static_cast<double>(s) * s;
    return std::sqrt(acc / static_cast<double>(frame.size()));
}

std::vector<double> rms_trace(const VadConfig& config, std::span<const float> samples) {
    const size_t n = config.frame_samples();
    std::vector<double> out;
    for (size_t i = 0; i + n <= samples.size(); i += n) out.push_back(frame_rms(samples.subspan(i, n)));
    return out;
}

double adaptive_threshold(const VadConfig& config, std::vector<double> monitor_rms) {
    if (monitor_rms.empty()) return config.floor_rms;
    std::sort(monitor_rms.begin(), monitor_rms.end());
    const size_t m = monitor_rms.size();
    const double median = m % 2 ? monitor_rms[m / 2] : 0.5 * (monitor_rms[m / 2 - 1] + monitor_rms[m / 2]);
    return std::max(config.floor_rms, config.k * median);
}

namespace {

// Shared by the online and offline paths so the two cannot drift apart; the
// online caller attaches samples, the offline one passes an empty span.
std::optional<CaptureSegment> advance(const VadConfig& config, VadState& st, double r, std::span<const float> frame) {
    const size_t idx = st.frame++;
    switch (st.phase) {
        case VadPhase::monitoring:
            st.monitor_rms.push_back(r);
            if (st.monitor_rms.size() >= config.monitor_frames()) {
                st.threshold = config.mode == ThresholdMode::absolute ? config.floor_rms : adaptive_threshold(config, st.monitor_rms);
                st.monitor_rms.clear();
                st.phase = VadPhase::armed;
            }
            return std::nullopt;
        case VadPhase::armed:
            if (r > st.threshold) {
                CaptureSegment seg;
                seg.start = seg.end = idx;
                seg.trigger_rms = r;
                seg.threshold = st.threshold;
                seg.rms.push_back(r);
                seg.samples.assign(frame.begin(), frame.end());
                st.open = std::move(seg);
                st.silent_run = 0;
                st.phase = VadPhase::recording;
            }
            return std::nullopt;
        case VadPhase::recording: {
            auto& seg = *st.open;
            if (r > st.threshold) {
                // Speech resumed inside the silence run: the pause is content.
                seg.rms.insert(seg.rms.end(), st.pending_rms.begin(), st.pending_rms.end());
                seg.samples.insert(seg.samples.end(), st.pending.begin(), st.pending.end());
                seg.rms.push_back(r);
                seg.samples.insert(seg.samples.end(), frame.begin(), frame.end());
                seg.end = idx;
                st.pending.clear();
                st.pending_rms.clear();
                st.silent_run = 0;
                return std::nullopt;
            }
            ++st.silent_run;
            st.pending_rms.push_back(r);
            st.pending.insert(st.pending.end(), frame.begin(), frame.end());
            if (st.silent_run < config.silence_frames()) return std::nullopt;
            return vad_flush(st);
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<CaptureSegment> vad_step(const VadConfig& config, VadState& state, std::span<const float> frame) {
    if (frame.size() != config.frame_samples())
        throw PreconditionError("frame has " + std::to_string(frame.size()) + " samples, expected " + std::to_string(config.frame_samples()));
    return advance(config, state, frame_rms(frame), frame);
}

std::optional<CaptureSegment> vad_flush(VadState& st) {
    if (st.phase != VadPhase::recording || !st.open) return std::nullopt;
    CaptureSegment seg = std::move(*st.open);
    st.open.reset();
    st.pending.clear();
    st.pending_rms.clear();
    st.silent_run = 0;
    st.phase = VadPhase::armed;
    return seg;
}

std::vector<CaptureSegment> vad_offline(const VadConfig& config, const std::vector<double>& rms, bool flush) {
    validate(config);
    VadState st;
    std::vector<CaptureSegment> out;
    for (double r : rms) {
        if (auto seg = advance(config, st, r, {})) out.push_back(std::move(*seg));
    }
    if (flush) {
        if (auto seg = vad_flush(st)) out.push_back(std::move(*seg));
    }
    return out;
}

std::vector<CaptureSegment> capture_all(const VadConfig& config, std::span<const float> samples, bool flush) {
    validate(config);
    const size_t n = config.frame_samples();
    VadState st;
    std::vector<CaptureSegment> out;
    for (size_t i = 0; i + n <= samples.size(); i += n) {
        if (auto seg = vad_step(config, st, samples.subspan(i, n))) out.push_back(std::move(*seg));
    }
    if (flush) {
        if (auto seg = vad_flush(st)) out.push_back(std::move(*seg));
    }
    return out;
}

std::vector<float> pcm16_to_float(std::span<const int16_t> pcm) {
    std::vector<float> out(pcm.size());
    for (size_t i = 0; i < pcm.size(); ++i) out[i] = static_cast<float>(pcm[i]) / 32768.0f;
    return out;
}

}  // namespace tabletop::speech
