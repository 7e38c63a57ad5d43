#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tabletop/common/json_util.hpp"

namespace tabletop::speech {

enum class ThresholdMode { absolute, adaptive };

struct VadConfig {
    int sample_rate = 16000;
    double frame_ms = 30.0;
    double monitor_s = 1.0;
    double end_silence_s = 2.0;
    ThresholdMode mode = ThresholdMode::absolute;
    double k = 3.0;
    /// Absolute threshold in absolute mode, lower bound on the adaptive one.
    double floor_rms = 0.02;

    size_t frame_samples() const;
    /// Window lengths are measured in whole frames, rounded up.
    size_t monitor_frames() const;
    size_t silence_frames() const;
};

void validate(const VadConfig& config);
json to_json(const VadConfig& config);
VadConfig vad_config_from_json(const json& j);

struct CaptureSegment {
    size_t start = 0;  ///< first frame of the utterance
    size_t end = 0;    ///< last above-threshold frame, inclusive
    double trigger_rms = 0.0;
    double threshold = 0.0;
    std::vector<double> rms;      ///< one entry per frame in [start, end]
    std::vector<float> samples;   ///< audio of frames [start, end]

    double start_seconds(const VadConfig& c) const { return static_cast<double>(start) * c.frame_ms / 1000.0; }
    double end_seconds(const VadConfig& c) const { return static_cast<double>(end + 1) * c.frame_ms / 1000.0; }
    bool operator==(const CaptureSegment&) const = default;
};

json to_json(const CaptureSegment& s, const VadConfig& c);

enum class VadPhase { monitoring, armed, recording };

const char* to_string(VadPhase p);

struct VadState {
    VadPhase phase = VadPhase::monitoring;
    size_t frame = 0;                  ///< index of the next frame
    std::vector<double> monitor_rms;   ///< bounded by the monitor window
    double threshold = 0.0;
    std::optional<CaptureSegment> open;
    size_t silent_run = 0;
    std::vector<float> pending;        ///< samples of the current silent run
    std::vector<double> pending_rms;
};

double frame_rms(std::span<const float> frame);
std::vector<double> rms_trace(const VadConfig& config, std::span<const float> samples);
double adaptive_threshold(const VadConfig& config, std::vector<double> monitor_rms);

/// Advance the capture state machine by one frame. Returns a segment once the
/// silence run after it is complete.
std::optional<CaptureSegment> vad_step(const VadConfig& config, VadState& state, std::span<const float> frame);

/// End of stream: hand out an utterance that has not been confirmed by a full
/// silence run yet, trimmed at its last loud frame.
std::optional<CaptureSegment> vad_flush(VadState& state);

/// Batch reference over a precomputed RMS trace (no samples attached).
std::vector<CaptureSegment> vad_offline(const VadConfig& config, const std::vector<double>& rms, bool flush = false);

/// Frame-by-frame run over a whole signal; a trailing partial frame is dropped.
std::vector<CaptureSegment> capture_all(const VadConfig& config, std::span<const float> samples, bool flush = false);

std::vector<float> pcm16_to_float(std::span<const int16_t> pcm);

}  // namespace tabletop::speech
