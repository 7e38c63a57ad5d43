#pragma once

#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "tabletop/common/error.hpp"
#include "tabletop/speech/wav.hpp"

namespace tabletop::speech {

/// The recognizer answered, but with nothing.
class EmptyTranscriptError : public Error {
public:
    using Error::Error;
};

class AsrClient {
public:
    virtual ~AsrClient() = default;
    std::string transcribe(const Audio& segment);
    virtual std::string name() const = 0;

protected:
    virtual std::string do_transcribe(const Audio& segment) = 0;
};

/// Text-mode recognizer returning queued transcripts in order.
class ScriptedAsr : public AsrClient {
public:
    explicit ScriptedAsr(std::vector<std::string> transcripts = {});
    void push(std::string transcript);
    std::string name() const override { return "scripted"; }

protected:
    std::string do_transcribe(const Audio& segment) override;

private:
    std::mutex mu_;
    std::deque<std::string> queue_;
};

/// POST {base}/v1/asr with {"schema":"asr_request","v":1,"sample_rate",
/// "audio_wav_b64"}; reply {"text": "..."}.
class HttpAsr : public AsrClient {
public:
    HttpAsr(std::string base_url, double timeout_s = 30.0);
    std::string name() const override { return base_url_; }

protected:
    std::string do_transcribe(const Audio& segment) override;

private:
    std::string base_url_;
    double timeout_s_;
};

struct AudioHandle {
    enum class Kind { none, wav, url } kind = Kind::none;
    std::string text;
    std::string data;  ///< WAV bytes or URL depending on kind

    bool playable() const { return kind != Kind::none; }
};

class TtsClient {
public:
    virtual ~TtsClient() = default;
    AudioHandle synthesize(const std::string& text);
    virtual std::string name() const = 0;

protected:
    virtual AudioHandle do_synthesize(const std::string& text) = 0;
};

/// Text mode: nothing to play, callers log the text instead.
class TextTts : public TtsClient {
public:
    std::string name() const override { return "text"; }

protected:
    AudioHandle do_synthesize(const std::string& text) override;
};

/// POST {base}/v1/tts with {"schema":"tts_request","v":1,"text"}; the reply is
/// either audio/wav bytes or JSON {"audio_url": "..."}.
class HttpTts : public TtsClient {
public:
    HttpTts(std::string base_url, double timeout_s = 30.0);
    std::string name() const override { return base_url_; }

protected:
    AudioHandle do_synthesize(const std::string& text) override;

private:
    std::string base_url_;
    double timeout_s_;
};

/// "text", "text:<transcript>" or an http(s) base URL.
std::shared_ptr<AsrClient> make_asr(const std::string& spec);
std::shared_ptr<TtsClient> make_tts(const std::string& spec);

}  // namespace tabletop::speech
