#include "tabletop/speech/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "tabletop/common/error.hpp"

namespace tabletop::speech {

namespace {

uint32_t le32(const std::string& b, size_t at) {
    return static_cast<uint32_t>(static_cast<unsigned char>(b[at])) | static_cast<uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
           static_cast<uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
           static_cast<uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

uint16_t le16(const std::string& b, size_t at) {
    return static_cast<uint16_t>(static_cast<unsigned char>(b[at]) | static_cast<unsigned char>(b[at + 1]) << 8);
}

void put32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

Audio parse_wav(const std::string& b) {
    if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0) throw PreconditionError("not a RIFF/WAVE file");
    Audio audio;
    bool have_fmt = false;
    size_t at = 12;
    while (at + 8 <= b.size()) {
        const std::string id = b.substr(at, 4);
        const size_t len = le32(b, at + 4);
        const size_t body = at + 8;
        if (body + len > b.size() && id != "data") throw PreconditionError("truncated WAV chunk '" + id + "'");
        if (id == "fmt ") {
            if (len < 16) throw PreconditionError("short fmt chunk");
            const uint16_t format = le16(b, body);
            const uint16_t channels = le16(b, body + 2);
            const uint16_t bits = le16(b, body + 14);
            if (format != 1 || channels != 1 || bits != 16)
                throw PreconditionError("WAV must be 16-bit mono PCM (got format " + std::to_string(format) + ", " + std::to_string(channels) +
                                        " channels, " + std::to_string(bits) + " bits)");
            audio.sample_rate = static_cast<int>(le32(b, body + 4));
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw PreconditionError("WAV data chunk before fmt chunk");
            // Streaming writers leave the size as 0 or 0xffffffff; take what is there.
            const size_t avail = std::min(len, b.size() - body);
            audio.samples.reserve(avail / 2);
            for (size_t i = 0; i + 1 < avail; i += 2) audio.samples.push_back(static_cast<int16_t>(le16(b, body + i)) / 32768.0f);
            return audio;
        }
        at = body + len + (len & 1);
    }
    throw PreconditionError("WAV file has no data chunk");
}

std::string encode_wav(const Audio& audio) {
    const uint32_t data_len = static_cast<uint32_t>(audio.samples.size() * 2);
    std::string out = "RIFF";
    put32(out, 36 + data_len);
    out += "WAVEfmt ";
    put32(out, 16);
    put16(out, 1);
    put16(out, 1);
    put32(out, static_cast<uint32_t>(audio.sample_rate));
    put32(out, static_cast<uint32_t>(audio.sample_rate * 2));
    put16(out, 2);
    put16(out, 16);
    out += "data";
    put32(out, data_len);
    for (float s : audio.samples) {
        const long v = std::lround(std::clamp(s, -1.0f, 1.0f) * 32767.0f);
        put16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
    }
    return out;
}

Audio read_wav_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open WAV file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_wav(ss.str());
}

}  // namespace tabletop::speech
