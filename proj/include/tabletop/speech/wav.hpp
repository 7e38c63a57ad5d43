#pragma once

#include <string>
#include <vector>

namespace tabletop::speech {

struct Audio {
    int sample_rate = 16000;
    std::vector<float> samples;  ///< mono, [-1, 1]

    double seconds() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

/// Parse a RIFF/WAVE file holding 16-bit little-endian mono PCM.
Audio parse_wav(const std::string& bytes);
std::string encode_wav(const Audio& audio);
Audio read_wav_file(const std::string& path);

}  // namespace tabletop::speech
