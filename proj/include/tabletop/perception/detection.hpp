#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tabletop/common/json_util.hpp"
#include "tabletop/perception/camera.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop::perception {

struct Box {
    double u_min = 0.0;
    double v_min = 0.0;
    double u_max = 0.0;
    double v_max = 0.0;

    double center_u() const { return 0.5 * (u_min + u_max); }
    double center_v() const { return 0.5 * (v_min + v_max); }
    bool operator==(const Box&) const = default;
};

struct Detection {
    std::string label;
    Box box;
    double depth = 0.0;       // metres along the optical axis at the box centre
    double confidence = 1.0;  // 0..1
    std::string source_id;    // oracle bookkeeping; never shown to a model

    bool operator==(const Detection&) const = default;
};

struct DetectorDegradation {
    double miss_prob = 0.0;                // occluded objects only
    double occlusion_mislabel_prob = 0.0;  // occluded objects only
    double box_jitter_px = 0.0;
    uint64_t seed = 0;

    bool is_zero() const { return miss_prob == 0.0 && occlusion_mislabel_prob == 0.0 && box_jitter_px == 0.0; }
};

/// Throws PreconditionError on out-of-range probabilities or negative jitter.
void validate(const DetectorDegradation& d);

/// Height of the top surface of `id` above the table, following its support chain.
double top_height(const sim::Scene& scene, const std::string& id);

/// Objects with something stacked directly on them.
bool is_occluded(const sim::Scene& scene, const std::string& id);

/// Ground-truth detector over the simulator. Held objects are invisible; the
/// degradation only ever touches occluded objects. Throws PreconditionError
/// when the camera does not see the whole workspace.
std::vector<Detection> oracle_detect(const sim::Scene& scene, const CameraModel& camera, const DetectorDegradation& degradation);

/// Detector seam. The agent never sees anything but what detect() returns.
class Detector {
public:
    virtual ~Detector() = default;
    virtual std::vector<Detection> detect(const sim::Scene& scene, const CameraModel& camera) = 0;
};

class OracleDetector final : public Detector {
public:
    explicit OracleDetector(DetectorDegradation degradation = {}) : degradation_(degradation) { validate(degradation_); }
    std::vector<Detection> detect(const sim::Scene& scene, const CameraModel& camera) override;
    const DetectorDegradation& degradation() const { return degradation_; }

private:
    DetectorDegradation degradation_;
};

/// Client for an external open-vocabulary detector speaking the JSON schema
/// below. POST {base}/v1/detect with {"schema":"detect_request","version":1,
/// "camera":{...},"scene":<snapshot>} and expects
/// {"schema":"detections","version":1,"detections":[<detection>...]}.
class HttpDetector final : public Detector {
public:
    explicit HttpDetector(std::string base_url, double timeout_s = 10.0);
    std::vector<Detection> detect(const sim::Scene& scene, const CameraModel& camera) override;

private:
    std::string base_url_;
    double timeout_s_;
};

inline constexpr int kDetectionSchemaVersion = 1;

/// `include_source` is false for anything a model will read.
json to_json(const Detection& d, bool include_source = false);
Detection detection_from_json(const json& j);

}  // namespace tabletop::perception
