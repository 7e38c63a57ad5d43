#include "tabletop/perception/detection.hpp"

#include <algorithm>
#include <set>

#include "httplib.h"
#include "tabletop/common/error.hpp"
#include "tabletop/common/rng.hpp"
#include "tabletop/sim/snapshot.hpp"

namespace tabletop::perception {
namespace {

constexpr double kOccludedConfidence = 0.6;

Box clamp_box(const CameraModel& camera, Box b) {
    auto cu = [&](double u) { return std::clamp(u, 0.0, static_cast<double>(camera.width)); };
    auto cv = [&](double v) { return std::clamp(v, 0.0, static_cast<double>(camera.height)); };
    return Box{cu(b.u_min), cv(b.v_min), cu(b.u_max), cv(b.v_max)};
}

/// Another label of the same category, chosen deterministically.
std::string swap_label(const sim::Scene& scene, const sim::ObjectInstance& o, SplitMix64& rng) {
    std::set<std::string> others;
    for (const auto& [id, other] : scene.objects) {
        if (other.category == o.category && other.label != o.label) others.insert(other.label);
    }
    if (others.empty()) return o.label;
    auto it = others.begin();
    std::advance(it, static_cast<long>(rng.next() % others.size()));
    return *it;
}

}  // namespace

void validate(const DetectorDegradation& d) {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(d.miss_prob) || !prob(d.occlusion_mislabel_prob)) throw PreconditionError("degradation probabilities must lie in [0,1]");
    if (!(d.box_jitter_px >= 0.0)) throw PreconditionError("box jitter must be non-negative");
}

double top_height(const sim::Scene& scene, const std::string& id) {
    double h = 0.0;
    std::string cur = id;
    for (size_t guard = 0; guard <= scene.objects.size(); ++guard) {
        const auto& o = scene.object(cur);
        h += o.height;
        if (!o.supported_by) break;
        cur = *o.supported_by;
    }
    return h;
}

bool is_occluded(const sim::Scene& scene, const std::string& id) { return !scene.supported_on(id).empty(); }

std::vector<Detection> oracle_detect(const sim::Scene& scene, const CameraModel& camera, const DetectorDegradation& degradation) {
    validate(camera);
    validate(degradation);
    if (!covers_workspace(camera, scene.workspace)) throw PreconditionError("camera does not cover the workspace");

    std::vector<Detection> out;
    for (const auto& [id, o] : scene.objects) {
        if (scene.held && *scene.held == id) continue;
        SplitMix64 rng(mix_seed(mix_seed(degradation.seed, scene.tick), fnv1a(id)));
        const bool occluded = is_occluded(scene, id);

        Detection d;
        d.label = o.label;
        d.source_id = id;
        d.confidence = 1.0;
        if (occluded) {
            // Draw in a fixed order so one knob never shifts the other's stream.
            const double u_miss = rng.uniform();
            const double u_label = rng.uniform();
            if (u_miss < degradation.miss_prob) continue;
            d.confidence = kOccludedConfidence;
            if (u_label < degradation.occlusion_mislabel_prob) d.label = swap_label(scene, o, rng);
        }

        const PixelPoint c = world_to_pixel(camera, Eigen::Vector3d(o.pose.x, o.pose.y, top_height(scene, id)));
        double du = 0.0, dv = 0.0;
        if (degradation.box_jitter_px > 0.0) {
            du = rng.uniform(-degradation.box_jitter_px, degradation.box_jitter_px);
            dv = rng.uniform(-degradation.box_jitter_px, degradation.box_jitter_px);
        }
        const double half_u = camera.fx * o.footprint_radius / c.depth;
        const double half_v = camera.fy * o.footprint_radius / c.depth;
        const double u = std::clamp(c.u + du, 0.0, static_cast<double>(camera.width));
        const double v = std::clamp(c.v + dv, 0.0, static_cast<double>(camera.height));
        d.box = clamp_box(camera, Box{u - half_u, v - half_v, u + half_u, v + half_v});
        d.depth = c.depth;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<Detection> OracleDetector::detect(const sim::Scene& scene, const CameraModel& camera) {
    return oracle_detect(scene, camera, degradation_);
}

HttpDetector::HttpDetector(std::string base_url, double timeout_s) : base_url_(std::move(base_url)), timeout_s_(timeout_s) {
    if (base_url_.empty()) throw ConfigError("detector URL is empty");
}

std::vector<Detection> HttpDetector::detect(const sim::Scene& scene, const CameraModel& camera) {
    httplib::Client client(base_url_);
    const auto secs = static_cast<time_t>(timeout_s_);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    json req{{"schema", "detect_request"},
             {"version", kDetectionSchemaVersion},
             {"camera", to_json(camera)},
             {"scene", sim::to_json(scene, false)}};
    auto res = client.Post("/v1/detect", req.dump(), "application/json");
    if (!res) throw TransportError("detector request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        int retry = res->has_header("Retry-After") ? std::atoi(res->get_header_value("Retry-After").c_str()) : -1;
        throw TransportError("detector returned HTTP " + std::to_string(res->status), res->status, retry);
    }
    try {
        auto body = json::parse(res->body);
        if (body.value("version", 0) != kDetectionSchemaVersion) throw TransportError("detector schema version mismatch");
        std::vector<Detection> out;
        for (const auto& dj : body.at("detections")) out.push_back(detection_from_json(dj));
        return out;
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed detector reply: ") + e.what());
    }
}

json to_json(const Detection& d, bool include_source) {
    json j{{"label", d.label},
           {"box", {round_micro(d.box.u_min), round_micro(d.box.v_min), round_micro(d.box.u_max), round_micro(d.box.v_max)}},
           {"depth", round_micro(d.depth)},
           {"confidence", round_micro(d.confidence)}};
    if (include_source) j["source_id"] = d.source_id;
    return j;
}

Detection detection_from_json(const json& j) {
    Detection d;
    d.label = j.at("label").get<std::string>();
    const auto& b = j.at("box");
    d.box = Box{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
    d.depth = j.at("depth").get<double>();
    d.confidence = j.value("confidence", 1.0);
    d.source_id = j.value("source_id", std::string{});
    if (!(d.depth > 0.0) || d.confidence < 0.0 || d.confidence > 1.0) throw PreconditionError("detection out of range");
    return d;
}

}  // namespace tabletop::perception
