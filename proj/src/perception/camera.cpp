#include "tabletop/perception/camera.hpp"

#include "tabletop/common/error.hpp"

namespace tabletop::perception {

CameraModel overhead_camera() {
    CameraModel c;
    // Image u grows along world +y, v along world +x, optical axis points down.
    c.rotation << 0, 1, 0,
                  1, 0, 0,
                  0, 0, -1;
    c.translation = Eigen::Vector3d(0.3, 0.0, 1.0);
    return c;
}

void validate(const CameraModel& camera) {
    if (!(camera.fx > 0) || !(camera.fy > 0)) throw PreconditionError("camera focal lengths must be positive");
    if (camera.width <= 0 || camera.height <= 0) throw PreconditionError("camera image size must be positive");
    Eigen::Matrix3d gram = camera.rotation.transpose() * camera.rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
        throw PreconditionError("camera rotation is not orthonormal");
    }
}

bool in_image(const CameraModel& camera, double u, double v) {
    return u >= 0.0 && v >= 0.0 && u <= camera.width && v <= camera.height;
}

Eigen::Vector3d pixel_to_world(const CameraModel& camera, double u, double v, double depth) {
    if (!(depth > 0.0)) throw PreconditionError("depth must be positive");
    if (!in_image(camera, u, v)) throw PreconditionError("pixel lies outside the image");
    Eigen::Vector3d p((u - camera.cx) * depth / camera.fx, (v - camera.cy) * depth / camera.fy, depth);
    return camera.rotation * p + camera.translation;
}

PixelPoint world_to_pixel(const CameraModel& camera, const Eigen::Vector3d& world) {
    Eigen::Vector3d p = camera.rotation.transpose() * (world - camera.translation);
    if (!(p.z() > 0.0)) throw PreconditionError("point is behind the camera");
    return PixelPoint{camera.cx + camera.fx * p.x() / p.z(), camera.cy + camera.fy * p.y() / p.z(), p.z()};
}

bool covers_workspace(const CameraModel& camera, const sim::Workspace& w) {
    for (double x : {w.x_min, w.x_max}) {
        for (double y : {w.y_min, w.y_max}) {
            Eigen::Vector3d p = camera.rotation.transpose() * (Eigen::Vector3d(x, y, 0.0) - camera.translation);
            if (!(p.z() > 0.0)) return false;
            if (!in_image(camera, camera.cx + camera.fx * p.x() / p.z(), camera.cy + camera.fy * p.y() / p.z())) return false;
        }
    }
    return true;
}

json to_json(const CameraModel& c) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r) rot.push_back({c.rotation(r, 0), c.rotation(r, 1), c.rotation(r, 2)});
    return json{{"fx", c.fx},
                {"fy", c.fy},
                {"cx", c.cx},
                {"cy", c.cy},
                {"rotation", rot},
                {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}},
                {"width", c.width},
                {"height", c.height}};
}

CameraModel camera_from_json(const json& j) {
    CameraModel c = overhead_camera();
    try {
        c.fx = j.value("fx", c.fx);
        c.fy = j.value("fy", c.fy);
        c.cx = j.value("cx", c.cx);
        c.cy = j.value("cy", c.cy);
        c.width = j.value("width", c.width);
        c.height = j.value("height", c.height);
        if (j.contains("rotation")) {
            const auto& rot = j.at("rotation");
            for (int r = 0; r < 3; ++r)
                for (int k = 0; k < 3; ++k) c.rotation(r, k) = rot.at(r).at(k).get<double>();
        }
        if (j.contains("translation")) {
            const auto& t = j.at("translation");
            c.translation = Eigen::Vector3d(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("camera: ") + e.what());
    }
    validate(c);
    return c;
}

}  // namespace tabletop::perception
