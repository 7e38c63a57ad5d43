#pragma once

#include <Eigen/Dense>

#include "tabletop/common/json_util.hpp"
#include "tabletop/sim/types.hpp"

namespace tabletop::perception {

/// Pinhole camera. `rotation` holds the camera axes as columns expressed in the
/// world frame, so a camera-frame point maps to world as rotation * p + translation.
struct CameraModel {
    double fx = 600.0;
    double fy = 600.0;
    double cx = 320.0;
    double cy = 240.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    int width = 640;
    int height = 480;
};

struct PixelPoint {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

/// Overhead camera looking straight down at the centre of the default workspace.
CameraModel overhead_camera();

/// Throws PreconditionError unless fx, fy > 0, the image is non-empty and the
/// rotation is orthonormal within 1e-9.
void validate(const CameraModel& camera);

bool in_image(const CameraModel& camera, double u, double v);

/// Back-project a pixel with known depth to world coordinates.
Eigen::Vector3d pixel_to_world(const CameraModel& camera, double u, double v, double depth);

/// Forward projection. Throws PreconditionError for points behind the camera.
PixelPoint world_to_pixel(const CameraModel& camera, const Eigen::Vector3d& world);

/// True when all four workspace corners at table height land inside the image.
bool covers_workspace(const CameraModel& camera, const sim::Workspace& workspace);

json to_json(const CameraModel& camera);
CameraModel camera_from_json(const json& j);

}  // namespace tabletop::perception
