#ifndef SPHERECAL_IO_HPP
#define SPHERECAL_IO_HPP

#include <optional>
#include <string>

#include "spherecal/bundle_adjust.hpp"
#include "spherecal/simulate.hpp"
#include "spherecal/types.hpp"
#include "spherecal/validate.hpp"

namespace spherecal {

// Observation file: target geometry, image size, per-view point lists and
// (optionally) the generating ground truth.
struct ObservationData {
  PlanarTarget target;
  PlanarObservations observations;
  std::optional<GroundTruth> ground_truth;
  // axis-angle triples exactly as stored on disk; kept verbatim so a
  // write -> read -> write cycle is byte-identical
  std::vector<Eigen::Vector3d> ground_truth_rotations_aa;
};

// Calibration result file: parameters plus the solve report.
struct ResultData {
  CameraIntrinsics intrinsics;
  RadialDistortion distortion;
  SphericalExtrinsics extrinsics;
  std::vector<Eigen::Vector3d> rotations_aa;  // verbatim on-disk representation
  double rms_calib_px = 0.0;
  std::vector<double> per_view_rms;
  std::string solver = "closedform";
  std::optional<BAReport> ba;

  // fills rotations_aa from the extrinsics matrices
  void sync_rotations();
};

// Serialization is canonical: fixed key order and lossless number formatting,
// so write -> read -> write is byte-identical.
std::string observation_to_json(const ObservationData& data);
ObservationData observation_from_json(const std::string& text);

std::string result_to_json(const ResultData& data);
ResultData result_from_json(const std::string& text);

std::string sphere_report_to_json(const SphereFitReport& report);

// File helpers; read throws SchemaError on malformed or out-of-range content.
void write_observation_file(const std::string& path, const ObservationData& data);
ObservationData read_observation_file(const std::string& path);
void write_result_file(const std::string& path, const ResultData& data);
ResultData read_result_file(const std::string& path);

// Poses file for verify-sphere: [{"rotation": [aa3], "translation": [t3]}].
std::vector<ViewPose> read_poses_file(const std::string& path);

}  // namespace spherecal

#endif  // SPHERECAL_IO_HPP
