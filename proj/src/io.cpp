#include "spherecal/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spherecal/error.hpp"
#include "spherecal/rotation.hpp"

namespace spherecal {

using json = nlohmann::ordered_json;

namespace {

json intrinsics_to_json(const CameraIntrinsics& K) {
  return json{{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"skew", K.skew}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics K;
  K.fx = j.at("fx").get<double>();
  K.fy = j.at("fy").get<double>();
  K.cx = j.at("cx").get<double>();
  K.cy = j.at("cy").get<double>();
  K.skew = j.at("skew").get<double>();
  return K;
}

json distortion_to_json(const RadialDistortion& d) {
  return json{{"k1", d.k1}, {"k2", d.k2}};
}

RadialDistortion distortion_from_json(const json& j) {
  return {j.at("k1").get<double>(), j.at("k2").get<double>()};
}

std::vector<Eigen::Vector3d> log_all(const std::vector<Eigen::Matrix3d>& rotations) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(rotations.size());
  for (const auto& R : rotations) out.push_back(so3_log(R));
  return out;
}

json rotations_to_json(const std::vector<Eigen::Vector3d>& aa) {
  json arr = json::array();
  for (const auto& v : aa) arr.push_back(json::array({v.x(), v.y(), v.z()}));
  return arr;
}

std::vector<Eigen::Vector3d> rotations_from_json(const json& arr) {
  std::vector<Eigen::Vector3d> out;
  for (const auto& j : arr) {
    if (!j.is_array() || j.size() != 3) {
      throw SchemaError("rotation entries must be axis-angle triples");
    }
    out.emplace_back(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  }
  return out;
}

std::vector<Eigen::Matrix3d> exp_all(const std::vector<Eigen::Vector3d>& aa) {
  std::vector<Eigen::Matrix3d> out;
  out.reserve(aa.size());
  for (const auto& v : aa) out.push_back(so3_exp(v));
  return out;
}

json extrinsics_center_to_json(const SphericalExtrinsics& ext) {
  return json::array({ext.x, ext.y, -ext.r});
}

void extrinsics_center_from_json(const json& j, SphericalExtrinsics& ext) {
  if (!j.is_array() || j.size() != 3) {
    throw SchemaError("center_mm must be a 3-array");
  }
  ext.x = j[0].get<double>();
  ext.y = j[1].get<double>();
  ext.r = -j[2].get<double>();
}

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError("invalid JSON");
  return j;
}

}  // namespace

std::string observation_to_json(const ObservationData& data) {
  json j;
  j["target"] = {{"rows", data.target.rows},
                 {"cols", data.target.cols},
                 {"spacing_mm", data.target.spacing_mm}};
  j["image_size"] =
      json::array({data.observations.image_width, data.observations.image_height});
  json views = json::array();
  for (const auto& view : data.observations.views) {
    json points = json::array();
    for (int i = 0; i < view.size(); ++i) {
      points.push_back(json{{"index", view.indices[i]},
                            {"u", view.pixels[i].x()},
                            {"v", view.pixels[i].y()}});
    }
    views.push_back(json{{"view_id", view.view_id}, {"points", std::move(points)}});
  }
  j["views"] = std::move(views);
  if (data.ground_truth) {
    const GroundTruth& gt = *data.ground_truth;
    const std::vector<Eigen::Vector3d> aa =
        data.ground_truth_rotations_aa.size() == gt.extrinsics.rotations.size()
            ? data.ground_truth_rotations_aa
            : log_all(gt.extrinsics.rotations);
    j["ground_truth"] = {{"intrinsics", intrinsics_to_json(gt.intrinsics)},
                         {"distortion", distortion_to_json(gt.distortion)},
                         {"center_mm", extrinsics_center_to_json(gt.extrinsics)},
                         {"rotations", rotations_to_json(aa)}};
  }
  return j.dump(2) + "\n";
}

ObservationData observation_from_json(const std::string& text) {
  const json j = parse(text);
  ObservationData data;
  try {
    const json& t = j.at("target");
    data.target.rows = t.at("rows").get<int>();
    data.target.cols = t.at("cols").get<int>();
    data.target.spacing_mm = t.at("spacing_mm").get<double>();
    if (data.target.rows <= 0 || data.target.cols <= 0 || data.target.spacing_mm <= 0) {
      throw SchemaError("target dimensions must be positive");
    }

    const json& size = j.at("image_size");
    if (!size.is_array() || size.size() != 2) {
      throw SchemaError("image_size must be [width, height]");
    }
    data.observations.image_width = size[0].get<int>();
    data.observations.image_height = size[1].get<int>();

    const int max_index = data.target.point_count();
    for (const json& jv : j.at("views")) {
      ViewObservations view;
      view.view_id = jv.at("view_id").get<int>();
      std::set<int> seen;
      for (const json& jp : jv.at("points")) {
        const int index = jp.at("index").get<int>();
        const double u = jp.at("u").get<double>();
        const double v = jp.at("v").get<double>();
        if (index < 0 || index >= max_index) {
          throw SchemaError("view " + std::to_string(view.view_id) + ": point index " +
                            std::to_string(index) + " outside the " +
                            std::to_string(max_index) + "-point target");
        }
        if (!seen.insert(index).second) {
          throw SchemaError("view " + std::to_string(view.view_id) +
                            ": duplicate point index " + std::to_string(index));
        }
        if (u < 0.0 || u >= data.observations.image_width || v < 0.0 ||
            v >= data.observations.image_height) {
          throw SchemaError("view " + std::to_string(view.view_id) + ": point " +
                            std::to_string(index) + " at (" + std::to_string(u) + ", " +
                            std::to_string(v) + ") lies outside the image");
        }
        view.indices.push_back(index);
        view.pixels.emplace_back(u, v);
      }
      data.observations.views.push_back(std::move(view));
    }

    if (j.contains("ground_truth")) {
      const json& gt = j.at("ground_truth");
      GroundTruth truth;
      truth.intrinsics = intrinsics_from_json(gt.at("intrinsics"));
      truth.distortion = distortion_from_json(gt.at("distortion"));
      extrinsics_center_from_json(gt.at("center_mm"), truth.extrinsics);
      data.ground_truth_rotations_aa = rotations_from_json(gt.at("rotations"));
      truth.extrinsics.rotations = exp_all(data.ground_truth_rotations_aa);
      data.ground_truth = std::move(truth);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("observation file: ") + e.what());
  }
  return data;
}

void ResultData::sync_rotations() { rotations_aa = log_all(extrinsics.rotations); }

std::string result_to_json(const ResultData& data) {
  json j;
  j["intrinsics"] = intrinsics_to_json(data.intrinsics);
  j["distortion"] = distortion_to_json(data.distortion);
  j["center_mm"] = extrinsics_center_to_json(data.extrinsics);
  const std::vector<Eigen::Vector3d> aa =
      data.rotations_aa.size() == data.extrinsics.rotations.size()
          ? data.rotations_aa
          : log_all(data.extrinsics.rotations);
  j["rotations"] = rotations_to_json(aa);
  json report;
  report["rms_calib_px"] = data.rms_calib_px;
  report["per_view_rms"] = data.per_view_rms;
  report["solver"] = data.solver;
  if (data.ba) {
    report["ba"] = json{{"initial_cost", data.ba->initial_cost},
                        {"final_cost", data.ba->final_cost},
                        {"iterations", data.ba->iterations},
                        {"final_rms_px", data.ba->final_rms_px},
                        {"reason", data.ba->reason},
                        {"cost_trace", data.ba->cost_trace}};
  }
  j["report"] = std::move(report);
  return j.dump(2) + "\n";
}

ResultData result_from_json(const std::string& text) {
  const json j = parse(text);
  ResultData data;
  try {
    data.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    data.distortion = distortion_from_json(j.at("distortion"));
    extrinsics_center_from_json(j.at("center_mm"), data.extrinsics);
    data.rotations_aa = rotations_from_json(j.at("rotations"));
    data.extrinsics.rotations = exp_all(data.rotations_aa);
    const json& report = j.at("report");
    data.rms_calib_px = report.at("rms_calib_px").get<double>();
    data.per_view_rms = report.at("per_view_rms").get<std::vector<double>>();
    data.solver = report.at("solver").get<std::string>();
    if (report.contains("ba")) {
      const json& jb = report.at("ba");
      BAReport ba;
      ba.initial_cost = jb.at("initial_cost").get<double>();
      ba.final_cost = jb.at("final_cost").get<double>();
      ba.iterations = jb.at("iterations").get<int>();
      ba.final_rms_px = jb.at("final_rms_px").get<double>();
      ba.reason = jb.at("reason").get<std::string>();
      ba.cost_trace = jb.at("cost_trace").get<std::vector<double>>();
      data.ba = std::move(ba);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("result file: ") + e.what());
  }
  return data;
}

std::string sphere_report_to_json(const SphereFitReport& r) {
  json j;
  j["centroid_mm"] = json::array({r.centroid_mm.x(), r.centroid_mm.y(), r.centroid_mm.z()});
  j["mean_radius_mm"] = r.mean_radius_mm;
  j["std_mm"] = json::array({r.std_mm.x(), r.std_mm.y(), r.std_mm.z()});
  j["std_percent_of_radius"] =
      json::array({r.std_percent_of_radius.x(), r.std_percent_of_radius.y(),
                   r.std_percent_of_radius.z()});
  j["range_mm"] = json::array({r.range_mm.x(), r.range_mm.y(), r.range_mm.z()});
  j["fitted_radius_mm"] = r.fitted_radius_mm;
  j["mean_sphere_distance_error_mm"] = r.mean_sphere_distance_error_mm;
  j["axis_intersection_centroid"] =
      json::array({r.axis_intersection_centroid.x(), r.axis_intersection_centroid.y()});
  j["axis_intersection_std"] =
      json::array({r.axis_intersection_std.x(), r.axis_intersection_std.y()});
  return j.dump(2) + "\n";
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

}  // namespace

void write_observation_file(const std::string& path, const ObservationData& data) {
  write_text(path, observation_to_json(data));
}

ObservationData read_observation_file(const std::string& path) {
  return observation_from_json(read_text(path));
}

void write_result_file(const std::string& path, const ResultData& data) {
  write_text(path, result_to_json(data));
}

ResultData read_result_file(const std::string& path) {
  return result_from_json(read_text(path));
}

std::vector<ViewPose> read_poses_file(const std::string& path) {
  const json j = parse(read_text(path));
  std::vector<ViewPose> poses;
  try {
    for (const json& jp : j.at("poses")) {
      ViewPose pose;
      const json& rot = jp.at("rotation");
      const json& t = jp.at("translation");
      if (!rot.is_array() || rot.size() != 3 || !t.is_array() || t.size() != 3) {
        throw SchemaError("poses entries need rotation and translation 3-arrays");
      }
      pose.R = so3_exp({rot[0].get<double>(), rot[1].get<double>(), rot[2].get<double>()});
      pose.t = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
      poses.push_back(pose);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("poses file: ") + e.what());
  }
  return poses;
}

}  // namespace spherecal
