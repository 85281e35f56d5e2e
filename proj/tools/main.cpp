#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "spherecal/bundle_adjust.hpp"
#include "spherecal/closed_form.hpp"
#include "spherecal/error.hpp"
#include "spherecal/evaluate.hpp"
#include "spherecal/io.hpp"
#include "spherecal/minimal.hpp"
#include "spherecal/simulate.hpp"
#include "spherecal/validate.hpp"

namespace {

using spherecal::SimConfig;

// exit codes: 2 usage/schema, 3 sampling, 4 degeneracy, 5 numerical failure
constexpr int kExitUsage = 2;
constexpr int kExitSampling = 3;
constexpr int kExitDegenerate = 4;
constexpr int kExitNumerical = 5;

void apply_sim_config_file(const std::string& path, SimConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw spherecal::SchemaError("cannot open config " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw spherecal::SchemaError("invalid JSON in " + path);
  if (j.contains("intrinsics")) {
    const auto& ji = j["intrinsics"];
    cfg.intrinsics.fx = ji.value("fx", cfg.intrinsics.fx);
    cfg.intrinsics.fy = ji.value("fy", cfg.intrinsics.fy);
    cfg.intrinsics.cx = ji.value("cx", cfg.intrinsics.cx);
    cfg.intrinsics.cy = ji.value("cy", cfg.intrinsics.cy);
    cfg.intrinsics.skew = ji.value("skew", cfg.intrinsics.skew);
  }
  if (j.contains("distortion")) {
    cfg.distortion.k1 = j["distortion"].value("k1", cfg.distortion.k1);
    cfg.distortion.k2 = j["distortion"].value("k2", cfg.distortion.k2);
  }
  if (j.contains("image_size")) {
    cfg.image_width = j["image_size"].at(0).get<int>();
    cfg.image_height = j["image_size"].at(1).get<int>();
  }
  if (j.contains("target")) {
    const auto& jt = j["target"];
    cfg.target.rows = jt.value("rows", cfg.target.rows);
    cfg.target.cols = jt.value("cols", cfg.target.cols);
    cfg.target.spacing_mm = jt.value("spacing_mm", cfg.target.spacing_mm);
  }
  if (j.contains("center_mm")) {
    const auto& jc = j["center_mm"];
    cfg.center_x = jc.at(0).get<double>();
    cfg.center_y = jc.at(1).get<double>();
    cfg.radius = -jc.at(2).get<double>();
  }
}

int run_simulate(const std::string& out_path, int views, double noise_px,
                 double sphere_noise_mm, std::uint64_t seed,
                 const std::string& config_path) {
  SimConfig cfg;
  if (!config_path.empty()) apply_sim_config_file(config_path, cfg);
  cfg.num_views = views;
  cfg.pixel_noise = noise_px;
  cfg.sphere_noise_mm = sphere_noise_mm;
  cfg.seed = seed;

  const spherecal::SimResult sim = spherecal::generate(cfg);
  spherecal::ObservationData data;
  data.target = cfg.target;
  data.observations = sim.observations;
  data.ground_truth = sim.truth;
  spherecal::write_observation_file(out_path, data);
  std::cout << "wrote " << out_path << " (" << cfg.num_views << " views, "
            << cfg.target.point_count() << " points each)\n";
  return 0;
}

int run_calibrate(const std::string& input_path, const std::string& solver,
                  bool no_ba, int ba_max_iters, double cauchy_scale, bool freeze_skew,
                  const std::string& out_path) {
  const spherecal::ObservationData data = spherecal::read_observation_file(input_path);

  spherecal::CameraIntrinsics K;
  spherecal::SphericalExtrinsics ext;
  if (solver == "minimal") {
    std::tie(K, ext) = spherecal::solve_minimal(data.observations, data.target);
  } else {
    std::tie(K, ext) = spherecal::solve_closed_form(data.observations, data.target);
  }

  spherecal::ResultData result;
  result.solver = solver;
  if (no_ba) {
    result.intrinsics = K;
    result.distortion = {};  // solvers assume zero distortion
    result.extrinsics = ext;
  } else {
    spherecal::BAOptions opts;
    opts.max_iterations = ba_max_iters;
    opts.cauchy_scale_px = cauchy_scale;
    opts.freeze_skew = freeze_skew;
    const spherecal::BAResult ba =
        spherecal::bundle_adjust(K, {}, ext, data.observations, data.target, opts);
    result.intrinsics = ba.intrinsics;
    result.distortion = ba.distortion;
    result.extrinsics = ba.extrinsics;
    result.ba = ba.report;
  }

  auto [rms, per_view] =
      spherecal::reprojection_rms(result.intrinsics, result.distortion,
                                  result.extrinsics, data.observations, data.target);
  result.rms_calib_px = rms;
  result.per_view_rms = std::move(per_view);

  if (!out_path.empty()) spherecal::write_result_file(out_path, result);
  std::printf("solver: %s\nrms_calib_px: %.9g\n", solver.c_str(), result.rms_calib_px);
  if (result.ba) {
    std::printf("ba_iterations: %d (%s)\n", result.ba->iterations,
                result.ba->reason.c_str());
  }
  return 0;
}

void print_eval(const char* label, const spherecal::EvalReport& report) {
  std::printf("%-12s mean %.6g px, median %.6g px over %zu views\n", label,
              report.mean_rms_px, report.median_rms_px, report.per_view.size());
}

int run_evaluate(const std::string& params_path, const std::string& params2_path,
                 const std::string& eval_path, const std::string& pose_points,
                 const std::string& out_path) {
  const spherecal::ObservationData eval_data = spherecal::read_observation_file(eval_path);
  spherecal::EvalOptions opts;
  opts.quarter_points = pose_points != "all";

  const spherecal::ResultData params = spherecal::read_result_file(params_path);
  const spherecal::EvalReport report = spherecal::evaluate_held_out(
      params.intrinsics, params.distortion, eval_data.observations, eval_data.target,
      opts);
  print_eval("params", report);

  nlohmann::ordered_json j;
  auto to_json = [](const spherecal::EvalReport& r) {
    nlohmann::ordered_json out;
    out["mean_rms_px"] = r.mean_rms_px;
    out["median_rms_px"] = r.median_rms_px;
    nlohmann::ordered_json views = nlohmann::ordered_json::array();
    for (const auto& ve : r.per_view) {
      views.push_back({{"view_id", ve.view_id},
                       {"pose_points", ve.pose_points},
                       {"eval_points", ve.eval_points},
                       {"rms_px", ve.rms_px}});
    }
    out["per_view"] = std::move(views);
    return out;
  };
  j["params"] = to_json(report);

  if (!params2_path.empty()) {
    const spherecal::ResultData params2 = spherecal::read_result_file(params2_path);
    const spherecal::EvalReport report2 = spherecal::evaluate_held_out(
        params2.intrinsics, params2.distortion, eval_data.observations,
        eval_data.target, opts);
    print_eval("params2", report2);
    std::printf("difference   mean %+.6g px, median %+.6g px\n",
                report2.mean_rms_px - report.mean_rms_px,
                report2.median_rms_px - report.median_rms_px);
    j["params2"] = to_json(report2);
    j["difference"] = {{"mean_rms_px", report2.mean_rms_px - report.mean_rms_px},
                       {"median_rms_px", report2.median_rms_px - report.median_rms_px}};
  }

  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw spherecal::Error("cannot write " + out_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int run_verify_sphere(const std::string& params_path, const std::string& poses_path,
                      const std::string& out_path) {
  std::vector<spherecal::ViewPose> poses;
  if (!params_path.empty()) {
    const spherecal::ResultData params = spherecal::read_result_file(params_path);
    for (const auto& R : params.extrinsics.rotations) {
      spherecal::ViewPose pose;
      pose.R = R;
      pose.t = -R * params.extrinsics.center();
      poses.push_back(pose);
    }
  } else {
    poses = spherecal::read_poses_file(poses_path);
  }

  const spherecal::SphereFitReport report = spherecal::sphere_motion_report(poses);
  const std::string text = spherecal::sphere_report_to_json(report);
  std::cout << text;
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw spherecal::Error("cannot write " + out_path);
    out << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spherical-motion camera calibration"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate synthetic observations");
  std::string sim_out, sim_config;
  int sim_views = 15;
  double sim_noise = 0.0, sim_sphere_noise = 0.0;
  std::uint64_t sim_seed = 0;
  sim->add_option("--out", sim_out, "output observation file")->required();
  sim->add_option("--views", sim_views, "number of views");
  sim->add_option("--noise-px", sim_noise, "pixel noise std");
  sim->add_option("--sphere-noise-mm", sim_sphere_noise, "per-view center noise std");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--config", sim_config, "JSON camera/target override");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "solve intrinsics and motion");
  std::string cal_in, cal_out, cal_solver = "closedform";
  bool cal_no_ba = false, cal_freeze_skew = false;
  int cal_ba_iters = 100;
  double cal_cauchy = 2.0;
  cal->add_option("--input", cal_in, "observation file")->required();
  cal->add_option("--solver", cal_solver, "closedform|minimal")
      ->check(CLI::IsMember({"closedform", "minimal"}));
  cal->add_flag("--no-ba", cal_no_ba, "skip bundle adjustment");
  cal->add_option("--ba-max-iters", cal_ba_iters, "LM iteration cap");
  cal->add_option("--cauchy-scale-px", cal_cauchy, "robust loss scale");
  cal->add_flag("--freeze-skew", cal_freeze_skew, "do not refine skew");
  cal->add_option("--out", cal_out, "result file");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "held-out reprojection accuracy");
  std::string ev_params, ev_params2, ev_eval, ev_out, ev_pose_points = "quarter";
  ev->add_option("--params", ev_params, "result file")->required();
  ev->add_option("--params2", ev_params2, "second result file to compare");
  ev->add_option("--eval", ev_eval, "held-out observation file")->required();
  ev->add_option("--pose-points", ev_pose_points, "quarter|all")
      ->check(CLI::IsMember({"quarter", "all"}));
  ev->add_option("--out", ev_out, "JSON report file");

  // verify-sphere
  auto* vs = app.add_subcommand("verify-sphere", "spherical motion statistics");
  std::string vs_params, vs_poses, vs_out;
  vs->add_option("--params", vs_params, "result file");
  vs->add_option("--poses", vs_poses, "poses file");
  vs->add_option("--out", vs_out, "JSON report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) {
      return run_simulate(sim_out, sim_views, sim_noise, sim_sphere_noise, sim_seed,
                          sim_config);
    }
    if (cal->parsed()) {
      return run_calibrate(cal_in, cal_solver, cal_no_ba, cal_ba_iters, cal_cauchy,
                           cal_freeze_skew, cal_out);
    }
    if (ev->parsed()) {
      return run_evaluate(ev_params, ev_params2, ev_eval, ev_pose_points, ev_out);
    }
    if (vs->parsed()) {
      if (vs_params.empty() == vs_poses.empty()) {
        std::cerr << "verify-sphere needs exactly one of --params or --poses\n";
        return kExitUsage;
      }
      return run_verify_sphere(vs_params, vs_poses, vs_out);
    }
  } catch (const spherecal::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const spherecal::SamplingExhausted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSampling;
  } catch (const spherecal::DegenerateConfiguration& e) {
    std::cerr << "error: degenerate configuration: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const spherecal::TooFewViews& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const spherecal::NonPositiveDepth& e) {
    std::cerr << "error: " << e.what();
    if (e.view_index >= 0) std::cerr << " (view " << e.view_index << ")";
    std::cerr << "\n";
    return kExitNumerical;
  } catch (const spherecal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
