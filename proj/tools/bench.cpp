// Benchmark of the OpenMP kernels against their serial reference paths:
// normal-equation accumulation inside bundle adjustment and the fan-out of
// independent seeded calibration trials.
#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "spherecal/bundle_adjust.hpp"
#include "spherecal/closed_form.hpp"
#include "spherecal/simulate.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double run_trial(std::uint64_t seed, int views, double noise, bool parallel_kernels) {
  spherecal::SimConfig cfg;
  cfg.num_views = views;
  cfg.pixel_noise = noise;
  cfg.seed = seed;
  const spherecal::SimResult sim = spherecal::generate(cfg);
  const auto [K, ext] = spherecal::solve_closed_form(sim.observations, cfg.target,
                                                     nullptr, parallel_kernels);
  spherecal::BAOptions opts;
  opts.parallel = parallel_kernels;
  const spherecal::BAResult ba =
      spherecal::bundle_adjust(K, {}, ext, sim.observations, cfg.target, opts);
  return ba.report.final_rms_px;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP benchmark"};
  int trials = 32;
  int views = 30;
  double noise = 0.5;
  bool parallel = false;
  app.add_option("--trials", trials, "number of seeded calibration trials");
  app.add_option("--views", views, "views per trial");
  app.add_option("--noise-px", noise, "pixel noise std");
  app.add_flag("--parallel", parallel, "also run the OpenMP variants");
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  std::printf("OpenMP max threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; parallel paths run serially\n");
#endif

  // 1. normal-equation accumulation, one large problem
  {
    spherecal::SimConfig cfg;
    cfg.num_views = views;
    cfg.pixel_noise = noise;
    cfg.seed = 1;
    const spherecal::SimResult sim = spherecal::generate(cfg);
    const auto [K, ext] = spherecal::solve_closed_form(sim.observations, cfg.target);
    const Eigen::VectorXd params = spherecal::pack_parameters(K, {}, ext);

    Eigen::MatrixXd H;
    Eigen::VectorXd g;
    double cost = 0.0;
    spherecal::BAOptions serial_opts;
    serial_opts.parallel = false;
    const int reps = 200;

    auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) {
      spherecal::accumulate_normal_equations(params, sim.observations, cfg.target,
                                             serial_opts, H, g, cost);
    }
    const double serial_ms = ms_since(t0) / reps;
    std::printf("accumulate (%d views): serial %.3f ms", views, serial_ms);

    if (parallel) {
      spherecal::BAOptions par_opts;
      par_opts.parallel = true;
      Eigen::MatrixXd Hp;
      Eigen::VectorXd gp;
      double costp = 0.0;
      t0 = Clock::now();
      for (int i = 0; i < reps; ++i) {
        spherecal::accumulate_normal_equations(params, sim.observations, cfg.target,
                                               par_opts, Hp, gp, costp);
      }
      const double par_ms = ms_since(t0) / reps;
      const double max_diff = (H - Hp).cwiseAbs().maxCoeff();
      std::printf(", openmp %.3f ms (x%.2f), max |dH| = %.3g", par_ms,
                  serial_ms / par_ms, max_diff);
    }
    std::printf("\n");
  }

  // 2. independent seeded trials, whole pipeline
  {
    std::vector<double> rms(trials, 0.0);
    auto t0 = Clock::now();
    for (int t = 0; t < trials; ++t) {
      rms[t] = run_trial(1000 + t, views, noise, false);
    }
    const double serial_ms = ms_since(t0);
    std::printf("trials x%d: serial %.1f ms", trials, serial_ms);

    if (parallel) {
      std::vector<double> rms_par(trials, 0.0);
      t0 = Clock::now();
#pragma omp parallel for schedule(dynamic)
      for (int t = 0; t < trials; ++t) {
        rms_par[t] = run_trial(1000 + t, views, noise, false);
      }
      const double par_ms = ms_since(t0);
      double max_diff = 0.0;
      for (int t = 0; t < trials; ++t) {
        max_diff = std::max(max_diff, std::abs(rms[t] - rms_par[t]));
      }
      std::printf(", openmp %.1f ms (x%.2f), max |drms| = %.3g", par_ms,
                  serial_ms / par_ms, max_diff);
    }
    std::printf("\n");
  }
  return 0;
}
