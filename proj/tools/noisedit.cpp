// noisedit command-line front end.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "noisedit/noisedit.hpp"

using namespace noisedit;

namespace {

struct WorldArgs {
  std::string manifest;
  double sigma = 0.0;
  std::string prompt;
  std::optional<int> cond;

  void add(CLI::App* cmd, bool with_prompt) {
    cmd->add_option("--world", manifest, "condition means manifest ('id path' lines)")->required()->check(
        CLI::ExistingFile);
    cmd->add_option("--sigma", sigma, "per-element std of the world")->required();
    if (with_prompt) {
      auto* p = cmd->add_option("--prompt", prompt, "conditioning prompt");
      auto* c = cmd->add_option("--cond", cond, "conditioning id");
      p->excludes(c);
    }
  }

  ConditioningVector conditioning(std::size_t length) const {
    if (cond) return ConditioningVector::one_hot(*cond, length);
    return eiam::embed_prompt(prompt, length);
  }
};

EditConfig config_from(const std::string& path) { return path.empty() ? EditConfig{} : load_config(path); }

void print_container(const Container& c, std::size_t index) {
  std::vector<double> v(c.values.begin(), c.values.end());
  const VolumeStats st = stats(v);
  std::printf("[%zu] kind=%s frames=%zu channels=%zu height=%zu width=%zu\n", index,
              c.kind == ContainerKind::mask ? "mask" : "latent", c.shape.frames, c.shape.channels, c.shape.height,
              c.shape.width);
  std::printf("    min=%.9g max=%.9g mean=%.9g std=%.9g\n", st.min, st.max, st.mean, st.stddev);
  if (c.kind == ContainerKind::mask) {
    std::size_t on = 0;
    for (float x : c.values) on += x >= 0.5f;
    std::printf("    masked=%zu of %zu\n", on, c.values.size());
  }
}

int cmd_invert(const std::string& in, int steps, const std::string& out, const std::string& config_path,
               const WorldArgs& w) {
  EditConfig cfg = config_from(config_path);
  if (steps > 0) cfg.total_steps = steps;
  cfg.t_start = cfg.total_steps - cfg.tau;
  cfg.validate();
  const LatentVolume z0 = read_latent(in);
  const NoiseSchedule sched = NoiseSchedule::make(cfg.schedule, cfg.total_steps);
  const GaussianWorldDenoiser den(load_world(w.manifest, w.sigma), sched);
  const InversionTrajectory traj =
      invert(z0, cfg.total_steps, den, w.conditioning(cfg.condition_length), cfg.sampler, sched,
             cfg.inversion_correctors);
  write_trajectory(out, traj);
  std::printf("wrote %zu entries (steps 0..%d) to %s\n", traj.entries().size(), traj.last_step(), out.c_str());
  return 0;
}

struct EditArgs {
  std::string in, out, report, config, mask, source_prompt, target_prompt, instruction, video_ref, fixtures,
      window, preview;
  std::optional<std::uint64_t> seed;
  WorldArgs world;
};

int cmd_edit(const EditArgs& a) {
  EditConfig cfg = config_from(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.window.empty()) cfg.window = parse_window(a.window);
  cfg.validate();

  const LatentVolume source = read_latent(a.in);
  std::unique_ptr<eiam::InstructionAnalyzer> analyzer;
  EditRequest request{a.video_ref, a.instruction};
  if (!a.mask.empty()) {
    if (a.source_prompt.empty() || a.target_prompt.empty()) {
      fail(ErrorCode::config, "--mask needs --source-prompt and --target-prompt");
    }
    analyzer = std::make_unique<eiam::ManualAnalyzer>(a.source_prompt, a.target_prompt, read_mask(a.mask));
  } else {
    if (a.instruction.empty() || a.video_ref.empty()) {
      fail(ErrorCode::config, "either --mask or --instruction with --video-ref is required");
    }
    if (!a.fixtures.empty()) analyzer = std::make_unique<eiam::MockBackend>(a.fixtures);
    else analyzer = std::make_unique<eiam::HttpAnalyzer>(eiam::ServiceEndpoints::from_env());
  }

  const NoiseSchedule sched = NoiseSchedule::make(cfg.schedule, cfg.total_steps);
  const GaussianWorldDenoiser den(load_world(a.world.manifest, a.world.sigma), sched);
  PipelineHooks hooks;
  hooks.world = &den.world();
  const EditResult r = run_edit(source, *analyzer, request, cfg, den, hooks);

  write_volume(a.out, r.edited);
  const std::string report = r.report.to_json().dump(2) + "\n";
  if (a.report.empty()) std::cout << report;
  else write_file_bytes(a.report, report);
  if (!a.preview.empty()) emit_preview(r.edited, a.preview);
  return 0;
}

int cmd_dist(const std::string& mask_path, const std::string& out) {
  const EditMask mask = read_mask(mask_path);
  const DistanceField d = distance_transform(mask);
  const PlaneShape& s = d.shape();
  LatentVolume v(Shape{s.frames, 1, s.height, s.width});
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) v.at(f, 0, y, x) = d.frame_empty(f) ? -1.0 : d.at(f, y, x);
    }
  }
  write_volume(out, v);
  return 0;
}

int cmd_coeff(const std::string& mask_path, double m, const std::string& far, const std::string& out) {
  FarField ff = FarField::zero_beyond_band;
  if (far == "literal") ff = FarField::literal_one_beyond_band;
  else if (far != "zero") fail(ErrorCode::config, "--far-field must be zero or literal");
  write_volume(out, coefficient_field(read_mask(mask_path), m, ff));
  return 0;
}

int cmd_serve(const std::string& fixtures, const std::string& host, int port) {
  eiam::MockServer server(std::make_shared<const eiam::MockBackend>(fixtures));
  std::printf("serving %s on %s:%d\n", fixtures.c_str(), host.c_str(), port);
  std::fflush(stdout);
  server.run(host, port);
  return 0;
}

int cmd_inspect(const std::string& in) {
  const std::string bytes = read_file_bytes(in);
  std::size_t offset = 0, index = 0;
  do {
    print_container(decode_container_at(bytes, offset), index++);
  } while (offset < bytes.size());
  return 0;
}

int cmd_preview(const std::string& in, const std::string& prefix) {
  const Volume v = read_volume(in);
  LatentVolume latent = std::holds_alternative<LatentVolume>(v) ? std::get<LatentVolume>(v) : [&] {
    const EditMask& m = std::get<EditMask>(v);
    const PlaneShape& s = m.shape();
    std::vector<double> vals(m.values().begin(), m.values().end());
    return LatentVolume(Shape{s.frames, 1, s.height, s.width}, std::move(vals));
  }();
  for (const auto& p : emit_preview(latent, prefix)) std::printf("%s\n", p.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisedit: training-free latent video editing"};
  app.require_subcommand(1);

  std::string in, out, config, mask;
  int steps = 0;
  WorldArgs inv_world;
  auto* invert_cmd = app.add_subcommand("invert", "DDIM-invert a latent and write its trajectory");
  invert_cmd->add_option("--in", in, "source latent")->required();
  invert_cmd->add_option("--steps", steps, "inference steps T (overrides config)");
  invert_cmd->add_option("--out-trajectory", out, "trajectory file")->required();
  invert_cmd->add_option("--config", config, "config file");
  inv_world.add(invert_cmd, true);

  EditArgs ea;
  auto* edit_cmd = app.add_subcommand("edit", "run the full editing pipeline");
  edit_cmd->add_option("--in", ea.in, "source latent")->required();
  edit_cmd->add_option("--out", ea.out, "edited latent")->required();
  edit_cmd->add_option("--report", ea.report, "report path (stdout if omitted)");
  edit_cmd->add_option("--config", ea.config, "config file");
  edit_cmd->add_option("--mask", ea.mask, "edit mask (manual mode)");
  edit_cmd->add_option("--source-prompt", ea.source_prompt);
  edit_cmd->add_option("--target-prompt", ea.target_prompt);
  edit_cmd->add_option("--instruction", ea.instruction, "editing instruction");
  edit_cmd->add_option("--video-ref", ea.video_ref, "video reference passed to the analyzer");
  edit_cmd->add_option("--fixtures", ea.fixtures, "use the fixture-backed analyzer");
  edit_cmd->add_option("--seed", ea.seed);
  edit_cmd->add_option("--window", ea.window, "guidance steps lo:hi");
  edit_cmd->add_option("--preview", ea.preview, "also write PGM previews with this prefix");
  ea.world.add(edit_cmd, false);

  std::string dist_mask, dist_out;
  auto* dist_cmd = app.add_subcommand("dist", "Euclidean distance to the mask (-1 on empty frames)");
  dist_cmd->add_option("--mask", dist_mask)->required();
  dist_cmd->add_option("--out", dist_out)->required();

  std::string coeff_mask, coeff_out, far = "zero";
  double m = 16.0;
  auto* coeff_cmd = app.add_subcommand("coeff", "blend coefficient field");
  coeff_cmd->add_option("--mask", coeff_mask)->required();
  coeff_cmd->add_option("-m,--width", m, "transition width");
  coeff_cmd->add_option("--far-field", far, "zero|literal");
  coeff_cmd->add_option("--out", coeff_out)->required();

  std::string fixtures, host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve-mock", "serve fixture-backed EIAM endpoints");
  serve_cmd->add_option("--fixtures", fixtures)->required();
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);

  std::string inspect_in;
  auto* inspect_cmd = app.add_subcommand("inspect", "print container headers and stats");
  inspect_cmd->add_option("--in", inspect_in)->required();

  std::string preview_in, prefix;
  auto* preview_cmd = app.add_subcommand("preview", "write 8-bit PGM previews");
  preview_cmd->add_option("--in", preview_in)->required();
  preview_cmd->add_option("--out-prefix", prefix)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorCode::config);
  }

  try {
    if (*invert_cmd) return cmd_invert(in, steps, out, config, inv_world);
    if (*edit_cmd) return cmd_edit(ea);
    if (*dist_cmd) return cmd_dist(dist_mask, dist_out);
    if (*coeff_cmd) return cmd_coeff(coeff_mask, m, far, coeff_out);
    if (*serve_cmd) return cmd_serve(fixtures, host, port);
    if (*inspect_cmd) return cmd_inspect(inspect_in);
    if (*preview_cmd) return cmd_preview(preview_in, prefix);
  } catch (const Error& e) {
    std::cerr << "noisedit: " << e.what() << "\n";
    return exit_code(e.code());
  }
  return 0;
}
