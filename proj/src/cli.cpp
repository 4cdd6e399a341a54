#include "adavsr/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "adavsr/adapt_infer.hpp"
#include "adavsr/checkpoint.hpp"
#include "adavsr/config.hpp"
#include "adavsr/experiment.hpp"
#include "adavsr/logging.hpp"
#include "adavsr/metrics.hpp"
#include "adavsr/synthetic.hpp"
#include "adavsr/train_external.hpp"

namespace adavsr {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// A missing input path; maps to exit code 2.
class MissingInput : public Error {
 public:
  using Error::Error;
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void require_dir(const fs::path& p, const std::string& what) {
  if (!fs::is_directory(p)) throw MissingInput(what + " directory not found: " + p.string());
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw MissingInput(what + " not found: " + p.string());
}

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
  }
  fs::rename(tmp, path);
}

/// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string started;
};

struct Manifest {
  json inputs = json::object();
  json outputs = json::object();
  json hashes = json::object();
  json results = json::object();
};

void add_common(CLI::App* app, Common& c, bool seed_required) {
  app->add_option("--config", c.config_path, "config file (key = value with [section] headers)");
  app->add_option("--set", c.overrides, "override a setting, section.key=value (repeatable)");
  auto* seed = app->add_option("--seed", c.seed, "random seed (sets train.seed and tasks.seed)");
  if (seed_required) seed->required();
  app->add_option("--workers", c.workers, "worker threads (results do not depend on this)");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg;
  if (!c.config_path.empty()) {
    if (!fs::exists(c.config_path)) throw MissingInput("config file not found: " + c.config_path);
    cfg = load_config(c.config_path);
  }
  for (const std::string& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + o + "'");
    apply_setting(cfg, o.substr(0, eq), o.substr(eq + 1));
  }
  if (c.seed) {
    cfg.train.seed = *c.seed;
    cfg.tasks.seed = *c.seed;
  }
  if (c.workers) cfg.train.workers = *c.workers;
  validate(cfg);
  return cfg;
}

void write_manifest(const fs::path& out_dir, const std::string& command, const Common& c, const RunConfig& cfg,
                    const Manifest& m) {
  json j;
  j["command"] = command;
  j["config_path"] = c.config_path.empty() ? json(nullptr) : json(fs::absolute(c.config_path).string());
  j["seed"] = cfg.train.seed;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["checkpoint_hashes"] = m.hashes;
  if (!m.results.empty()) j["results"] = m.results;
  j["config"] = config_entries(cfg);
  j["started"] = c.started;
  j["finished"] = utc_now();
  fs::create_directories(out_dir);
  write_atomic(out_dir / "manifest.json", j.dump(2) + "\n");
}

/// Training videos: every subdirectory of `data_dir` holding PNG frames, or
/// the synthetic training split when no directory is given.
std::vector<Video> training_videos(const std::string& data_dir, const RunConfig& cfg) {
  if (data_dir.empty()) return make_toy_data(cfg).train;
  require_dir(data_dir, "data");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(data_dir))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) dirs.push_back(data_dir);
  std::vector<Video> out;
  for (const auto& d : dirs) out.push_back(load_video(d));
  return out;
}

Checkpoint load_or_init(const std::string& path, const RunConfig& cfg) {
  if (path.empty()) {
    Checkpoint c;
    c.model = init_params(cfg.model, cfg.train.seed);
    return c;
  }
  require_file(path, "checkpoint");
  Checkpoint c = load_checkpoint(path);
  if (!(c.model.tsr.net->arch == cfg.model))
    log_warn("checkpoint architecture differs from config; using the checkpoint's");
  return c;
}

std::optional<DegradationTask> read_task_arg(const std::string& task_line, const std::string& task_file) {
  if (!task_line.empty()) return parse_task(task_line);
  if (!task_file.empty()) {
    require_file(task_file, "task file");
    std::ifstream in(task_file);
    std::string line;
    std::getline(in, line);
    return parse_task(line);
  }
  return std::nullopt;
}

}  // namespace

int run_cli(int argc, char** argv) {
  init_logging();
  CLI::App app{"Spatio-temporal video super-resolution with meta-learned fast adaptation"};
  app.require_subcommand(1);
  Common common;
  common.started = utc_now();

  // degrade
  std::string in_dir, out_dir;
  auto* degrade = app.add_subcommand("degrade", "apply a degradation task to a frame directory");
  add_common(degrade, common, false);
  degrade->add_option("--input", in_dir, "HR frame directory")->required();
  degrade->add_option("--out", out_dir, "output frame directory")->required();

  // pretrain / metatrain
  std::string data_dir, init_ckpt, resume_ckpt;
  std::optional<std::int64_t> pretrain_steps, meta_steps;
  auto* pre = app.add_subcommand("pretrain", "large-scale training of both modules");
  add_common(pre, common, true);
  pre->add_option("--data", data_dir, "directory of HR frame directories (default: synthetic set)");
  pre->add_option("--out", out_dir, "output directory")->required();
  pre->add_option("--resume", resume_ckpt, "resume from a pretrain checkpoint");
  pre->add_option("--pretrain-steps", pretrain_steps);

  auto* meta = app.add_subcommand("metatrain", "meta-transfer learning from a pretrained checkpoint");
  add_common(meta, common, true);
  meta->add_option("--data", data_dir, "directory of HR frame directories (default: synthetic set)");
  meta->add_option("--init", init_ckpt, "pretrained checkpoint (default: fresh init)");
  meta->add_option("--resume", resume_ckpt, "resume from a meta checkpoint");
  meta->add_option("--out", out_dir, "output directory")->required();
  meta->add_option("--meta-steps", meta_steps);

  // adapt / infer
  std::string ckpt_path, task_line, task_file;
  std::optional<int> steps;
  std::optional<double> gamma;
  auto* adapt = app.add_subcommand("adapt", "internal learning on one LR video");
  add_common(adapt, common, false);
  adapt->add_option("--checkpoint", ckpt_path)->required();
  adapt->add_option("--input", in_dir, "LR frame directory")->required();
  adapt->add_option("--out", out_dir, "output directory")->required();
  adapt->add_option("--steps", steps, "internal gradient steps (default train.internal_steps)");
  adapt->add_option("--gamma", gamma, "internal learning rate (default train.gamma)");
  adapt->add_option("--task", task_line, "oracle task line, as written by degrade");
  adapt->add_option("--task-file", task_file, "file holding the oracle task line");

  auto* inf = app.add_subcommand("infer", "reconstruct HR-HFR frames");
  add_common(inf, common, false);
  inf->add_option("--checkpoint", ckpt_path)->required();
  inf->add_option("--input", in_dir, "LR frame directory")->required();
  inf->add_option("--out", out_dir, "output frame directory")->required();

  // eval / plot
  std::string pred_dir, gt_dir, report_path, log_path;
  auto* ev = app.add_subcommand("eval", "PSNR/SSIM of predicted frames against ground truth");
  add_common(ev, common, false);
  ev->add_option("--pred", pred_dir)->required();
  ev->add_option("--gt", gt_dir)->required();
  ev->add_option("--out", out_dir, "directory for report.csv and the manifest")->required();

  auto* plot = app.add_subcommand("plot", "render loss and PSNR curves of a log CSV");
  add_common(plot, common, false);
  plot->add_option("--log", log_path)->required();
  plot->add_option("--out", out_dir)->required();

  auto* e2e = app.add_subcommand("e2e-toy", "toy experiment: pretrain, meta-train, adapt, evaluate");
  add_common(e2e, common, true);
  e2e->add_option("--out", out_dir)->required();
  e2e->add_option("--pretrain-steps", pretrain_steps);
  e2e->add_option("--meta-steps", meta_steps);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig cfg = resolve_config(common);
    if (pretrain_steps) cfg.train.pretrain_steps = *pretrain_steps;
    if (meta_steps) cfg.train.meta_steps = *meta_steps;
    if (steps) cfg.train.internal_steps = *steps;
    if (gamma) cfg.train.gamma = *gamma;
    validate(cfg);
    Manifest m;
    const std::string hash = config_hash(cfg.train, cfg.model);

    if (*degrade) {
      require_dir(in_dir, "input");
      const Video hr = load_video(in_dir);
      const DegradationTask task =
          cfg.degrade.sample ? sample_task(cfg.tasks, cfg.degrade.draw_index) : cfg.degrade.task;
      const Video lr = temporal_downscale(spatial_downscale(hr, task), task.temporal);
      fs::create_directories(out_dir);
      save_video(lr, out_dir);
      write_atomic(fs::path(out_dir) / "task.txt", format_task(task) + "\n");
      m.inputs["frames"] = fs::absolute(in_dir).string();
      m.outputs["frames"] = fs::absolute(out_dir).string();
      m.results["task"] = format_task(task);
      write_manifest(out_dir, "degrade", common, cfg, m);
      log_info("degraded {} frames {}x{} -> {} frames {}x{}", hr.frame_count(), hr.height(), hr.width(),
               lr.frame_count(), lr.height(), lr.width());
      return 0;
    }

    if (*pre || *meta) {
      const bool is_meta = static_cast<bool>(*meta);
      const std::vector<Video> videos = training_videos(data_dir, cfg);
      Checkpoint state = load_or_init(resume_ckpt.empty() ? init_ckpt : resume_ckpt, cfg);
      if (!resume_ckpt.empty() && state.config_hash != hash)
        log_warn("resuming with a config that differs from the checkpoint's");
      fs::create_directories(out_dir);
      const fs::path ckpt_out = fs::path(out_dir) / "checkpoint.ckpt";
      CsvLog log(fs::path(out_dir) / "train_log.csv");
      TrainHooks hooks;
      hooks.log = [&](const LogRow& r) {
        log.write(r);
        if (r.step % 10 == 0)
          log_info("{} step {} inner {:.5f} test {:.5f}", r.phase, r.step, r.loss_inner_mean, r.loss_test_mean);
      };
      hooks.checkpoint = [&](const Checkpoint& c) {
        Checkpoint out = c;
        out.config_hash = hash;
        save_checkpoint(out, ckpt_out);
      };
      if (is_meta) {
        state = meta_train(videos, cfg.tasks, cfg.train, state, hooks);
      } else {
        state = pretrain(videos, cfg.train, state, hooks);
      }
      state.config_hash = hash;
      save_checkpoint(state, ckpt_out);
      if (!init_ckpt.empty()) m.hashes["init"] = file_hash(init_ckpt);
      if (!resume_ckpt.empty()) m.hashes["resume"] = file_hash(resume_ckpt);
      m.hashes["output"] = file_hash(ckpt_out);
      m.inputs["data"] = data_dir.empty() ? json("synthetic") : json(fs::absolute(data_dir).string());
      m.outputs["checkpoint"] = fs::absolute(ckpt_out).string();
      m.outputs["log"] = fs::absolute(fs::path(out_dir) / "train_log.csv").string();
      write_manifest(out_dir, is_meta ? "metatrain" : "pretrain", common, cfg, m);
      return 0;
    }

    if (*adapt) {
      require_file(ckpt_path, "checkpoint");
      require_dir(in_dir, "input");
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const Video lr = load_video(in_dir);
      const auto task = read_task_arg(task_line, task_file);
      KernelProvider provider = KernelProvider::bicubic();
      if (cfg.adapt.provider == KernelProvider::Mode::oracle) {
        if (task) {
          provider = KernelProvider::oracle(*task);
        } else {
          log_warn("no oracle task given, falling back to the bicubic kernel");
        }
      }
      const InternalPair pair = build_internal_pair(lr, provider);
      const AdaptResult r =
          internal_adapt(ckpt.model, pair, cfg.train.gamma, cfg.train.internal_steps, cfg.train.loss,
                         cfg.train.internal_reduction);
      fs::create_directories(out_dir);
      Checkpoint out = ckpt;
      out.phase = "adapted";
      out.step = r.gradient_updates;
      out.optimizer.reset();
      const fs::path ckpt_out = fs::path(out_dir) / "adapted.ckpt";
      save_checkpoint(out, ckpt_out);
      {
        const fs::path log_path_out = fs::path(out_dir) / "adapt_log.csv";
        std::ofstream f(log_path_out, std::ios::trunc);
        f << kLogHeader << "\n";
        f.close();
        CsvLog log(log_path_out);
        for (size_t k = 0; k < r.losses.size(); ++k) {
          log.write(LogRow{static_cast<std::int64_t>(k), "internal", r.losses[k], r.losses[k], 0.0, r.psnr_db[k]});
        }
      }
      m.hashes["input"] = file_hash(ckpt_path);
      m.hashes["output"] = file_hash(ckpt_out);
      m.inputs["frames"] = fs::absolute(in_dir).string();
      m.outputs["checkpoint"] = fs::absolute(ckpt_out).string();
      m.results["gradient_updates"] = r.gradient_updates;
      m.results["diverged"] = r.diverged;
      write_manifest(out_dir, "adapt", common, cfg, m);
      log_info("internal loss {:.6f} -> {:.6f} in {} updates", r.losses.front(), r.losses.back(), r.gradient_updates);
      return r.diverged ? 1 : 0;
    }

    if (*inf) {
      require_file(ckpt_path, "checkpoint");
      require_dir(in_dir, "input");
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const Video out = infer(ckpt.model, load_video(in_dir));
      save_video(out, out_dir);
      m.hashes["checkpoint"] = file_hash(ckpt_path);
      m.inputs["frames"] = fs::absolute(in_dir).string();
      m.outputs["frames"] = fs::absolute(out_dir).string();
      write_manifest(out_dir, "infer", common, cfg, m);
      return 0;
    }

    if (*ev) {
      require_dir(pred_dir, "prediction");
      require_dir(gt_dir, "ground-truth");
      const MetricsReport r = evaluate(load_video(pred_dir), load_video(gt_dir));
      fs::create_directories(out_dir);
      write_report_csv(r, fs::path(out_dir) / "report.csv");
      std::printf("mean_psnr %.4f\nmean_ssim %.6f\n", r.mean_psnr_db, r.mean_ssim);
      m.inputs["pred"] = fs::absolute(pred_dir).string();
      m.inputs["gt"] = fs::absolute(gt_dir).string();
      m.outputs["report"] = fs::absolute(fs::path(out_dir) / "report.csv").string();
      m.results["mean_psnr_db"] = r.mean_psnr_db;
      m.results["mean_ssim"] = r.mean_ssim;
      write_manifest(out_dir, "eval", common, cfg, m);
      return 0;
    }

    if (*plot) {
      require_file(log_path, "log");
      emit_plots(log_path, out_dir);
      m.inputs["log"] = fs::absolute(log_path).string();
      m.outputs["plots"] = fs::absolute(out_dir).string();
      write_manifest(out_dir, "plot", common, cfg, m);
      return 0;
    }

    if (*e2e) {
      fs::create_directories(out_dir);
      const ToyData data = make_toy_data(cfg);
      CsvLog log(fs::path(out_dir) / "train_log.csv");
      const FastAdaptationResult r = run_fast_adaptation(cfg, data, [&](const LogRow& row) { log.write(row); });
      const double gain = r.meta.psnr_after - r.meta.psnr_before;
      const double margin = r.meta.psnr_after - r.baseline.psnr_after;
      const bool ok_gain = gain >= 0.5, ok_margin = margin >= 0.2, ok_budget = r.meta.max_gradient_updates <= 10;
      std::printf("meta_init_psnr %.4f\nmeta_adapted_psnr %.4f\nbaseline_adapted_psnr %.4f\n", r.meta.psnr_before,
                  r.meta.psnr_after, r.baseline.psnr_after);
      std::printf("adaptation_gain_db %.4f (>= 0.5: %s)\n", gain, ok_gain ? "pass" : "FAIL");
      std::printf("meta_vs_baseline_db %.4f (>= 0.2: %s)\n", margin, ok_margin ? "pass" : "FAIL");
      std::printf("total_seconds %.1f\n", r.total_seconds);
      m.results["meta_init_psnr"] = r.meta.psnr_before;
      m.results["meta_adapted_psnr"] = r.meta.psnr_after;
      m.results["baseline_init_psnr"] = r.baseline.psnr_before;
      m.results["baseline_adapted_psnr"] = r.baseline.psnr_after;
      m.results["adaptation_gain_db"] = gain;
      m.results["meta_vs_baseline_db"] = margin;
      m.results["total_seconds"] = r.total_seconds;
      m.outputs["log"] = fs::absolute(fs::path(out_dir) / "train_log.csv").string();
      write_manifest(out_dir, "e2e-toy", common, cfg, m);
      return ok_gain && ok_margin && ok_budget ? 0 : 1;
    }
  } catch (const MissingInput& e) {
    log_error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    log_error("{}", e.what());
    return 1;
  }
  return 2;
}

}  // namespace adavsr
