#include "venngan/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "venngan/checkpoint.hpp"
#include "venngan/evaluation.hpp"
#include "venngan/experiment_config.hpp"
#include "venngan/plotting.hpp"
#include "venngan/training.hpp"

namespace venngan::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kPlotStream = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void log(const Console& c, LogLevel at, const std::string& message) {
  if (static_cast<int>(c.level) >= static_cast<int>(at)) c.err << message << '\n';
}

// Differences that make a checkpoint unusable with a config. The iteration
// budget and output settings may change between runs.
std::vector<std::string> resume_mismatches(const ExperimentConfig& saved, const ExperimentConfig& requested) {
  auto comparable = [](const ExperimentConfig& c) {
    auto j = nlohmann::json::parse(c.serialize());
    j.erase("output");
    j.erase("name");
    j["training"].erase("iterations");
    return j;
  };
  std::vector<std::string> out;
  for (const auto& op : nlohmann::json::diff(comparable(saved), comparable(requested))) {
    out.push_back(op.at("path").get<std::string>());
  }
  return out;
}

fs::path require_directory(const std::optional<fs::path>& flag, const std::string& configured) {
  fs::path dir = flag ? *flag : fs::path(configured);
  if (dir.empty()) throw UsageError("no output directory: pass --out or set output.directory in the config");
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// Keeps the header and every row up to `iteration`, so a resumed run appends
// exactly where the checkpoint left off.
void truncate_metrics(const fs::path& path, std::size_t iteration) {
  std::ifstream in(path);
  std::string line;
  std::ostringstream kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      kept << line << '\n';
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (std::stoull(line.substr(0, comma)) <= iteration) kept << line << '\n';
  }
  in.close();
  write_text(path, kept.str());
}

fs::path checkpoint_path(const fs::path& dir, std::size_t iteration) {
  return dir / "checkpoints" / ("iter_" + std::to_string(iteration) + ".ckpt");
}

ExperimentPlots write_plots(const ExperimentConfig& cfg, const TrainState& state, const fs::path& dir,
                            std::size_t points_per_group) {
  Rng rng = Rng::derived(cfg.training.seed, {kPlotStream, state.iteration});
  const GeneratorBank bank = cfg.evaluation.use_ema ? state.ema_generators() : state.generators;
  return plot_experiment(bank, cfg.data, dir, state.iteration, points_per_group, rng);
}

std::string percent(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
  return buf;
}

template <typename Body>
int guarded(Console& console, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    console.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CheckpointError& e) {
    console.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    console.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TrainingDiverged& e) {
    console.err << "error: training diverged at iteration " << e.iteration() << " (" << e.term() << "): " << e.what()
                << '\n';
    return kExitDiverged;
  } catch (const std::invalid_argument& e) {
    console.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    console.err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace

LogLevel parse_log_level(std::string_view text) {
  if (text == "quiet") return LogLevel::Quiet;
  if (text == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

LogLevel log_level_from_env() {
  const char* v = std::getenv("VENNGAN_LOG");
  return v ? parse_log_level(v) : LogLevel::Info;
}

int cmd_train(const TrainOptions& options, Console& console) {
  return guarded(console, [&] {
    std::optional<LoadedCheckpoint> resumed;
    if (options.resume) resumed = load_checkpoint(*options.resume);

    ExperimentConfig cfg;
    if (options.config) {
      cfg = ExperimentConfig::load(*options.config);
    } else if (resumed) {
      cfg = resumed->config;
    } else {
      throw UsageError("train needs --config or --resume");
    }
    if (options.seed) cfg.training.seed = *options.seed;
    if (options.out) cfg.output.directory = options.out->string();
    const fs::path dir = require_directory(options.out, cfg.output.directory);

    if (resumed) {
      const auto diffs = resume_mismatches(resumed->config, cfg);
      if (!diffs.empty()) {
        std::string msg = "checkpoint " + options.resume->string() + " does not match the config at:";
        for (const auto& d : diffs) msg += " " + d;
        throw UsageError(msg);
      }
      if (resumed->state.iteration > cfg.training.iterations) {
        throw UsageError("checkpoint is at iteration " + std::to_string(resumed->state.iteration) +
                         ", past the configured " + std::to_string(cfg.training.iterations));
      }
    }

    write_text(dir / "config.json", cfg.serialize());
    const fs::path metrics_path = dir / "metrics.csv";
    const bool append = resumed && fs::exists(metrics_path);
    if (append) truncate_metrics(metrics_path, resumed->state.iteration);
    std::ofstream metrics_file(metrics_path, append ? std::ios::app : std::ios::trunc);
    if (!metrics_file) throw std::runtime_error("cannot write " + metrics_path.string());
    MetricsCsv metrics(metrics_file, cfg.training.layout);
    if (!append) metrics.header();

    Trainer trainer = resumed ? Trainer(cfg.training, cfg.data, std::move(resumed->state), cfg.evaluation)
                              : Trainer(cfg.training, cfg.data, cfg.evaluation);
    log(console, LogLevel::Info,
        "training '" + cfg.name + "' from iteration " + std::to_string(trainer.state().iteration) + " to " +
            std::to_string(cfg.training.iterations) + ", output in " + dir.string());

    const auto& out = cfg.output;
    trainer.run([&](const Trainer& t, const StepMetrics& m) {
      metrics.row(m);
      metrics_file.flush();
      if (m.evaluation) {
        log(console, LogLevel::Info,
            "iter " + std::to_string(m.iteration) + "  d_loss " + std::to_string(m.discriminator_mean) + "  g_adv " +
                std::to_string(m.generator_adversarial) + "  avg acc " + percent(m.evaluation->average));
      } else if (m.iteration % 100 == 0) {
        log(console, LogLevel::Debug,
            "iter " + std::to_string(m.iteration) + "  d_loss " + std::to_string(m.discriminator_mean) + "  g_adv " +
                std::to_string(m.generator_adversarial));
      }
      const bool last = m.iteration == t.config().iterations;
      if (out.checkpoint_every > 0 && m.iteration % out.checkpoint_every == 0 && !last) {
        save_checkpoint(checkpoint_path(dir, m.iteration), cfg, t.state());
      }
      if (out.plot_every > 0 && m.iteration % out.plot_every == 0 && !last) {
        write_plots(cfg, t.state(), dir, out.plot_points_per_group);
      }
    });

    save_checkpoint(checkpoint_path(dir, trainer.state().iteration), cfg, trainer.state());
    save_checkpoint(dir / "checkpoints" / "final.ckpt", cfg, trainer.state());
    const auto plots = write_plots(cfg, trainer.state(), dir, out.plot_points_per_group);
    log(console, LogLevel::Info, "wrote " + plots.real.string() + " and " + plots.generated.string());
    console.out << "finished " << trainer.state().iteration << " iterations; final checkpoint "
                << (dir / "checkpoints" / "final.ckpt").string() << '\n';
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& options, Console& console) {
  return guarded(console, [&] {
    auto loaded = load_checkpoint(options.checkpoint);
    ExperimentConfig& cfg = loaded.config;
    if (options.seed) cfg.training.seed = *options.seed;
    const std::size_t samples = options.samples_per_region.value_or(cfg.evaluation.samples_per_region);
    if (samples == 0) throw UsageError("--samples-per-region must be at least 1");

    const std::size_t iteration = loaded.state.iteration;
    const Trainer trainer(cfg.training, cfg.data, std::move(loaded.state), cfg.evaluation);
    const RegionReport report = trainer.evaluate(samples, cfg.evaluation.use_ema);

    console.out << "checkpoint " << options.checkpoint.string() << " at iteration " << iteration << ", " << samples
                << " samples per region\n"
                << format_report_table(report);

    const fs::path dir = options.out ? *options.out : fs::path(cfg.output.directory);
    if (!dir.empty()) {
      fs::create_directories(dir);
      const fs::path csv = dir / ("eval_" + std::to_string(iteration) + ".csv");
      std::ofstream f(csv, std::ios::trunc);
      write_report_csv(f, report, cfg.data);
      if (!f) throw std::runtime_error("cannot write " + csv.string());
      log(console, LogLevel::Info, "wrote " + csv.string());
    }
    return kExitOk;
  });
}

int cmd_plot(const PlotOptions& options, Console& console) {
  return guarded(console, [&] {
    auto loaded = load_checkpoint(options.checkpoint);
    ExperimentConfig& cfg = loaded.config;
    if (options.seed) cfg.training.seed = *options.seed;
    const std::size_t points = options.points_per_group.value_or(cfg.output.plot_points_per_group);
    if (points == 0) throw UsageError("--points must be at least 1");
    const fs::path dir = require_directory(options.out, cfg.output.directory);
    const auto plots = write_plots(cfg, loaded.state, dir, points);
    console.out << plots.real.string() << '\n' << plots.generated.string() << '\n';
    return kExitOk;
  });
}

}  // namespace venngan::cli
