#include <iostream>

#include "CLI11.hpp"
#include "venngan/cli.hpp"

int main(int argc, char** argv) {
  using namespace venngan::cli;

  CLI::App app{"Venn GAN experiments: train, evaluate and plot"};
  app.require_subcommand(1);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train from a config, or continue from a checkpoint");
  train_cmd->add_option("--config", train.config, "Experiment config (JSON)");
  train_cmd->add_option("--resume", train.resume, "Checkpoint to continue from");
  train_cmd->add_option("--out", train.out, "Output directory (overrides output.directory)");
  train_cmd->add_option("--seed", train.seed, "Seed (overrides the config)");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Per-region oracle accuracy of a checkpoint");
  eval_cmd->add_option("checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--samples-per-region", eval.samples_per_region, "Samples drawn from each region generator");
  eval_cmd->add_option("--out", eval.out, "Directory for the report CSV");
  eval_cmd->add_option("--seed", eval.seed, "Seed for the evaluation stream");

  PlotOptions plot;
  auto* plot_cmd = app.add_subcommand("plot", "Scatter plots of real and generated samples");
  plot_cmd->add_option("checkpoint", plot.checkpoint, "Checkpoint file")->required();
  plot_cmd->add_option("--out", plot.out, "Output directory for the SVG files");
  plot_cmd->add_option("--points", plot.points_per_group, "Points per set and per region");
  plot_cmd->add_option("--seed", plot.seed, "Seed for the plotting stream");

  CLI11_PARSE(app, argc, argv);

  Console console{std::cout, std::cerr, log_level_from_env()};
  if (*train_cmd) return cmd_train(train, console);
  if (*eval_cmd) return cmd_eval(eval, console);
  return cmd_plot(plot, console);
}
