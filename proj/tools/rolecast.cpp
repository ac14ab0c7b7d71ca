#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rolecast/cli/commands.hpp"

namespace {

using namespace rolecast;

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::parse: return 2;
    case ErrorCategory::config: return 3;
    case ErrorCategory::io: return 4;
    case ErrorCategory::numeric: return 5;
    case ErrorCategory::shape: return 6;
    case ErrorCategory::usage: return 7;
    case ErrorCategory::internal: return 8;
  }
  return 8;
}

void print_cv_table(const nlohmann::json& report) {
  const harness::ReportRow row = harness::report_row_from_json(report);
  std::cout << harness::render_table(std::span(&row, 1));
}

// Re-executes a run from the arguments recorded in its manifest.
int rerun(const std::string& manifest_path, const std::optional<std::string>& out_override) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(cli::read_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::parse, manifest_path + ": " + e.what());
  }
  require(m.contains("manifest_version") && m.contains("command"), ErrorCategory::parse,
          manifest_path + ": not a run manifest");
  const auto& args = m.at("arguments");
  const std::string command = m.at("command").get<std::string>();
  const std::string out = out_override.value_or(args.at("out").get<std::string>());
  if (command == "generate") {
    std::cout << cli::cmd_generate({manifest_path, std::nullopt, out}).dump() << "\n";
  } else if (command == "ingest-validate") {
    std::cout << cli::cmd_ingest_validate({args.at("data"), out}).dump() << "\n";
  } else if (command == "train") {
    std::cout << cli::cmd_train({args.at("data"), manifest_path, std::nullopt, out, args.at("test_group").get<std::string>()}).dump() << "\n";
  } else if (command == "cv") {
    // Single-threaded replay keeps outputs bit-identical.
    print_cv_table(cli::cmd_cv({args.at("data"), manifest_path, std::nullopt, out, 1}));
  } else if (command == "gradcam") {
    cli::GradcamOptions o{args.at("checkpoint"), args.at("data"), out, args.at("select"), args.at("class"),
                          args.at("csv_only")};
    std::cout << cli::cmd_gradcam(o).dump() << "\n";
  } else if (command == "report") {
    std::cout << cli::cmd_report({args.at("reports"), out});
  } else {
    fail(ErrorCategory::parse, manifest_path + ": unknown command '" + command + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rolecast: collaboration-quality classification from role annotations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cli::kVersion));

  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out, data, checkpoint, manifest;
  std::optional<std::string> test_group, out_override;
  int folds_parallel = 1;
  std::vector<std::string> classes, select, reports;
  bool csv_only = false;

  auto* gen = app.add_subcommand("generate", "write a synthetic annotation corpus");
  gen->add_option("--config", config, "JSON config or run manifest")->check(CLI::ExistingFile);
  gen->add_option("--seed", seed, "override generator seed");
  gen->add_option("--out", out, "output directory")->required();

  auto* val = app.add_subcommand("ingest-validate", "parse a corpus and report its statistics");
  val->add_option("--data", data, "directory with roles.csv and labels.csv")->required();
  val->add_option("--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train one model with one held-out group");
  train->add_option("--data", data, "corpus directory")->required();
  train->add_option("--config", config, "JSON config or run manifest")->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "override training seed");
  train->add_option("--out", out, "output directory")->required();
  train->add_option("--test-group", test_group, "held-out group (default: first fold)");

  auto* cv = app.add_subcommand("cv", "leave-one-group-out cross-validation");
  cv->add_option("--data", data, "corpus directory")->required();
  cv->add_option("--config", config, "JSON config or run manifest")->check(CLI::ExistingFile);
  cv->add_option("--seed", seed, "override training seed");
  cv->add_option("--out", out, "output directory")->required();
  cv->add_option("--folds-parallel", folds_parallel, "folds trained concurrently")->check(CLI::PositiveNumber);

  auto* cam = app.add_subcommand("gradcam", "Grad-CAM maps for a temporal checkpoint");
  cam->add_option("--checkpoint", checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
  cam->add_option("--data", data, "corpus directory")->required();
  cam->add_option("--out", out, "output directory")->required();
  cam->add_option("--select", select, "group:task:coder (repeatable; default: held-out group)");
  cam->add_option("--class", classes, "target class token(s) or 'all' (default: predicted)")->delimiter(',');
  cam->add_flag("--csv-only", csv_only, "skip SVG output");

  auto* rep = app.add_subcommand("report", "aggregate table across CV reports");
  rep->add_option("reports", reports, "cv_report.json files")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", out, "output directory")->required();

  auto* re = app.add_subcommand("rerun", "repeat a run from its manifest");
  re->add_option("manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  re->add_option("--out", out_override, "output directory (default: the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorCategory::usage);
  }

  try {
    if (gen->parsed()) {
      std::cout << cli::cmd_generate({config, seed, out}).dump() << "\n";
    } else if (val->parsed()) {
      std::cout << cli::cmd_ingest_validate({data, out}).dump(2) << "\n";
    } else if (train->parsed()) {
      std::cout << cli::cmd_train({data, config, seed, out, test_group}).dump() << "\n";
    } else if (cv->parsed()) {
      print_cv_table(cli::cmd_cv({data, config, seed, out, folds_parallel}));
    } else if (cam->parsed()) {
      std::cout << cli::cmd_gradcam({checkpoint, data, out, select, classes, csv_only}).dump() << "\n";
    } else if (rep->parsed()) {
      std::cout << cli::cmd_report({reports, out});
    } else if (re->parsed()) {
      return rerun(manifest, out_override);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", std::string(to_string(e.category())).c_str(), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return exit_code(ErrorCategory::internal);
  }
  return 0;
}
