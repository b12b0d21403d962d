#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mvss/error.hpp"
#include "mvss/pipeline.hpp"

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mvss::Error("io", "cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvss: multi-view structured survey generation"};
  app.require_subcommand(1);

  std::string config_path;
  mvss::RunConfig config;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file; flags override it");
    cmd->add_option("--corpus", config.corpus_path, "line-delimited corpus file");
    cmd->add_option("--prompts", config.prompts_dir, "prompt template directory");
    cmd->add_option("--fixtures", config.fixtures_dir, "mock fixture directory");
    cmd->add_flag("--mock", config.mock, "use the fixture-backed mock provider");
    cmd->add_option("--seed", config.seed, "seed for generated artifact ids");
    cmd->add_option("--base-url", config.base_url, "live chat-completion endpoint");
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "build and persist the corpus index");
  std::string ingest_corpus;
  ingest->add_option("--corpus", ingest_corpus, "line-delimited corpus file")->required();

  // generate
  auto* generate = app.add_subcommand("generate", "run the full survey pipeline");
  add_common(generate);
  generate->add_option("--topic", config.topic, "survey topic");
  generate->add_option("--target-tokens", config.target_tokens,
                       "target length: 8000, 16000, 32000 or 64000");
  generate->add_option("--sections", config.sections, "section count");
  generate->add_option("--outline-candidates", config.outline_candidates,
                       "outline candidates to propose");
  generate->add_option("--refine-iters", config.refine_iters, "tree refinement rounds");
  generate->add_option("--out", config.out_dir, "output root directory");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score a generated artifact directory");
  add_common(evaluate);
  std::string artifact_dir;
  evaluate->add_option("--dir", artifact_dir, "artifact directory")->required();

  // inspect
  auto* inspect = app.add_subcommand("inspect", "pretty-print any artifact file");
  std::string inspect_path;
  inspect->add_option("path", inspect_path, "artifact file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      // Re-parse: config file first, then flags on top.
      mvss::RunConfig file_config = mvss::config_from_json(read_text_file(config_path));
      mvss::RunConfig flag_config = config;
      config = file_config;
      for (auto* cmd : {generate, evaluate}) {
        for (const auto& opt : cmd->get_options()) {
          if (opt->count() == 0) continue;
          const std::string name = opt->get_name();
          if (name == "--topic") config.topic = flag_config.topic;
          else if (name == "--corpus") config.corpus_path = flag_config.corpus_path;
          else if (name == "--target-tokens") config.target_tokens = flag_config.target_tokens;
          else if (name == "--sections") config.sections = flag_config.sections;
          else if (name == "--outline-candidates")
            config.outline_candidates = flag_config.outline_candidates;
          else if (name == "--refine-iters") config.refine_iters = flag_config.refine_iters;
          else if (name == "--out") config.out_dir = flag_config.out_dir;
          else if (name == "--prompts") config.prompts_dir = flag_config.prompts_dir;
          else if (name == "--fixtures") config.fixtures_dir = flag_config.fixtures_dir;
          else if (name == "--mock") config.mock = flag_config.mock;
          else if (name == "--seed") config.seed = flag_config.seed;
          else if (name == "--base-url") config.base_url = flag_config.base_url;
        }
      }
    }

    if (ingest->parsed()) {
      auto result = mvss::run_ingest(ingest_corpus);
      std::cout << "ingested " << result.documents << " documents; index at "
                << result.index_path << "\n";
    } else if (generate->parsed()) {
      auto result = mvss::run_generate(config);
      std::cout << "artifacts written to " << result.out_dir << "\n";
      std::cout << "alignment violations: " << result.alignment.violations.size()
                << " after " << result.alignment.pass_index << " repair pass(es)\n";
    } else if (evaluate->parsed()) {
      auto report = mvss::run_evaluate(artifact_dir, config);
      std::cout << mvss::evaluation_report_to_json(report);
    } else if (inspect->parsed()) {
      std::cout << mvss::inspect_artifact(inspect_path);
    }
  } catch (const mvss::Error& e) {
    std::cerr << "error [" << e.code() << "] " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error " << e.what() << "\n";
    return 1;
  }
  return 0;
}
