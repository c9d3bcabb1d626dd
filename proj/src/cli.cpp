#include "bodyshape/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bodyshape/bodymodel.hpp"
#include "bodyshape/datasetgen.hpp"
#include "bodyshape/errors.hpp"
#include "bodyshape/labeling.hpp"
#include "bodyshape/losseval.hpp"
#include "bodyshape/measure.hpp"
#include "bodyshape/service.hpp"
#include "bodyshape/shape_text.hpp"
#include "bodyshape/solver.hpp"
#include "bodyshape/textlang.hpp"
#include "bodyshape/version.hpp"

namespace bodyshape {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

struct Resources {
  std::string asset_path;
  std::string bins_path;
  std::string lexicon_path;
  int verbosity = 0;

  std::optional<BodyModelAsset> asset_storage;
  std::optional<BinTable> bins_storage;
  std::optional<Lexicon> lexicon_storage;

  std::string resolved(const std::string& flag, const char* env) const { return flag.empty() ? env_or(env, "") : flag; }

  const BodyModelAsset& asset() {
    const auto path = resolved(asset_path, "BODYSHAPE_ASSET");
    if (path.empty()) return builtin_asset();
    if (!asset_storage) asset_storage = load_asset(path);
    return *asset_storage;
  }

  const BinTable& bins(std::ostream& err) {
    const auto path = resolved(bins_path, "BODYSHAPE_BINS");
    if (!path.empty()) {
      if (!bins_storage) bins_storage = BinTable::load(path);
      return *bins_storage;
    }
    if (resolved(asset_path, "BODYSHAPE_ASSET").empty()) return default_bins();
    if (!bins_storage) {
      err << "no bins given for a custom asset; calibrating with defaults\n";
      bins_storage = calibrate_bins(asset(), kDefaultCalibrationSamples, kDefaultQuantiles, kDefaultCalibrationSeed);
    }
    return *bins_storage;
  }

  const Lexicon& lexicon() {
    const auto path = resolved(lexicon_path, "BODYSHAPE_LEXICON");
    if (path.empty()) return Lexicon::builtin();
    if (!lexicon_storage) lexicon_storage = Lexicon::load(path);
    return *lexicon_storage;
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << content;
  out.close();
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string labels_json(const LabelSet& labels) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (auto m : all_measurements()) doc[std::string(name(m))] = std::string(name(labels[m]));
  return doc.dump();
}

Service* g_service = nullptr;

extern "C" void handle_stop_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-driven parametric body shape toolkit"};
  app.name("bodyshape");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Resources res;
  app.add_option("--asset", res.asset_path, "Body model asset file (default: builtin; env BODYSHAPE_ASSET)");
  app.add_option("--bins", res.bins_path, "BinTable file (default: shipped; env BODYSHAPE_BINS)");
  app.add_option("--lexicon", res.lexicon_path, "Lexicon file (default: shipped; env BODYSHAPE_LEXICON)");
  app.add_flag("-v,--verbose", res.verbosity, "Progress detail on standard error");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate level thresholds from a sampled population");
  std::size_t cal_samples = kDefaultCalibrationSamples;
  std::uint64_t cal_seed = kDefaultCalibrationSeed;
  std::vector<double> cal_quantiles(kDefaultQuantiles.begin(), kDefaultQuantiles.end());
  std::string cal_out;
  calibrate->add_option("--samples", cal_samples, "Population size")->capture_default_str();
  calibrate->add_option("--seed", cal_seed, "Sampling seed")->capture_default_str();
  calibrate->add_option("--quantiles", cal_quantiles, "Four ascending quantiles")->delimiter(',')->expected(4);
  calibrate->add_option("--out", cal_out, "Output BinTable file")->required();

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "Write train.jsonl and eval.jsonl");
  std::size_t gen_count = 0;
  std::optional<std::size_t> gen_eval;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  std::string gen_url;
  int gen_timeout_ms = 10000;
  int gen_retries = 2;
  MentionPolicy policy;
  gen->add_option("--count", gen_count,
                  "Training entries; without --eval-count, the total split 90/10")
      ->required()->check(CLI::PositiveNumber);
  gen->add_option("--eval-count", gen_eval, "Evaluation entries");
  gen->add_option("--seed", gen_seed, "Run seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--paraphrase-url", gen_url, "Paraphrase endpoint (http://host:port/path)");
  gen->add_option("--paraphrase-timeout-ms", gen_timeout_ms, "Per-request timeout")->capture_default_str();
  gen->add_option("--paraphrase-retries", gen_retries, "Retries per entry")->capture_default_str();
  gen->add_option("--min-mentions", policy.min_attributes, "Fewest attributes per description")->capture_default_str();
  gen->add_option("--max-mentions", policy.max_attributes, "Most attributes per description")->capture_default_str();
  gen->add_option("--non-average-weight", policy.non_average_weight,
                  "Selection weight of non-average attributes")->capture_default_str();

  // measure
  auto* measure = app.add_subcommand("measure", "Measure the avatar for a beta vector");
  std::string measure_beta;
  std::string measure_beta_file;
  bool measure_labels = false;
  std::string measure_obj;
  measure->add_option("--beta", measure_beta, "Bracketed list of 10 values (default: zeros)");
  measure->add_option("--beta-file", measure_beta_file, "File holding the bracketed list");
  measure->add_flag("--labels", measure_labels, "Also print levels");
  measure->add_option("--obj", measure_obj, "Write the mesh as Wavefront text");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve beta for a text description");
  std::string solve_text;
  std::string solve_out;
  std::string solve_obj;
  SolverOptions solver;
  solve->add_option("text", solve_text, "Description")->required();
  solve->add_option("--out", solve_out, "Write beta (3-decimal JSON array)");
  solve->add_option("--obj", solve_obj, "Write the solved mesh as Wavefront text");
  solve->add_option("--seed", solver.seed, "Multi-start seed")->capture_default_str();
  solve->add_option("--starts", solver.starts, "Number of starts")->capture_default_str();
  solve->add_option("--max-iterations", solver.max_iterations, "Iterations per start")->capture_default_str();
  solve->add_option("--lambda", solver.regularization, "Weight of |beta|^2")->capture_default_str();

  // predict
  auto* predict = app.add_subcommand("predict", "Solver predictions for a dataset file, as evaluation input");
  std::string predict_data;
  std::string predict_out;
  SolverOptions predict_solver;
  predict->add_option("--data", predict_data, "Dataset JSONL")->required();
  predict->add_option("--out", predict_out, "Prediction JSONL")->required();
  predict->add_option("--seed", predict_solver.seed, "Multi-start seed")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "Score a prediction file");
  std::string eval_pred;
  std::string eval_report;
  EvaluationOptions eval_options;
  eval->add_option("--pred", eval_pred, "Prediction JSONL")->required();
  eval->add_option("--report", eval_report, "Report file (default: standard output)");
  eval->add_option("--temperature", eval_options.temperature, "Soft-bin temperature")
      ->capture_default_str()->check(CLI::PositiveNumber);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  ServiceConfig service_config;
  int budget_ms = 2000;
  serve->add_option("--host", service_config.host, "Listen address")->capture_default_str();
  serve->add_option("--port", service_config.port, "Listen port")->capture_default_str();
  serve->add_option("--seed", service_config.solver.seed, "Solver seed")->capture_default_str();
  serve->add_option("--budget-ms", budget_ms, "Per-request solve budget")->capture_default_str();
  serve->add_option("--cors-origin", service_config.cors_origin, "Allowed origin")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*calibrate) {
      if (cal_quantiles.size() != 4) throw Error(ErrorKind::Config, "need exactly four quantiles");
      const Quantiles q{cal_quantiles[0], cal_quantiles[1], cal_quantiles[2], cal_quantiles[3]};
      const auto table = calibrate_bins(res.asset(), cal_samples, q, cal_seed);
      table.save(cal_out);
      if (res.verbosity) err << "calibrated " << cal_samples << " samples -> " << cal_out << "\n";
    } else if (*gen) {
      std::size_t train = gen_count;
      std::size_t evaln = 0;
      if (gen_eval) {
        evaln = *gen_eval;
      } else {
        evaln = gen_count / 10;
        train = gen_count - evaln;
      }
      std::unique_ptr<HttpParaphraseProvider> provider;
      if (!gen_url.empty()) {
        HttpParaphraseConfig pc;
        pc.url = gen_url;
        pc.timeout = std::chrono::milliseconds(gen_timeout_ms);
        pc.retries = gen_retries;
        provider = std::make_unique<HttpParaphraseProvider>(pc);
      }
      const GenerationContext ctx{res.asset(), res.bins(err), res.lexicon()};
      const auto summary = write_dataset_split(ctx, train, evaln, gen_seed, provider.get(), policy, gen_out);
      err << "wrote " << summary.train_count << " train and " << summary.eval_count
          << " eval entries to " << gen_out;
      if (provider)
        err << " (paraphrased " << summary.stats.paraphrased << ", rejected "
            << summary.stats.paraphrase_rejected << ", unreachable "
            << summary.stats.paraphrase_unreachable << ")";
      err << "\n";
    } else if (*measure) {
      if (!measure_beta.empty() && !measure_beta_file.empty())
        throw Error(ErrorKind::Config, "--beta and --beta-file are exclusive");
      ShapeParams beta = ShapeParams::zeros();
      if (!measure_beta.empty()) beta = parse_shape_string(measure_beta);
      if (!measure_beta_file.empty()) beta = parse_shape_string(read_file(measure_beta_file));
      const auto& asset = res.asset();
      const auto mesh = evaluate_mesh(asset, beta);
      const auto values = measure_all(asset, mesh);
      out << measurement_report(values) << "\n";
      if (measure_labels) out << labels_json(assign_labels(res.bins(err), values)) << "\n";
      if (!measure_obj.empty()) write_file(measure_obj, to_obj(mesh));
    } else if (*solve) {
      const auto& lexicon = res.lexicon();
      const auto parsed = parse_description(lexicon, solve_text);
      for (const auto& o : parsed.overrides) err << "note: " << o << "\n";
      for (const auto& u : parsed.unmatched)
        if (res.verbosity) err << "unmatched: \"" << u.text << "\"\n";
      const auto& asset = res.asset();
      const auto result = solve_shape(asset, res.bins(err), parsed.constraints, solver);
      out << solve_report_json(result) << "\n";
      if (!solve_out.empty()) write_file(solve_out, format_shape_params(round_to_grid(result.beta)) + "\n");
      if (!solve_obj.empty()) write_file(solve_obj, to_obj(evaluate_mesh(asset, result.beta)));
      if (!result.all_satisfied())
        err << "satisfied " << result.satisfied << " of " << result.constraints.size() << " constraints\n";
    } else if (*predict) {
      const auto entries = read_jsonl(predict_data);
      const auto& asset = res.asset();
      const auto& bins = res.bins(err);
      const auto& lexicon = res.lexicon();
      std::ofstream file(predict_out, std::ios::binary);
      if (!file) throw Error(ErrorKind::Io, "cannot write " + predict_out);
      for (const auto& e : entries) {
        const auto parsed = parse_description(lexicon, e.description);
        const auto result = solve_shape(asset, bins, parsed.constraints, predict_solver);
        file << prediction_line({e.description, e.shape_params,
                                 format_shape_params(round_to_grid(result.beta)), std::nullopt})
             << "\n";
      }
      file.close();
      if (!file) throw Error(ErrorKind::Io, "write failed: " + predict_out);
    } else if (*eval) {
      const auto records = read_predictions(eval_pred);
      const auto report = evaluate_predictions(res.asset(), res.bins(err), res.lexicon(), records, eval_options);
      const auto text = report_json(report);
      if (eval_report.empty()) out << text;
      else write_file(eval_report, text);
    } else if (*serve) {
      service_config.budget = std::chrono::milliseconds(budget_ms);
      Service service(res.asset(), res.bins(err), res.lexicon(), service_config);
      const int port = service.bind();
      err << "listening on http://" << service_config.host << ":" << port << "\n";
      g_service = &service;
      std::signal(SIGINT, handle_stop_signal);
      std::signal(SIGTERM, handle_stop_signal);
      service.serve();
      g_service = nullptr;
    }
  } catch (const UnparseableDescription& e) {
    err << "error: " << e.what();
    for (const auto& u : e.unmatched()) err << " [" << u.text << "]";
    err << "\n";
    return kExitData;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace bodyshape
