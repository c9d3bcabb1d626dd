// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "bodyshape/datasetgen.hpp"
#include "bodyshape/errors.hpp"
#include "bodyshape/labeling.hpp"
#include "bodyshape/losseval.hpp"
#include "bodyshape/measure.hpp"
#include "bodyshape/sampling.hpp"
#include "bodyshape/service.hpp"
#include "bodyshape/shape_text.hpp"
#include "bodyshape/solver.hpp"
#include "bodyshape/textlang.hpp"
#include "support.hpp"

// After the Eigen-based headers: resolv.h defines a macro named _res.
#include <httplib.h>

using namespace bodyshape;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "failed: " << what << "; ";
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

bool is_length_like(Measurement m) {
  return m != Measurement::ArmsRelation && m != Measurement::ShouldersRelation && m != Measurement::Volume;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

const std::string kExampleShape1 = "[1.131, 1.928, -2.347, -0.793, 0.251, 0.58, 1.707, -2.888, -1.904, 2.772]";
const std::string kExampleShape2 = "[-1.016, -0.504, 0.948, 1.092, -0.514, -1.941, 0.415, 2.089, 0.509, 1.626]";

void linearity(Outcome& o) {
  const auto t0 = Clock::now();
  const auto& a = builtin_asset();
  const Vertices& T = a.template_vertices();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ua(-2.0, 2.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const BetaVector b1 = testsupport::random_beta(rng), b2 = testsupport::random_beta(rng);
    const double s = ua(rng);
    const Vertices lhs = evaluate_vertices(a, b1 + s * b2) - T;
    const Vertices rhs = (evaluate_vertices(a, b1) - T) + s * (evaluate_vertices(a, b2) - T);
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-9, "max deviation");
  o.require(secs < 5.0, "runtime");
  o.detail << "100 triples, max deviation " << worst << ", " << secs << " s";
}

void geometry(Outcome& o) {
  const double cube = mesh_volume(testsupport::unit_cube(3.0, -2.0, 5.0));
  o.require(std::abs(cube - 1.0) <= 1e-12, "unit cube");

  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double tet_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::array<Eigen::Vector3d, 4> p;
    for (auto& q : p) q = {u(rng), u(rng), u(rng)};
    Eigen::Matrix3d m;
    m.col(0) = p[1] - p[0];
    m.col(1) = p[2] - p[0];
    m.col(2) = p[3] - p[0];
    tet_err = std::max(tet_err, std::abs(mesh_volume(testsupport::tetrahedron(p)) - std::abs(m.determinant()) / 6.0));
  }
  o.require(tet_err <= 1e-9, "tetrahedron");

  const auto mesh = evaluate_mesh(builtin_asset(), ShapeParams::zeros());
  const double exact = mesh_volume(mesh);
  const double voxel = testsupport::voxel_volume(mesh, 0.002);
  const double err = rel(exact, voxel);
  o.require(err < 0.01, "voxel oracle");
  o.detail << "cube error " << std::abs(cube - 1.0) << ", tetrahedron error " << tet_err
           << ", builtin volume " << exact << " m^3 vs 2 mm voxels " << voxel << " (" << 100.0 * err << "%)";
}

void scaling(Outcome& o) {
  const auto& a = builtin_asset();
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> us(0.5, 2.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const double s = us(rng);
    const auto beta = testsupport::random_params(rng);
    const auto scaled = testsupport::scaled_asset(a, s);
    const auto m0 = measure_all(a, evaluate_mesh(a, beta));
    const auto m1 = measure_all(scaled, evaluate_mesh(scaled, beta));
    for (auto k : all_measurements()) {
      const double degree = k == Measurement::Volume ? 3.0 : is_length_like(k) ? 1.0 : 0.0;
      worst = std::max(worst, rel(m1[k], m0[k] * std::pow(s, degree)));
    }
  }
  o.require(worst <= 1e-9, "relative error");
  o.detail << "50 meshes, worst relative error " << worst;
}

void calibration(Outcome& o) {
  const auto& a = builtin_asset();
  const auto t0 = Clock::now();
  const auto bins = calibrate_bins(a, kDefaultCalibrationSamples, kDefaultQuantiles, kDefaultCalibrationSeed);
  const double secs = seconds_since(t0);
  o.require(secs < 120.0, "runtime");
  o.require(bins == default_bins(), "shipped table differs from a fresh calibration");

  // Fresh population from an unrelated stream, fixed before any run.
  const std::uint64_t fresh_seed = 0x0f5e5eedULL;
  const std::size_t fresh = 1000000;
  const MeasurementProbe probe(a);
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::array<std::array<std::size_t, kNumLevels>, kNumMeasurements>> counts(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < fresh; i += workers) {
        const auto m = probe.measure(sample_shape(fresh_seed, i).as_vector());
        for (auto k : all_measurements()) ++counts[w][index(k)][static_cast<std::size_t>(rank(bins.classify(k, m[k])))];
      }
    });
  for (auto& t : pool) t.join();

  const std::array<double, kNumLevels> expected = {0.05, 0.25, 0.40, 0.25, 0.05};
  double worst = 0.0;
  for (auto k : all_measurements())
    for (std::size_t l = 0; l < kNumLevels; ++l) {
      std::size_t c = 0;
      for (const auto& part : counts) c += part[index(k)][l];
      worst = std::max(worst, std::abs(static_cast<double>(c) / static_cast<double>(fresh) - expected[l]));
    }
  o.require(worst * 100.0 <= 0.5, "occupancy");
  o.detail << "100000-sample calibration in " << secs << " s, worst occupancy deviation "
           << worst * 100.0 << " pp over " << fresh << " fresh samples";
}

void text_round_trip(Outcome& o) {
  const auto& lex = Lexicon::builtin();
  std::mt19937_64 rng(104);
  std::uniform_int_distribution<int> ul(0, 4);
  std::vector<Measurement> all(all_measurements().begin(), all_measurements().end());
  std::size_t ok = 0, unparseable = 0;
  for (int t = 0; t < 1000; ++t) {
    LabelSet labels;
    for (auto& v : labels.levels) v = static_cast<Level>(ul(rng));
    std::shuffle(all.begin(), all.end(), rng);
    const std::size_t k = 1 + rng() % kNumMeasurements;
    const std::vector<Measurement> mentioned(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    const auto text = generate_description(lex, labels, mentioned, rng());
    ConstraintSet want;
    for (auto m : mentioned) want.set({m, labels[m]});
    try {
      const auto r = parse_description(lex, text);
      if (r.constraints.same_as(want) && r.unmatched.empty()) ++ok;
      else o.detail << "mismatch " << quote(text) << "; ";
    } catch (const UnparseableDescription&) {
      ++unparseable;
    }
  }
  std::size_t forms = 0, form_ok = 0;
  for (auto m : all_measurements())
    for (auto l : kAllLevels) {
      ConstraintSet want;
      want.set({m, l});
      const auto& sf = lex.forms(m, l);
      std::vector<std::string> texts;
      for (const auto& p : sf.phrases) texts.push_back("A person with " + p + ".");
      for (const auto& adj : sf.adjectives) texts.push_back("A " + adj + " person.");
      for (const auto& text : texts) {
        ++forms;
        try {
          if (parse_description(lex, text).constraints.same_as(want)) ++form_ok;
          else o.detail << "form " << quote(text) << "; ";
        } catch (const UnparseableDescription&) {
          o.detail << "form " << quote(text) << " unparseable; ";
        }
      }
    }
  for (const auto& [phrase, attrs] : lex.idioms()) {
    ++forms;
    ConstraintSet want;
    for (const auto& at : attrs) want.set({at.measurement, at.level});
    try {
      if (parse_description(lex, phrase).constraints.same_as(want)) ++form_ok;
    } catch (const UnparseableDescription&) {
    }
  }
  o.require(ok == 1000, "generated descriptions");
  o.require(unparseable == 0, "unparseable generator output");
  o.require(form_ok == forms, "surface forms");
  o.detail << ok << "/1000 generated descriptions, " << unparseable << " unparseable, " << form_ok << "/"
           << forms << " surface forms";
}

void dataset(Outcome& o, const std::string& cli, const std::filesystem::path& dir) {
  const auto t0 = Clock::now();
  const std::string cmd = quote(cli) + " gen-dataset --count 18000 --eval-count 2000 --out " + quote(dir.string());
  const int rc = std::system(cmd.c_str());
  const double secs = seconds_since(t0);
  o.require(rc == 0, "gen-dataset exit status");
  o.require(secs < 600.0, "runtime");
  if (rc != 0) return;

  const auto train = read_jsonl(dir / "train.jsonl");
  const auto eval = read_jsonl(dir / "eval.jsonl");
  o.require(train.size() == 18000 && eval.size() == 2000, "split sizes");

  const auto& a = builtin_asset();
  const auto& lex = Lexicon::builtin();
  std::size_t consistent = 0;
  for (const auto* part : {&train, &eval})
    for (const auto& e : *part) {
      bool good = round_to_grid(e.shape_params) == e.shape_params;
      for (double v : e.shape_params.values()) good = good && std::abs(v) <= kSamplingBound;
      const auto labels = assign_labels(default_bins(), measure_all(a, evaluate_mesh(a, e.shape_params)));
      const auto parsed = parse_description(lex, e.description);
      good = good && parsed.unmatched.empty() && parsed.constraints.size() >= 2 && parsed.constraints.size() <= 5;
      for (const auto& c : parsed.constraints.items) good = good && labels[c.measurement] == c.level;
      if (good) ++consistent;
    }
  o.require(consistent == train.size() + eval.size(), "self-consistency");

  const bool golden =
      format_shape_params(parse_shape_string(kExampleShape1)) == kExampleShape1 &&
      format_shape_params(parse_shape_string(kExampleShape2)) == kExampleShape2 &&
      to_jsonl_line({"Person with an average height, tall neck, long arms, and broad shoulders.",
                     parse_shape_string(kExampleShape1)}) ==
          "{\"description\": \"Person with an average height, tall neck, long arms, and broad shoulders.\", "
          "\"shape_params\": \"" + kExampleShape1 + "\"}";
  o.require(golden, "reference serialization");
  o.detail << train.size() << " + " << eval.size() << " entries in " << secs << " s, " << consistent
           << " self-consistent, serialization golden " << (golden ? "matches" : "differs");
}

void inverse_fidelity(Outcome& o) {
  const auto t0 = Clock::now();
  const auto& a = builtin_asset();
  const auto& bins = default_bins();
  const auto& lex = Lexicon::builtin();
  // The first 500 entries of the evaluation split written by gen-dataset --seed 1.
  std::vector<DatasetEntry> entries;
  generate_dataset({a, bins, lex}, 500, 1, nullptr, {}, [&](const DatasetEntry& e) { entries.push_back(e); }, 18000);
  std::vector<PredictionRecord> records;
  for (const auto& e : entries) {
    const auto result = solve_shape(a, bins, parse_description(lex, e.description).constraints);
    records.push_back({e.description, e.shape_params, format_shape_params(round_to_grid(result.beta)), std::nullopt});
  }
  const auto report = evaluate_predictions(a, bins, lex, records);
  const double secs = seconds_since(t0);

  double worst = 1.0, worst_average = 1.0;
  std::size_t populated = 0, hits = 0, total = 0;
  for (auto m : all_measurements())
    for (auto l : kAllLevels) {
      const auto& c = report.cell(m, l);
      if (c.total() == 0) continue;
      ++populated;
      hits += c.hits;
      total += c.total();
      worst = std::min(worst, c.accuracy());
      if (l == Level::Average) worst_average = std::min(worst_average, c.accuracy());
    }
  o.require(worst >= 0.90, "per-cell accuracy");
  o.require(worst_average >= 0.97, "average-cell accuracy");
  o.require(secs < 300.0, "runtime");
  o.detail << "500 cases, " << populated << " populated cells, worst cell " << 100.0 * worst
           << "%, worst average cell " << 100.0 * worst_average << "%, overall "
           << 100.0 * static_cast<double>(hits) / static_cast<double>(std::max<std::size_t>(total, 1)) << "%, "
           << report.opposite_extreme << " opposite extremes, " << secs << " s";
}

void loss_suite(Outcome& o) {
  const auto w = BetaWeights::from_asset(builtin_asset());
  std::mt19937_64 rng(105);
  std::size_t metric_violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto x = testsupport::random_params(rng), y = testsupport::random_params(rng),
               z = testsupport::random_params(rng);
    const double xy = loss_shape(x, y, w);
    const bool ok = xy > 0.0 && xy == loss_shape(y, x, w) && loss_shape(x, x, w) == 0.0 &&
                    loss_shape(x, z, w) <= xy + loss_shape(y, z, w) + 1e-12;
    if (!ok) ++metric_violations;
  }
  o.require(metric_violations == 0, "metric axioms");

  double llm_err = 0.0;
  llm_err = std::max(llm_err, std::abs(*loss_llm(std::vector<double>{1.0, 1.0, 1.0})));
  llm_err = std::max(llm_err, std::abs(*loss_llm(std::vector<double>(5, std::exp(-1.0))) - 1.0));
  llm_err = std::max(llm_err, std::abs(*loss_llm(std::vector<double>{0.5, 0.25}) - std::log(8.0) / 2.0));
  llm_err = std::max(llm_err, std::abs(*loss_llm(std::vector<double>{0.1}) - std::log(10.0)));
  o.require(llm_err <= 1e-12, "loss_llm analytic");

  const MeasurementProbe probe(builtin_asset());
  std::size_t kl_violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto p = probe.measure(testsupport::random_beta(rng));
    const auto q = probe.measure(testsupport::random_beta(rng));
    const auto pq = measurement_loss_terms(p, q, default_bins());
    const auto qq = measurement_loss_terms(q, q, default_bins());
    if (!(pq.kl > 0.0 && qq.kl == 0.0 && p != q)) ++kl_violations;
  }
  o.require(kl_violations == 0, "KL non-negativity and zero iff equal");

  std::size_t sum_violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto x = testsupport::random_params(rng), y = testsupport::random_params(rng);
    const auto llm = loss_llm(std::vector<double>{0.2 + 0.8 * std::generate_canonical<double, 53>(rng), 0.9});
    const double shape = loss_shape(x, y, w);
    const double meas = loss_measurements(builtin_asset(), default_bins(), x, y);
    const auto terms = combine_losses(llm, shape, meas);
    if (terms.total != *llm + shape + meas) ++sum_violations;
  }
  o.require(sum_violations == 0, "total equals the sum of terms");
  o.detail << "metric violations " << metric_violations << "/1000, loss_llm max error " << llm_err
           << ", KL violations " << kl_violations << "/1000, sum violations " << sum_violations << "/1000";
}

void malformed(Outcome& o) {
  const auto& a = builtin_asset();
  const auto& lex = Lexicon::builtin();
  std::vector<PredictionRecord> records;
  generate_dataset({a, default_bins(), lex}, 90, 106, nullptr, {}, [&](const DatasetEntry& e) {
    records.push_back({e.description, e.shape_params, format_shape_params(e.shape_params), std::nullopt});
  });
  std::size_t mentions = 0, mentions_good = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto n = parse_description(lex, records[i].description).constraints.size();
    mentions += n;
    if (i % 3 == 0) records[i].predicted = "Sorry, I cannot produce that.";
    else if (i % 3 == 1) records[i].predicted = "[0.1, 0.2, 0.3]";
    else mentions_good += n;
  }
  // One opposite-extreme pair: very tall described, very short produced.
  std::vector<double> low(10, 0.0);
  low[0] = -3.0;
  low[2] = -3.0;
  const ShapeParams short_beta{std::span<const double>(low)};
  const auto short_labels = assign_labels(default_bins(), measure_all(a, evaluate_mesh(a, short_beta)));
  records.push_back({"A very tall person.", ShapeParams::zeros(), format_shape_params(short_beta), std::nullopt});
  mentions += 1;
  mentions_good += 1;

  const auto r = evaluate_predictions(a, default_bins(), lex, records);
  std::size_t cells = 0, hits = 0, misses = 0, bad = 0;
  for (auto m : all_measurements())
    for (auto l : kAllLevels) {
      const auto& c = r.cell(m, l);
      cells += c.total();
      hits += c.hits;
      misses += c.misses;
      bad += c.malformed;
    }
  o.require(r.records == 91 && r.malformed == 30 && r.arity_errors == 30 && r.wellformed == 31, "record counts");
  o.require(cells == mentions && hits + misses + bad == mentions, "cell accounting");
  o.require(bad == mentions - mentions_good && hits == mentions_good - 1 && misses == 1, "hit/miss/malformed split");
  const std::size_t opposite = short_labels[Measurement::Height] == Level::VeryLow ? 1 : 0;
  o.require(opposite == 1 && r.opposite_extreme == 1, "opposite-extreme counter");
  o.detail << r.records << " records: " << r.malformed << " malformed, " << r.arity_errors << " arity errors, "
           << hits << " hits + " << misses << " misses + " << bad << " malformed = " << mentions
           << " mentions, opposite extremes " << r.opposite_extreme;
}

void parity(Outcome& o, const std::string& cli, const std::filesystem::path& dir) {
  std::string file;
  std::size_t i = 0;
  generate_dataset({builtin_asset(), default_bins(), Lexicon::builtin()}, 120, 107, nullptr, {},
                   [&](const DatasetEntry& e) {
                     std::string predicted = format_shape_params(e.shape_params);
                     if (i % 5 == 3) predicted = "[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]";
                     if (i % 7 == 6) predicted = "no idea";
                     ++i;
                     file += prediction_line({e.description, e.shape_params, predicted, std::vector<double>{0.7, 0.95}}) + "\n";
                   });
  const auto pred = dir / "pred.jsonl";
  const auto report = dir / "report.json";
  std::ofstream(pred, std::ios::binary) << file;
  const int rc = std::system((quote(cli) + " eval --pred " + quote(pred.string()) + " --report " + quote(report.string())).c_str());
  o.require(rc == 0, "cli exit status");

  ServiceConfig cfg;
  cfg.port = 0;
  Service service(builtin_asset(), default_bins(), Lexicon::builtin(), cfg);
  const int port = service.bind();
  std::thread server([&] { service.serve(); });
  service.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);
  const auto res = client.Post("/v1/evaluate", file, "application/x-ndjson");
  service.stop();
  server.join();
  o.require(res && res->status == 200, "service status");
  const std::string from_cli = slurp(report);
  const bool same = res && res->body == from_cli;
  o.require(same, "reports differ");
  o.detail << "120 records, cli report " << from_cli.size() << " bytes, service report "
           << (res ? res->body.size() : 0) << " bytes, " << (same ? "identical" : "different");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string cli;
  app.add_option("--cli", cli, "Path to the bodyshape executable")->required();
  CLI11_PARSE(app, argc, argv);

  const auto dir = testsupport::temp_dir("acceptance");
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"Shape-space linearity", linearity},
      {"Geometry oracles", geometry},
      {"Scaling laws", scaling},
      {"Calibration soundness", calibration},
      {"Text round trip", text_round_trip},
      {"Dataset reproduction", [&](Outcome& o) { dataset(o, cli, dir / "dataset"); }},
      {"Inverse-solve fidelity", inverse_fidelity},
      {"Loss-term suite", loss_suite},
      {"Malformed-output handling", malformed},
      {"CLI/service parity", [&](Outcome& o) { parity(o, cli, dir); }},
  };
  int failures = 0;
  for (const auto& [label, run] : criteria) {
    Outcome o;
    try {
      run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << label << ": " << o.detail.str() << std::endl;
  }
  std::filesystem::remove_all(dir);
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
