#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "noisecam/harness.hpp"
#include "noisecam/image_io.hpp"

namespace fs = std::filesystem;
using namespace ncam;

namespace {

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kNumeric = 4 };

struct Options {
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  std::string config;
  std::vector<std::string> sets;

  std::string data, test_data, model, corpus, input, method = "both", probe_layer;
  int per_class = -1, test_per_class = -1, seeds = -1, panels = 4;
  double radius = -1.0;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.per_class > 0) cfg.data.train_per_class = o.per_class;
  if (o.test_per_class >= 0) cfg.data.test_per_class = o.test_per_class;
  if (o.seeds > 0) cfg.corpus.max_seeds = o.seeds;
  if (o.radius > 0.0) cfg.blur_radius = o.radius;
  cfg.validate();
  return cfg;
}

fs::path or_default(const std::string& given, const fs::path& fallback) { return given.empty() ? fallback : fs::path(given); }

std::vector<Method> methods(const std::string& name) {
  if (name == "both") return {Method::NoiseCam, Method::Deviation};
  return {parse_method(name)};
}

void apply_probe_layer(RunConfig& cfg, const Options& o, Method m) {
  if (o.probe_layer.empty()) return;
  (m == Method::NoiseCam ? cfg.noisecam.probe_layer : cfg.deviation.probe_layer) = o.probe_layer;
}

std::vector<fs::path> cmd_gen_data(const RunConfig& cfg, const fs::path& out) {
  const fs::path dir = out / "data";
  auto files = save_dataset(gen_dataset(cfg.data.train_per_class, derive_seed(cfg.seed, 1)), dir / "train");
  if (cfg.data.test_per_class > 0) {
    auto more = save_dataset(gen_dataset(cfg.data.test_per_class, derive_seed(cfg.seed, 2)), dir / "test");
    files.insert(files.end(), more.begin(), more.end());
  }
  std::printf("wrote %d train and %d test images per class to %s\n", cfg.data.train_per_class,
              cfg.data.test_per_class, dir.string().c_str());
  return files;
}

std::vector<fs::path> cmd_train(const Options& o, const RunConfig& cfg, const fs::path& out) {
  const LabeledImages train_set = load_dataset(or_default(o.data, out / "data" / "train"));
  const auto result = train(build_default_model(int(train_set.class_names.size()), cfg.train.seed), train_set,
                            cfg.train);
  fs::create_directories(out);
  const fs::path weights = out / "model.nwv";
  save_weights(result.model, weights);

  const fs::path history = out / "train_history.csv";
  std::ofstream h(history);
  h << "epoch,loss,accuracy\n";
  for (const auto& e : result.history) h << e.epoch << ',' << e.loss << ',' << e.accuracy << '\n';
  h.close();

  const Evaluation tr = evaluate(result.model, train_set);
  std::printf("train accuracy %.4f\n", tr.accuracy);
  std::vector<fs::path> files{weights, history};
  const fs::path test_dir = or_default(o.test_data, out / "data" / "test");
  if (fs::exists(test_dir)) {
    const Evaluation te = evaluate(result.model, load_dataset(test_dir));
    std::printf("held-out accuracy %.4f\n", te.accuracy);
  }
  return files;
}

std::vector<fs::path> cmd_attack(const Options& o, const RunConfig& cfg, const fs::path& out) {
  const ModelWeights model = load_weights(or_default(o.model, out / "model.nwv"));
  const LabeledImages data = load_dataset(or_default(o.data, out / "data" / "test"));
  const auto idx = correctly_classified(model, data, std::size_t(cfg.corpus.max_seeds));
  if (idx.empty()) throw DataError("model classifies no seed image correctly");
  const Corpus corpus = build_attack_corpus(model, data, idx, cfg.attack, derive_seed(cfg.seed, 3));
  const auto files = save_corpus(corpus, or_default(o.corpus, out / "corpus"));
  std::printf("attacked %zu seeds, %zu succeeded (yield %.3f)\n", corpus.attempts.size(), corpus.entries.size(),
              corpus.yield());
  return files;
}

std::vector<fs::path> cmd_detect(const Options& o, RunConfig cfg, const fs::path& out) {
  const Method m = parse_method(o.method);
  apply_probe_layer(cfg, o, m);
  const ModelWeights model = load_weights(or_default(o.model, out / "model.nwv"));
  cfg.validate_layers(model);
  if (o.input.empty()) throw ConfigError("detect needs --input");
  const fs::path in(o.input);
  const Tensor image = in.extension() == ".ppm" ? read_ppm(in) : load_ntf(in);
  const DetectionReport r = m == Method::NoiseCam ? detect_by_noisecam(model, image, cfg.noisecam)
                                                  : detect_by_deviation(model, image, cfg.deviation,
                                                                        derive_seed(cfg.seed, 4));
  fs::create_directories(out);
  const fs::path report = out / ("detect_" + std::string(to_string(m)) + ".csv");
  std::ofstream f(report);
  f << "key,value\nverdict," << to_string(r.verdict) << "\nmethod," << r.method << "\ncategory," << r.category << '\n';
  if (r.similarity) f << "similarity," << *r.similarity << "\nthreshold," << *r.threshold << '\n';
  if (r.cluster_count) f << "clusters," << *r.cluster_count << '\n';
  f.close();
  std::printf("%s (category %d", std::string(to_string(r.verdict)).c_str(), r.category);
  if (r.cluster_count) std::printf(", %d clusters", *r.cluster_count);
  if (r.similarity) std::printf(", similarity %.4f vs threshold %.4f", *r.similarity, *r.threshold);
  std::printf(")\n");
  return {report};
}

std::vector<fs::path> cmd_eval(const Options& o, RunConfig cfg, const fs::path& out) {
  const ModelWeights model = load_weights(or_default(o.model, out / "model.nwv"));
  const Corpus corpus = load_corpus(or_default(o.corpus, out / "corpus"));
  std::vector<fs::path> files;
  for (Method m : methods(o.method)) {
    apply_probe_layer(cfg, o, m);
    const EvalReport r = run_eval(model, corpus, m, cfg, derive_seed(cfg.seed, 5));
    files.push_back(out / ("metrics_" + std::string(to_string(m)) + ".csv"));
    write_metrics_csv(r, files.back());
    files.push_back(out / ("verdicts_" + std::string(to_string(m)) + ".csv"));
    write_verdicts_csv(r, files.back());
    const Metrics& all = r.group("all");
    std::printf("%-9s accuracy %.4f tpr %.4f tnr %.4f\n", std::string(to_string(m)).c_str(), all.accuracy.value_or(0),
                all.tpr.value_or(0), all.tnr.value_or(0));
  }
  return files;
}

std::vector<fs::path> cmd_figures(const Options& o, RunConfig cfg, const fs::path& out) {
  const ModelWeights model = load_weights(or_default(o.model, out / "model.nwv"));
  const Corpus corpus = load_corpus(or_default(o.corpus, out / "corpus"));
  if (!o.probe_layer.empty()) cfg.noisecam.probe_layer = o.probe_layer;
  std::vector<EvalReport> reports;
  for (Method m : {Method::NoiseCam, Method::Deviation})
    reports.push_back(run_eval(model, corpus, m, cfg, derive_seed(cfg.seed, 5)));
  return export_figures(model, corpus, reports, cfg, out / "figures", {std::size_t(std::max(o.panels, 0))});
}

std::vector<fs::path> cmd_blur(const Options& o, const RunConfig& cfg, const fs::path& out) {
  const ModelWeights model = load_weights(or_default(o.model, out / "model.nwv"));
  const Corpus corpus = load_corpus(or_default(o.corpus, out / "corpus"));
  const auto rows = blur_baseline(model, corpus, cfg.blur_radius);
  const fs::path path = out / "blur_baseline.csv";
  write_blur_csv(rows, path);
  for (const auto& r : rows)
    if (!r.strength)
      std::printf("%-11s accuracy %.4f -> %.4f\n", std::string(to_string(r.kind)).c_str(), r.accuracy,
                  r.blurred_accuracy);
  return {path};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial example detection with NoiseCAM and behavior deviation"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Master seed")->each([&](const std::string&) { o.seed = seed; });
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--config", o.config, "Config file of key = value lines")->check(CLI::ExistingFile);
  app.add_option("--set", o.sets, "Override one config key (key=value)");

  auto* gen = app.add_subcommand("gen-data", "Render the procedural shapes dataset");
  gen->add_option("--per-class", o.per_class, "Training images per class");
  gen->add_option("--test-per-class", o.test_per_class, "Held-out images per class");

  auto* tr = app.add_subcommand("train", "Train the classifier");
  tr->add_option("--data", o.data, "Training set directory");
  tr->add_option("--test-data", o.test_data, "Held-out set directory");

  auto* at = app.add_subcommand("attack", "Build the adversarial/Gaussian corpus");
  at->add_option("--model", o.model, "Weights file");
  at->add_option("--data", o.data, "Seed image directory");
  at->add_option("--corpus", o.corpus, "Corpus output directory");
  at->add_option("--seeds", o.seeds, "Correctly classified seeds to attack");

  auto* de = app.add_subcommand("detect", "Classify one image as adversarial or benign");
  de->add_option("--method", o.method, "noisecam or deviation")->required()->check(CLI::IsMember({"noisecam", "deviation"}));
  de->add_option("--input", o.input, "Image (.ntf HxWx3 or .ppm)")->required()->check(CLI::ExistingFile);
  de->add_option("--model", o.model, "Weights file");
  de->add_option("--probe-layer", o.probe_layer, "Conv layer to probe");

  auto* ev = app.add_subcommand("eval", "Run detectors over the corpus");
  ev->add_option("--method", o.method, "noisecam, deviation or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"noisecam", "deviation", "both"}));
  ev->add_option("--model", o.model, "Weights file");
  ev->add_option("--corpus", o.corpus, "Corpus directory");
  ev->add_option("--probe-layer", o.probe_layer, "Conv layer to probe");

  auto* fi = app.add_subcommand("figures", "Export figure tables and panels");
  fi->add_option("--model", o.model, "Weights file");
  fi->add_option("--corpus", o.corpus, "Corpus directory");
  fi->add_option("--panels", o.panels, "Samples with image panels")->capture_default_str();
  fi->add_option("--probe-layer", o.probe_layer, "NoiseCAM conv layer");

  auto* bl = app.add_subcommand("blur-baseline", "Accuracy of blurred corpus images");
  bl->add_option("--model", o.model, "Weights file");
  bl->add_option("--corpus", o.corpus, "Corpus directory");
  bl->add_option("--radius", o.radius, "Blur radius (Gaussian sigma)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const RunConfig cfg = resolve_config(o);
    const fs::path out(o.out);
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    fs::remove(out / ("manifest_" + name + ".json"));
    std::vector<fs::path> files;
    if (name == "gen-data") files = cmd_gen_data(cfg, out);
    else if (name == "train") files = cmd_train(o, cfg, out);
    else if (name == "attack") files = cmd_attack(o, cfg, out);
    else if (name == "detect") files = cmd_detect(o, cfg, out);
    else if (name == "eval") files = cmd_eval(o, cfg, out);
    else if (name == "figures") files = cmd_figures(o, cfg, out);
    else files = cmd_blur(o, cfg, out);
    const fs::path manifest = write_manifest({name, cfg, files}, out);
    std::printf("manifest %s\n", manifest.string().c_str());
    return kOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumeric;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInternal;
  }
}
