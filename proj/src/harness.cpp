#include "noisecam/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iterator>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "noisecam/image_io.hpp"
#include "noisecam/stats.hpp"

namespace fs = std::filesystem;

namespace ncam {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string cell(const std::optional<double>& v) { return v ? num(*v) : std::string(); }
std::string cell(const std::optional<float>& v) { return v ? num(*v) : std::string(); }

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

Tensor stack(const std::vector<const Tensor*>& parts, const Shape& inner) {
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  std::vector<float> values;
  values.reserve(numel(shape));
  for (const Tensor* t : parts) {
    if (t->shape() != inner) throw ShapeError("cannot stack " + to_string(t->shape()) + " into " + to_string(inner));
    values.insert(values.end(), t->data().begin(), t->data().end());
  }
  return Tensor(std::move(shape), std::move(values));
}

Tensor slice(const Tensor& stacked, std::size_t index, const Shape& inner) {
  const std::size_t n = numel(inner);
  const auto first = stacked.data().begin() + std::ptrdiff_t(index * n);
  return Tensor(inner, std::vector<float>(first, first + std::ptrdiff_t(n)));
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string strength_tag(float s) {
  std::string t = num(s);
  std::replace(t.begin(), t.end(), '.', 'p');
  return t;
}

bool is_positive(ItemKind k) { return k == ItemKind::Adversarial; }

}  // namespace

double Corpus::yield() const {
  return attempts.empty() ? 0.0 : double(entries.size()) / double(attempts.size());
}

std::vector<int> correctly_classified(const ModelWeights& model, const LabeledImages& data, std::size_t limit) {
  data.check();
  const int classes = int(data.class_names.size());
  std::vector<std::vector<int>> by_class(std::size_t(std::max(classes, 1)));
  for (std::size_t i = 0; i < data.labels.size(); ++i) by_class[std::size_t(data.labels[i])].push_back(int(i));

  std::vector<int> order;
  for (std::size_t rank = 0;; ++rank) {
    bool any = false;
    for (const auto& members : by_class)
      if (rank < members.size()) {
        order.push_back(members[rank]);
        any = true;
      }
    if (!any) break;
  }

  std::vector<char> ok(order.size(), 0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto idx = std::size_t(order[i]);
    ok[i] = argmax(forward(model, data.images[idx]).logits().data()) == data.labels[idx];
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < order.size() && out.size() < limit; ++i)
    if (ok[i]) out.push_back(order[i]);
  return out;
}

Corpus build_attack_corpus(const ModelWeights& model, const LabeledImages& data, const std::vector<int>& seed_indices,
                           const AttackConfig& cfg, std::uint64_t rng_seed) {
  cfg.validate();
  data.check();
  Corpus corpus;
  corpus.strengths = cfg.strengths;
  const std::size_t n = seed_indices.size();
  corpus.attempts.resize(n);
  std::vector<std::optional<CorpusEntry>> built(n);
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const auto idx = std::size_t(seed_indices[i]);
      if (idx >= data.images.size()) throw DataError("seed index " + std::to_string(idx) + " out of range");
      const Tensor& seed = data.images[idx];
      const int label = data.labels[idx];
      const AttackResult res = derive_perturbation(model, seed, label, cfg, int(i));

      SeedAttempt& a = corpus.attempts[i];
      a.dataset_index = int(idx);
      a.label = label;
      a.success = res.success;
      a.adversarial_label = res.adversarial_label;
      a.iterations = res.iterations;
      a.coverage = res.coverage;
      a.adversarial_stats = noise_stats(res.perturbation);
      const Perturbation g = sample_matched_gaussian(a.adversarial_stats, derive_seed(rng_seed, i), int(i));
      a.gaussian_stats = noise_stats(g);
      if (!res.success) continue;

      CorpusEntry e;
      e.attempt = int(i);
      e.label = label;
      e.seed = seed;
      for (float s : cfg.strengths) {
        e.adversarial.push_back(amplify(res.perturbation, s, seed));
        e.gaussian.push_back(amplify(g, s, seed));
      }
      built[i] = std::move(e);
    } catch (...) {
#pragma omp critical(ncam_corpus_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (auto& e : built)
    if (e) corpus.entries.push_back(std::move(*e));
  return corpus;
}

std::vector<fs::path> save_corpus(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  const Shape image_shape = corpus.entries.empty() ? Shape{32, 32, 3} : corpus.entries.front().seed.shape();
  const std::size_t S = corpus.strengths.size();
  std::vector<const Tensor*> seeds, adv, gauss;
  for (const auto& e : corpus.entries) {
    seeds.push_back(&e.seed);
    for (std::size_t s = 0; s < S; ++s) {
      adv.push_back(&e.adversarial[s].noise);
      gauss.push_back(&e.gaussian[s].noise);
    }
  }
  Shape per_seed{S};
  per_seed.insert(per_seed.end(), image_shape.begin(), image_shape.end());
  const std::size_t M = corpus.entries.size();
  Shape nested{M};
  nested.insert(nested.end(), per_seed.begin(), per_seed.end());

  std::vector<fs::path> files{dir / "seeds.ntf", dir / "adversarial.ntf", dir / "gaussian.ntf", dir / "corpus.csv"};
  save_ntf(files[0], stack(seeds, image_shape));
  save_ntf(files[1], stack(adv, image_shape).reshaped(nested));
  save_ntf(files[2], stack(gauss, image_shape).reshaped(nested));

  auto out = open_out(files[3]);
  out << "# strengths=";
  for (std::size_t s = 0; s < S; ++s) out << (s ? "," : "") << num(corpus.strengths[s]);
  out << "\nattempt,dataset_index,label,success,adversarial_label,iterations,coverage,adv_mu,adv_sigma,gauss_mu,"
         "gauss_sigma,entry\n";
  std::map<int, std::size_t> entry_of;
  for (std::size_t k = 0; k < M; ++k) entry_of[corpus.entries[k].attempt] = k;
  for (std::size_t i = 0; i < corpus.attempts.size(); ++i) {
    const SeedAttempt& a = corpus.attempts[i];
    const auto it = entry_of.find(int(i));
    out << i << ',' << a.dataset_index << ',' << a.label << ',' << int(a.success) << ',' << a.adversarial_label << ','
        << a.iterations << ',' << num(a.coverage) << ',' << num(a.adversarial_stats.mu) << ','
        << num(a.adversarial_stats.sigma) << ',' << num(a.gaussian_stats.mu) << ',' << num(a.gaussian_stats.sigma)
        << ',' << (it == entry_of.end() ? std::string() : std::to_string(it->second)) << '\n';
  }
  if (!out) throw DataError("failed writing '" + files[3].string() + "'");
  return files;
}

Corpus load_corpus(const fs::path& dir) {
  const std::vector<std::string> names{"seeds.ntf", "adversarial.ntf", "gaussian.ntf", "corpus.csv"};
  std::string missing;
  for (const auto& n : names)
    if (!fs::exists(dir / n)) missing += (missing.empty() ? "" : ", ") + (dir / n).string();
  if (!missing.empty()) throw DataError("corpus is missing files: " + missing);

  Corpus corpus;
  std::ifstream csv(dir / "corpus.csv");
  std::string line;
  if (!std::getline(csv, line) || line.rfind("# strengths=", 0) != 0) throw DataError("corpus.csv lacks strengths");
  for (const auto& s : split(line.substr(12), ',')) corpus.strengths.push_back(std::stof(s));
  std::getline(csv, line);

  std::vector<std::pair<int, int>> entry_rows;  // (entry, attempt)
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 12) throw DataError("malformed corpus.csv row: " + line);
    SeedAttempt a;
    try {
      a.dataset_index = std::stoi(f[1]);
      a.label = std::stoi(f[2]);
      a.success = f[3] == "1";
      a.adversarial_label = std::stoi(f[4]);
      a.iterations = std::stoi(f[5]);
      a.coverage = std::stod(f[6]);
      a.adversarial_stats = {std::stod(f[7]), std::stod(f[8]), {}};
      a.gaussian_stats = {std::stod(f[9]), std::stod(f[10]), {}};
      if (!f[11].empty()) entry_rows.emplace_back(std::stoi(f[11]), int(corpus.attempts.size()));
    } catch (const std::logic_error&) {
      throw DataError("malformed corpus.csv row: " + line);
    }
    corpus.attempts.push_back(a);
  }

  const Tensor seeds = load_ntf(dir / "seeds.ntf");
  const Tensor adv = load_ntf(dir / "adversarial.ntf");
  const Tensor gauss = load_ntf(dir / "gaussian.ntf");
  const std::size_t M = entry_rows.size(), S = corpus.strengths.size();
  if (seeds.rank() != 4 || seeds.dim(0) != M || adv.rank() != 5 || adv.dim(0) != M || adv.dim(1) != S ||
      gauss.shape() != adv.shape())
    throw DataError("corpus tensors do not match corpus.csv");
  const Shape inner{seeds.dim(1), seeds.dim(2), seeds.dim(3)};
  std::sort(entry_rows.begin(), entry_rows.end());
  for (std::size_t k = 0; k < M; ++k) {
    if (entry_rows[k].first != int(k)) throw DataError("corpus.csv entry numbering is not contiguous");
    CorpusEntry e;
    e.attempt = entry_rows[k].second;
    e.label = corpus.attempts[std::size_t(e.attempt)].label;
    e.seed = slice(seeds, k, inner);
    for (std::size_t s = 0; s < S; ++s) {
      e.adversarial.push_back({slice(adv, k * S + s, inner), NoiseKind::Adversarial, corpus.strengths[s], e.attempt});
      e.gaussian.push_back({slice(gauss, k * S + s, inner), NoiseKind::Gaussian, corpus.strengths[s], e.attempt});
    }
    const NoiseStats as = noise_stats(e.adversarial.front());
    corpus.attempts[std::size_t(e.attempt)].adversarial_stats.shape = as.shape;
    corpus.attempts[std::size_t(e.attempt)].gaussian_stats.shape = as.shape;
    corpus.entries.push_back(std::move(e));
  }
  return corpus;
}

std::string_view to_string(ItemKind kind) {
  switch (kind) {
    case ItemKind::Clean: return "clean";
    case ItemKind::Gaussian: return "gaussian";
    case ItemKind::Adversarial: return "adversarial";
  }
  return "?";
}

std::vector<CorpusItem> corpus_items(const Corpus& corpus) {
  std::vector<CorpusItem> items;
  for (std::size_t k = 0; k < corpus.entries.size(); ++k) {
    const CorpusEntry& e = corpus.entries[k];
    items.push_back({k, ItemKind::Clean, std::nullopt, e.seed});
    for (std::size_t s = 0; s < corpus.strengths.size(); ++s)
      items.push_back({k, ItemKind::Adversarial, corpus.strengths[s], apply_perturbation(e.seed, e.adversarial[s])});
    for (std::size_t s = 0; s < corpus.strengths.size(); ++s)
      items.push_back({k, ItemKind::Gaussian, corpus.strengths[s], apply_perturbation(e.seed, e.gaussian[s])});
  }
  return items;
}

std::string_view to_string(Method m) { return m == Method::NoiseCam ? "noisecam" : "deviation"; }

Method parse_method(std::string_view name) {
  if (name == "noisecam") return Method::NoiseCam;
  if (name == "deviation") return Method::Deviation;
  throw ConfigError("unknown detection method '" + std::string(name) + "' (expected noisecam or deviation)");
}

Metrics compute_metrics(const std::vector<ItemVerdict>& verdicts, std::string group, std::optional<float> strength) {
  std::size_t n = 0, correct = 0, pos = 0, tp = 0, neg = 0, tn = 0;
  for (const auto& v : verdicts) {
    const bool flagged = v.report.verdict == Verdict::Adversarial;
    ++n;
    if (is_positive(v.kind)) {
      ++pos;
      tp += flagged;
    } else {
      ++neg;
      tn += !flagged;
    }
  }
  correct = tp + tn;
  Metrics m;
  m.group = std::move(group);
  m.strength = strength;
  m.items = n;
  m.accuracy = stats::rate(correct, n);
  m.tpr = stats::rate(tp, pos);
  m.tnr = stats::rate(tn, neg);
  return m;
}

const Metrics& EvalReport::group(std::string_view name, std::optional<float> strength) const {
  for (const auto& m : metrics)
    if (m.group == name && m.strength == strength) return m;
  throw std::out_of_range("no metrics group '" + std::string(name) + "'");
}

EvalReport run_eval(const ModelWeights& model, const Corpus& corpus, Method method, const RunConfig& cfg,
                    std::uint64_t rng_seed) {
  cfg.validate();
  cfg.validate_layers(model);
  if (corpus.entries.empty()) throw DataError("corpus has no adversarial examples to evaluate");
  const std::vector<CorpusItem> items = corpus_items(corpus);

  EvalReport report;
  report.method = method;
  report.verdicts.resize(items.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      const CorpusItem& it = items[i];
      DetectionReport r = method == Method::NoiseCam
                              ? detect_by_noisecam(model, it.image, cfg.noisecam)
                              : detect_by_deviation(model, it.image, cfg.deviation, derive_seed(rng_seed, i));
      report.verdicts[i] = {it.entry, it.kind, it.strength, std::move(r)};
    } catch (...) {
#pragma omp critical(ncam_eval_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  auto select = [&](auto pred) {
    std::vector<ItemVerdict> out;
    std::copy_if(report.verdicts.begin(), report.verdicts.end(), std::back_inserter(out), pred);
    return out;
  };
  report.metrics.push_back(compute_metrics(report.verdicts, "all"));
  for (ItemKind k : {ItemKind::Clean, ItemKind::Gaussian, ItemKind::Adversarial})
    report.metrics.push_back(
        compute_metrics(select([k](const ItemVerdict& v) { return v.kind == k; }), std::string(to_string(k))));
  for (float s : corpus.strengths)
    report.metrics.push_back(
        compute_metrics(select([s](const ItemVerdict& v) { return v.strength == s; }), "strength", s));
  return report;
}

void write_metrics_csv(const EvalReport& report, const fs::path& path) {
  auto out = open_out(path);
  out << "method,group,strength,items,accuracy,tpr,tnr\n";
  for (const auto& m : report.metrics)
    out << to_string(report.method) << ',' << m.group << ',' << cell(m.strength) << ',' << m.items << ','
        << cell(m.accuracy) << ',' << cell(m.tpr) << ',' << cell(m.tnr) << '\n';
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void write_verdicts_csv(const EvalReport& report, const fs::path& path) {
  auto out = open_out(path);
  out << "item,entry,kind,strength,verdict,category,similarity,threshold,clusters\n";
  for (std::size_t i = 0; i < report.verdicts.size(); ++i) {
    const auto& v = report.verdicts[i];
    out << i << ',' << v.entry << ',' << to_string(v.kind) << ',' << cell(v.strength) << ','
        << to_string(v.report.verdict) << ',' << v.report.category << ',' << cell(v.report.similarity) << ','
        << cell(v.report.threshold) << ','
        << (v.report.cluster_count ? std::to_string(*v.report.cluster_count) : std::string()) << '\n';
  }
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::vector<fs::path> export_figures(const ModelWeights& model, const Corpus& corpus,
                                     const std::vector<EvalReport>& reports, const RunConfig& cfg, const fs::path& dir,
                                     const FigureOptions& opt) {
  cfg.validate_layers(model);
  if (corpus.entries.empty()) throw DataError("corpus has no adversarial examples");
  fs::create_directories(dir);
  std::vector<fs::path> files;
  const std::size_t M = corpus.entries.size(), S = corpus.strengths.size();
  const std::vector<std::string> layers = model.conv_layer_ids();

  // [entry][strength] -> records over conv layers, adversarial then gaussian.
  std::vector<std::vector<std::vector<DeviationRecord>>> per(M, std::vector<std::vector<DeviationRecord>>(S));
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < M; ++k) {
    const CorpusEntry& e = corpus.entries[k];
    for (std::size_t s = 0; s < S; ++s) {
      auto a = deviation_profile(model, e.seed, apply_perturbation(e.seed, e.adversarial[s]), e.label,
                                 NoiseKind::Adversarial, corpus.strengths[s]);
      auto g = deviation_profile(model, e.seed, apply_perturbation(e.seed, e.gaussian[s]), e.label,
                                 NoiseKind::Gaussian, corpus.strengths[s]);
      a.insert(a.end(), g.begin(), g.end());
      per[k][s] = std::move(a);
    }
  }
  std::vector<DeviationRecord> records;
  for (const auto& row : per)
    for (const auto& cellv : row) records.insert(records.end(), cellv.begin(), cellv.end());

  {
    files.push_back(dir / "deviation_by_layer.csv");
    auto out = open_out(files.back());
    out << "layer_id,strength,median_da,median_dg,samples\n";
    for (const auto& layer : layers)
      for (float s : corpus.strengths) {
        std::vector<double> da, dg;
        for (const auto& r : records) {
          if (r.layer_id != layer || r.strength != s) continue;
          (r.kind == NoiseKind::Adversarial ? da : dg).push_back(r.similarity);
        }
        out << layer << ',' << num(s) << ',' << num(stats::median(da)) << ',' << num(stats::median(dg)) << ','
            << da.size() << '\n';
      }
  }
  {
    files.push_back(dir / "layer_compromise.csv");
    auto out = open_out(files.back());
    out << "layer_id,strength,threshold,probability,samples\n";
    for (const auto& layer : layers) {
      const auto p = compromise_profile(layer, records, corpus.strengths, M);
      for (std::size_t s = 0; s < S; ++s)
        out << layer << ',' << num(p.strengths[s]) << ',' << num(p.threshold) << ',' << num(p.probability[s]) << ','
            << p.samples[s] << '\n';
    }
  }
  {
    files.push_back(dir / "detector_comparison.csv");
    auto out = open_out(files.back());
    out << "method,group,strength,items,accuracy,tpr,tnr\n";
    for (const auto& r : reports)
      for (const auto& m : r.metrics)
        out << to_string(r.method) << ',' << m.group << ',' << cell(m.strength) << ',' << m.items << ','
            << cell(m.accuracy) << ',' << cell(m.tpr) << ',' << cell(m.tnr) << '\n';
  }

  // Panels use the strength closest to 1.
  std::size_t panel_s = 0;
  for (std::size_t s = 1; s < S; ++s)
    if (std::abs(corpus.strengths[s] - 1.0f) < std::abs(corpus.strengths[panel_s] - 1.0f)) panel_s = s;
  for (std::size_t k = 0; k < std::min(opt.panel_samples, M); ++k) {
    const CorpusEntry& e = corpus.entries[k];
    char name[32];
    std::snprintf(name, sizeof name, "sample_%03zu", k);
    const fs::path sd = dir / "panels" / name;
    fs::create_directories(sd);
    const Tensor image = apply_perturbation(e.seed, e.adversarial[panel_s]);
    const CamBundle b = cam_bundle(model, image, cfg.noisecam.probe_layer);
    write_ppm(sd / "image.ppm", image);
    write_ppm(sd / "perturbation.ppm", noise_to_display(e.adversarial[panel_s].noise));
    write_pgm(sd / "noisecam.pgm", normalize_minmax(b.noisecam.values));
    write_pgm(sd / "gradcampp.pgm", b.gradcampp.values);
    write_pgm(sd / "layercam.pgm", b.layercam.values);
    for (const char* f : {"image.ppm", "perturbation.ppm", "noisecam.pgm", "gradcampp.pgm", "layercam.pgm"})
      files.push_back(sd / f);

    const ActivePointSet pts = binarize_map(b.noisecam, cfg.noisecam.fraction);
    const ClusterResult cl = dbscan(pts, cfg.noisecam.eps, cfg.noisecam.min_pts);
    files.push_back(dir / "clusters" / (std::string(name) + "_s" + strength_tag(corpus.strengths[panel_s]) + ".ppm"));
    fs::create_directories(files.back().parent_path());
    write_cluster_overlay(files.back(), image.dim(0), image.dim(1), pts, cl);
  }
  return files;
}

std::vector<BlurRow> blur_baseline(const ModelWeights& model, const Corpus& corpus, double radius) {
  if (corpus.entries.empty()) throw DataError("corpus has no adversarial examples");
  const std::vector<CorpusItem> items = corpus_items(corpus);
  std::vector<char> plain(items.size()), blurred(items.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < items.size(); ++i) {
    const int label = corpus.entries[items[i].entry].label;
    plain[i] = predict(model, items[i].image).label == label;
    blurred[i] = predict(model, gaussian_blur(items[i].image, radius)).label == label;
  }

  auto row = [&](ItemKind kind, std::optional<float> strength, bool any_strength) {
    BlurRow r{kind, strength, 0, 0.0, 0.0};
    std::size_t a = 0, b = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].kind != kind || (!any_strength && items[i].strength != strength)) continue;
      ++r.items;
      a += plain[i];
      b += blurred[i];
    }
    if (r.items) {
      r.accuracy = double(a) / double(r.items);
      r.blurred_accuracy = double(b) / double(r.items);
    }
    return r;
  };
  std::vector<BlurRow> rows;
  for (ItemKind k : {ItemKind::Clean, ItemKind::Gaussian, ItemKind::Adversarial}) rows.push_back(row(k, {}, true));
  for (ItemKind k : {ItemKind::Gaussian, ItemKind::Adversarial})
    for (float s : corpus.strengths) rows.push_back(row(k, s, false));
  return rows;
}

void write_blur_csv(const std::vector<BlurRow>& rows, const fs::path& path) {
  auto out = open_out(path);
  out << "kind,strength,items,accuracy,blurred_accuracy,drop\n";
  for (const auto& r : rows)
    out << to_string(r.kind) << ',' << cell(r.strength) << ',' << r.items << ',' << num(r.accuracy) << ','
        << num(r.blurred_accuracy) << ',' << num(r.accuracy - r.blurred_accuracy) << '\n';
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string RunManifest::run_id() const { return command + "-" + hex(fnv1a(format_config(config), fnv1a(command))); }

fs::path write_manifest(const RunManifest& manifest, const fs::path& dir) {
  nlohmann::ordered_json j;
  j["run_id"] = manifest.run_id();
  j["command"] = manifest.command;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : manifest.config.entries()) cfg[k] = v;
  j["config"] = cfg;
  j["seeds"] = {{"master", manifest.config.seed}, {"train", manifest.config.train.seed}};
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  std::string missing;
  for (const auto& f : manifest.files) {
    if (!fs::is_regular_file(f)) {
      missing += (missing.empty() ? "" : ", ") + f.string();
      continue;
    }
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    std::error_code ec;
    fs::path rel = fs::relative(f, dir, ec);
    if (ec || rel.empty()) rel = f;
    files.push_back({{"path", rel.generic_string()}, {"bytes", bytes.size()}, {"fnv1a", hex(fnv1a(bytes))}});
  }
  if (!missing.empty()) throw DataError("manifest references missing files: " + missing);
  j["files"] = files;
  const fs::path path = dir / ("manifest_" + manifest.command + ".json");
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing '" + path.string() + "'");
  return path;
}

}  // namespace ncam
