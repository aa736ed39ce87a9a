// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradcheck.hpp"
#include "noisecam/harness.hpp"
#include "noisecam/stats.hpp"
#include "oracles.hpp"

using namespace ncam;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Line {
  int id;
  bool pass;
  std::string detail;
};
std::vector<Line> lines;

void report(int id, bool pass, const std::string& detail, Clock::time_point start) {
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, " [%.1fs]", secs);
  lines.push_back({id, pass, detail + buf});
  std::printf("criterion %2d: %s  %s%s\n", id, pass ? "PASS" : "FAIL", detail.c_str(), buf);
  std::fflush(stdout);
}

void extra(const std::string& name, bool pass, const std::string& detail) {
  lines.push_back({0, pass, name + ": " + detail});
  std::printf("property    : %s  %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1
void gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  bool ok = true;
  std::string worst;
  for (const auto& c : gradcheck::layer_cases()) {
    gradcheck::Outcome all;
    std::size_t tensors_ok = 0;
    for (int t = 0; t < 50; ++t) {
      const auto o = c.run(rng, 20, 1e-3);
      tensors_ok += o.fraction() >= 0.95;
      all.merge(o);
    }
    ok = ok && tensors_ok == 50;
    worst += fmt("%s %.3f ", c.name.c_str(), all.fraction());
  }
  const ModelWeights m = build_default_model();
  gradcheck::Outcome net;
  for (int t = 0; t < 5; ++t) net.merge(gradcheck::network_input_case(m, rng, 20, 1e-2));
  extra("network input gradient (rel 1e-2)", net.fraction() >= 0.95, fmt("%.3f", net.fraction()));
  report(1, ok, "fraction within 1e-3: " + worst, t0);
}

// 2
void cam_oracles() {
  const auto t0 = Clock::now();
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-6; };
  bool ok = true;
  const Tensor ones({2, 2, 1}, 1.0f);
  const CamWeights w = cam::gradcampp_weights(ones, ones);
  for (float a : w.coefficients.data()) ok = ok && near(a, 1.0 / 6.0);
  ok = ok && near(w.channel_weights[0], 2.0 / 3.0);
  for (float v : cam::weighted_sum(ones, w.channel_weights).values()) ok = ok && near(v, 2.0 / 3.0);

  const CamWeights nw = cam::noisecam_weights(ones, ones);
  for (float v : nw.noise_weights.data()) ok = ok && near(v, -1.0 / 3.0);
  for (float v : cam::noisecam(ones, nw).values()) ok = ok && v == 0.0f;

  // Exact cancellation: relu(g) == w_k everywhere.
  Tensor a({4, 4, 1}, 0.875f), g({4, 4, 1}, 1.0f);
  const CamWeights cw = cam::noisecam_weights(a, g);
  ok = ok && near(cw.channel_weights[0], 1.0);
  for (float v : cam::noisecam(a, cw).values()) ok = ok && v == 0.0f;

  const Tensor lc = cam::layercam(Tensor({2, 2, 1}, {1, -1, 2, 0}), Tensor({2, 2, 1}, {1, 2, -1, 1}));
  ok = ok && near(lc[0], 1.0) && lc[1] == 0.0f && lc[2] == 0.0f && lc[3] == 0.0f;

  const Tensor gc = normalize_minmax(cam::gradcam(Tensor({2, 2, 1}, {1, 2, 3, 4}), ones));
  ok = ok && near(gc[0], 0.0) && near(gc[1], 1.0 / 3.0) && near(gc[2], 2.0 / 3.0) && near(gc[3], 1.0);
  ok = ok && near(upsample_bilinear(Tensor({2, 2}, {0, 1, 1, 0}), 3, 3)[4], 0.5);
  report(2, ok, "a=1/6, w=2/3, NoiseCAM cancellation, LayerCAM [1,0;0,0]", t0);
}

// 3
void dbscan_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> eps_d(1.0, 5.0);
  std::uniform_int_distribution<int> mp(2, 6), side(10, 60);
  int match = 0;
  std::size_t points = 0;
  for (int t = 0; t < 200; ++t) {
    const auto pts = oracle::random_points(rng, 300, side(rng));
    const double eps = eps_d(rng);
    const int min_pts = mp(rng);
    points += pts.size();
    match += dbscan(pts, eps, min_pts).labels == oracle::dbscan(pts, eps, min_pts);
  }
  report(3, match == 200, fmt("%d/200 point sets identical (%zu points)", match, points), t0);
}

// 4
void pca_contract() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(404);
  int channels_ok = 0, exact = 0;
  for (int n = 0; n < 50; ++n) {
    const Tensor img = oracle::grid_image(rng);
    std::vector<PcaChannelInfo> info;
    const Tensor clean = pca_clean(img, 0.99, &info);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto ref = oracle::channel_pca(img, c);
      const std::size_t k = info[c].kept;
      channels_ok += k == oracle::minimal_components(ref.eig.values, 0.99) &&
                     oracle::cumulative_ratio(ref.eig.values, k) >= 0.99 &&
                     oracle::cumulative_ratio(ref.eig.values, k - 1) < 0.99;
    }
    const Tensor back = clean + extract_noise(img, clean);
    exact += back == img;
  }
  report(4, channels_ok == 150 && exact == 50,
         fmt("%d/150 channels minimal and >= 0.99; %d/50 images reconstruct bit-exactly", channels_ok, exact), t0);
}

struct Reference {
  RunConfig cfg;
  ModelWeights model;
  LabeledImages test;
  Corpus corpus;
};

// 7
Reference trainability() {
  const auto t0 = Clock::now();
  Reference r;
  const LabeledImages train_set = gen_dataset(r.cfg.data.train_per_class, derive_seed(r.cfg.seed, 1));
  r.test = gen_dataset(r.cfg.data.test_per_class, derive_seed(r.cfg.seed, 2));
  auto result = train(build_default_model(kDefaultClasses, r.cfg.train.seed), train_set, r.cfg.train);
  r.model = std::move(result.model);
  const double tr = evaluate(r.model, train_set).accuracy, te = evaluate(r.model, r.test).accuracy;
  report(7, tr >= 0.90 && te >= 0.85 && r.cfg.train.epochs <= 30,
         fmt("train %.3f, held-out %.3f after %d epochs", tr, te, r.cfg.train.epochs), t0);
  return r;
}

// 5 and 6
void attack_and_noise(Reference& r) {
  const auto t0 = Clock::now();
  const auto seeds = correctly_classified(r.model, r.test, 200);
  r.corpus = build_attack_corpus(r.model, r.test, seeds, r.cfg.attack, derive_seed(r.cfg.seed, 3));
  const double yield = r.corpus.yield();
  report(5, seeds.size() == 200 && yield >= 0.40,
         fmt("%zu/%zu seeds flipped (%.3f) at delta %.2f", r.corpus.entries.size(), seeds.size(), yield,
             double(r.cfg.attack.delta)),
         t0);

  const auto t1 = Clock::now();
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < r.corpus.attempts.size(); ++i) {
    const SeedAttempt& a = r.corpus.attempts[i];
    const Tensor& seed = r.test.images[std::size_t(a.dataset_index)];
    const Perturbation g = sample_matched_gaussian(a.adversarial_stats, derive_seed(derive_seed(r.cfg.seed, 3), i));
    flipped += predict(r.model, apply_perturbation(seed, amplify(g, 1.0f, seed))).label != a.label;
  }
  const double rate = double(flipped) / double(std::max<std::size_t>(r.corpus.attempts.size(), 1));
  report(6, rate <= 0.20, fmt("%zu/%zu matched Gaussian variants flip the label (%.3f)", flipped,
                              r.corpus.attempts.size(), rate),
         t1);
}

// 8
void deviation_ordering(const Reference& r) {
  const auto t0 = Clock::now();
  Corpus corpus = r.corpus;
  if (corpus.entries.size() < 100) {
    const auto more = correctly_classified(r.model, r.test, r.test.size());
    corpus = build_attack_corpus(r.model, r.test, more, r.cfg.attack, derive_seed(r.cfg.seed, 3));
  }
  const auto unit = std::find(corpus.strengths.begin(), corpus.strengths.end(), 1.0f) - corpus.strengths.begin();
  const std::string& layer = r.cfg.deviation.probe_layer;
  std::vector<double> da(corpus.entries.size()), dg(corpus.entries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const CorpusEntry& e = corpus.entries[i];
    const std::size_t s = std::size_t(unit);
    da[i] = behavior_deviation(r.model, e.seed, apply_perturbation(e.seed, e.adversarial[s]), layer, e.label).similarity;
    dg[i] = behavior_deviation(r.model, e.seed, apply_perturbation(e.seed, e.gaussian[s]), layer, e.label).similarity;
  }
  const double ma = stats::median(da), mg = stats::median(dg);
  const auto mw = stats::mann_whitney(da, dg);
  report(8, da.size() >= 100 && ma < mg && mw.p_less < 0.05,
         fmt("%zu triples at %s: median D_a %.4f, median D_g %.4f, p %.2e", da.size(), layer.c_str(), ma, mg,
             mw.p_less),
         t0);
}

// 9 and 10
void detectors(const Reference& r) {
  const auto t0 = Clock::now();
  const EvalReport nc = run_eval(r.model, r.corpus, Method::NoiseCam, r.cfg, derive_seed(r.cfg.seed, 5));
  const EvalReport dv = run_eval(r.model, r.corpus, Method::Deviation, r.cfg, derive_seed(r.cfg.seed, 5));
  const double acc_nc = *nc.group("all").accuracy, acc_dv = *dv.group("all").accuracy;
  const double tnr_g = *nc.group("gaussian").tnr;
  report(9, acc_nc >= acc_dv && tnr_g >= 0.7,
         fmt("accuracy noisecam %.3f vs deviation %.3f; noisecam gaussian TNR %.3f over %zu items", acc_nc, acc_dv,
             tnr_g, nc.group("gaussian").items),
         t0);

  double lo = 1.0, hi = 0.0;
  std::string per;
  for (float s : r.corpus.strengths) {
    double tpr = 0.0;
    std::size_t pos = 0;
    for (const auto& v : nc.verdicts)
      if (v.kind == ItemKind::Adversarial && v.strength == s) {
        ++pos;
        tpr += v.report.verdict == Verdict::Adversarial;
      }
    tpr /= double(std::max<std::size_t>(pos, 1));
    lo = std::min(lo, tpr);
    hi = std::max(hi, tpr);
    per += fmt("%g:%.3f ", double(s), tpr);
  }
  report(10, hi - lo <= 0.15, fmt("noisecam TPR spread %.1f pp (%s)", 100.0 * (hi - lo), per.c_str()), t0);

  // Detector properties on the same runs.
  const Metrics& dclean = dv.group("clean");
  const double fpr = 1.0 - *dclean.tnr;
  extra("deviation clean false-positive rate <= 0.20", dclean.items >= 100 && fpr <= 0.20,
        fmt("%.3f over %zu clean images", fpr, dclean.items));
  std::size_t pos = 0, hit = 0;
  for (const auto& v : dv.verdicts)
    if (v.kind == ItemKind::Adversarial && v.strength == 1.0f) {
      ++pos;
      hit += v.report.verdict == Verdict::Adversarial;
    }
  const double det = double(hit) / double(std::max<std::size_t>(pos, 1));
  extra("deviation detection at strength 1 exceeds clean FPR", det > fpr, fmt("%.3f vs %.3f", det, fpr));

  const auto items = corpus_items(r.corpus);
  std::vector<double> benign_mass, adv_mass;
  std::vector<double> mass(items.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < items.size(); ++i) {
    double sum = 0.0;
    const Heatmap h = noisecam(r.model, items[i].image, r.cfg.noisecam.probe_layer);
    for (float v : h.values.data()) sum += v;
    mass[i] = sum;
  }
  for (std::size_t i = 0; i < items.size(); ++i)
    (items[i].kind == ItemKind::Adversarial ? adv_mass : benign_mass).push_back(mass[i]);
  const double mb = stats::median(benign_mass), ma = stats::median(adv_mass);
  extra("median NoiseCAM mass benign < adversarial", mb < ma, fmt("%.3f vs %.3f", mb, ma));
}

// 11
void reproducibility(const std::string& cli, const fs::path& work) {
  const auto t0 = Clock::now();
  const std::string sets =
      " --set data.train_per_class=20 --set data.test_per_class=6 --set train.epochs=3 --set corpus.max_seeds=8";
  const std::vector<std::string> steps = {"gen-data", "train", "attack", "eval --method both", "blur-baseline"};
  bool ran = true;
  for (const char* run : {"a", "b"}) {
    const fs::path out = work / run;
    fs::remove_all(out);
    for (const auto& step : steps) {
      const std::string cmd =
          "\"" + cli + "\" --seed 77 --out \"" + out.string() + "\"" + sets + " " + step + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        ran = false;
        std::printf("  command failed: %s\n", cmd.c_str());
      }
    }
  }
  const std::vector<std::string> files = {"model.nwv",
                                          "corpus/corpus.csv",
                                          "corpus/seeds.ntf",
                                          "corpus/adversarial.ntf",
                                          "corpus/gaussian.ntf",
                                          "manifest_attack.json",
                                          "metrics_noisecam.csv",
                                          "metrics_deviation.csv",
                                          "verdicts_noisecam.csv",
                                          "verdicts_deviation.csv",
                                          "manifest_eval.json"};
  std::size_t same = 0;
  for (const auto& f : files) {
    const fs::path a = work / "a" / f, b = work / "b" / f;
    const bool eq = fs::exists(a) && fs::exists(b) && slurp(a) == slurp(b);
    if (!eq) std::printf("  differs or missing: %s\n", f.c_str());
    same += eq;
  }
  report(11, ran && same == files.size(), fmt("%zu/%zu artifacts byte-identical across two runs", same, files.size()),
         t0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string cli;
  std::string work = (fs::temp_directory_path() / "noisecam_acceptance").string();
  app.add_option("--cli", cli, "Path to the noisecam executable")->required();
  app.add_option("--work", work, "Scratch directory");
  std::vector<int> expect_fail;
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail; exit 0 only if exactly these fail");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  gradients();
  cam_oracles();
  dbscan_oracle();
  pca_contract();
  Reference ref = trainability();
  attack_and_noise(ref);
  deviation_ordering(ref);
  detectors(ref);
  reproducibility(cli, work);

  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
  std::printf("\nsummary\n");
  int failed = 0;
  std::vector<int> failing;
  for (const auto& l : lines) {
    if (l.id == 0) {
      std::printf("  property     %s  %s\n", l.pass ? "PASS" : "FAIL", l.detail.c_str());
    } else {
      std::printf("  criterion %2d %s  %s\n", l.id, l.pass ? "PASS" : "FAIL", l.detail.c_str());
    }
    failed += !l.pass;
    if (!l.pass) failing.push_back(l.id);
  }
  std::printf("%d check(s) failed\n", failed);
  std::sort(expect_fail.begin(), expect_fail.end());
  if (expect_fail.empty()) return failed ? 1 : 0;
  std::string want;
  for (int id : expect_fail) want += " " + std::to_string(id);
  std::printf("expected failures:%s\n", want.c_str());
  return failing == expect_fail ? 0 : 1;
}
