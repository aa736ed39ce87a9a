#include "noisecam/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ncam {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("bad value '" + v + "' for key '" + key + "'");
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T, class Member>
Field number(Member m) {
  return {[m](RunConfig& c, const std::string& v) { std::invoke(m, c) = parse_number<T>("", v); },
          [m](const RunConfig& c) { return fmt(double(std::invoke(m, const_cast<RunConfig&>(c)))); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = [] {
    std::map<std::string, Field> m;
    m["seed"] = number<std::uint64_t>([](RunConfig& c) -> auto& { return c.seed; });
    m["seed"].get = [](const RunConfig& c) { return std::to_string(c.seed); };
    m["data.train_per_class"] = number<int>([](RunConfig& c) -> auto& { return c.data.train_per_class; });
    m["data.test_per_class"] = number<int>([](RunConfig& c) -> auto& { return c.data.test_per_class; });
    m["train.epochs"] = number<int>([](RunConfig& c) -> auto& { return c.train.epochs; });
    m["train.lr"] = number<float>([](RunConfig& c) -> auto& { return c.train.lr; });
    m["train.batch"] = number<int>([](RunConfig& c) -> auto& { return c.train.batch; });
    m["train.seed"] = number<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.seed; });
    m["train.seed"].get = [](const RunConfig& c) { return std::to_string(c.train.seed); };
    m["attack.delta"] = number<float>([](RunConfig& c) -> auto& { return c.attack.delta; });
    m["attack.lambda"] = number<float>([](RunConfig& c) -> auto& { return c.attack.lambda; });
    m["attack.top_k"] = number<int>([](RunConfig& c) -> auto& { return c.attack.top_k; });
    m["attack.neurons"] = number<int>([](RunConfig& c) -> auto& { return c.attack.neurons; });
    m["attack.step_size"] = number<float>([](RunConfig& c) -> auto& { return c.attack.step_size; });
    m["attack.max_iters"] = number<int>([](RunConfig& c) -> auto& { return c.attack.max_iters; });
    m["attack.coverage_threshold"] = number<float>([](RunConfig& c) -> auto& { return c.attack.coverage_threshold; });
    m["attack.strengths"] = {[](RunConfig& c, const std::string& v) {
                               std::vector<float> out;
                               std::stringstream ss(v);
                               std::string item;
                               while (std::getline(ss, item, ','))
                                 out.push_back(parse_number<float>("attack.strengths", trim(item)));
                               c.attack.strengths = out;
                             },
                             [](const RunConfig& c) {
                               std::string s;
                               for (std::size_t i = 0; i < c.attack.strengths.size(); ++i)
                                 s += (i ? "," : "") + fmt(c.attack.strengths[i]);
                               return s;
                             }};
    m["corpus.max_seeds"] = number<int>([](RunConfig& c) -> auto& { return c.corpus.max_seeds; });
    m["deviation.probe_layer"] = {[](RunConfig& c, const std::string& v) { c.deviation.probe_layer = v; },
                                  [](const RunConfig& c) { return c.deviation.probe_layer; }};
    m["deviation.samples"] = number<int>([](RunConfig& c) -> auto& { return c.deviation.samples; });
    m["deviation.retained_variance"] =
        number<double>([](RunConfig& c) -> auto& { return c.deviation.retained_variance; });
    m["deviation.mad_factor"] = number<double>([](RunConfig& c) -> auto& { return c.deviation.mad_factor; });
    m["noisecam.probe_layer"] = {[](RunConfig& c, const std::string& v) { c.noisecam.probe_layer = v; },
                                 [](const RunConfig& c) { return c.noisecam.probe_layer; }};
    m["noisecam.fraction"] = number<double>([](RunConfig& c) -> auto& { return c.noisecam.fraction; });
    m["noisecam.eps"] = number<double>([](RunConfig& c) -> auto& { return c.noisecam.eps; });
    m["noisecam.min_pts"] = number<int>([](RunConfig& c) -> auto& { return c.noisecam.min_pts; });
    m["noisecam.max_clusters"] = number<int>([](RunConfig& c) -> auto& { return c.noisecam.max_benign_clusters; });
    m["blur.radius"] = number<double>([](RunConfig& c) -> auto& { return c.blur_radius; });
    return m;
  }();
  return f;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(*this, value);
  } catch (const ConfigError&) {
    throw ConfigError("bad value '" + value + "' for key '" + key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, f] : fields()) out.emplace_back(k, f.get(*this));
  return out;
}

void RunConfig::validate() const {
  if (data.train_per_class < 1 || data.test_per_class < 0) throw ConfigError("data sizes must be positive");
  if (train.epochs < 1 || train.batch < 1 || !(train.lr > 0.0f)) throw ConfigError("invalid training settings");
  if (corpus.max_seeds < 1) throw ConfigError("corpus.max_seeds must be >= 1");
  if (!(blur_radius > 0.0)) throw ConfigError("blur.radius must be > 0");
  attack.validate();
  deviation.validate();
  noisecam.validate();
}

void RunConfig::validate_layers(const ModelWeights& model) const {
  model.conv_layer_index(deviation.probe_layer);
  model.conv_layer_index(noisecam.probe_layer);
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  for (const auto& [k, v] : parse_config_text(ss.str())) base.set(k, v);
  base.validate();
  return base;
}

std::string format_config(const RunConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : cfg.entries()) s += k + " = " + v + "\n";
  return s;
}

}  // namespace ncam
