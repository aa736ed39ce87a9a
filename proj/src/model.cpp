#include "noisecam/model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "noisecam/kernels.hpp"

namespace ncam {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
  }
  return "?";
}

std::size_t ModelWeights::layer_index(std::string_view id) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].id == id) return i;
  std::string known;
  for (const auto& l : layers) known += (known.empty() ? "" : ", ") + l.id;
  throw ConfigError("unknown layer id '" + std::string(id) + "' (known: " + known + ")");
}

std::size_t ModelWeights::conv_layer_index(std::string_view id) const {
  const auto i = layer_index(id);
  if (layers[i].kind != LayerKind::Conv) {
    throw ConfigError("layer '" + std::string(id) + "' is a " + std::string(to_string(layers[i].kind)) +
                      " layer, not a convolution");
  }
  return i;
}

std::vector<std::size_t> ModelWeights::conv_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].kind == LayerKind::Conv) out.push_back(i);
  return out;
}

std::vector<std::string> ModelWeights::conv_layer_ids() const {
  std::vector<std::string> out;
  for (auto i : conv_layers()) out.push_back(layers[i].id);
  return out;
}

std::vector<Shape> ModelWeights::output_shapes() const {
  std::vector<Shape> shapes;
  Shape cur = input_shape;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::Conv:
        cur = conv2d_output_shape(cur, {std::size_t(l.kernel), std::size_t(l.kernel), std::size_t(l.in_channels),
                                        std::size_t(l.out_channels)},
                                  l.stride, l.padding);
        break;
      case LayerKind::MaxPool:
        if (cur.size() != 3 || cur[0] < std::size_t(l.window) || cur[1] < std::size_t(l.window))
          throw ShapeError("pool layer '" + l.id + "' window larger than its input " + to_string(cur));
        cur = {(cur[0] - l.window) / l.stride + 1, (cur[1] - l.window) / l.stride + 1, cur[2]};
        break;
      case LayerKind::Flatten: cur = {numel(cur)}; break;
      case LayerKind::Dense: cur = {std::size_t(l.out_channels)}; break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

namespace {

LayerSpec conv(std::string id, int in, int out) {
  return {std::move(id), LayerKind::Conv, 3, in, out, 1, 1, 0, Activation::Relu};
}

LayerSpec pool(std::string id) { return {std::move(id), LayerKind::MaxPool, 0, 0, 0, 2, 0, 2, Activation::None}; }

Shape param_shape(const LayerSpec& l) {
  if (l.kind == LayerKind::Conv)
    return {std::size_t(l.kernel), std::size_t(l.kernel), std::size_t(l.in_channels), std::size_t(l.out_channels)};
  return {std::size_t(l.in_channels), std::size_t(l.out_channels)};
}

}  // namespace

ModelWeights build_default_model(int num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("classifier needs at least 2 classes");
  ModelWeights m;
  m.num_classes = num_classes;
  m.input_shape = {32, 32, 3};
  m.seed = seed;
  const int widths[3] = {16, 32, 64};
  int in = 3;
  for (int b = 0; b < 3; ++b) {
    const std::string block = "block" + std::to_string(b + 1);
    m.layers.push_back(conv(block + "_conv1", in, widths[b]));
    m.layers.push_back(conv(block + "_conv2", widths[b], widths[b]));
    m.layers.push_back(pool(block + "_pool"));
    in = widths[b];
  }
  m.layers.push_back({"flatten", LayerKind::Flatten, 0, 0, 0, 1, 0, 0, Activation::None});
  m.layers.push_back({"fc1", LayerKind::Dense, 0, 4 * 4 * 64, 64, 1, 0, 0, Activation::Relu});
  m.layers.push_back({"predictions", LayerKind::Dense, 0, 64, num_classes, 1, 0, 0, Activation::None});

  std::mt19937_64 rng(seed);
  for (const auto& l : m.layers) {
    if (!l.has_params()) {
      m.weights.emplace_back();
      m.biases.emplace_back();
      continue;
    }
    const Shape ws = param_shape(l);
    const double fan_in = l.kind == LayerKind::Conv ? double(l.kernel * l.kernel * l.in_channels) : l.in_channels;
    std::normal_distribution<float> dist(0.0f, float(std::sqrt(2.0 / fan_in)));
    Tensor w(ws);
    for (auto& v : w.data()) v = dist(rng);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(Shape{std::size_t(l.out_channels)});
  }
  return m;
}

void validate(const ModelWeights& model) {
  const auto n = model.layers.size();
  if (model.weights.size() != n || model.biases.size() != n) throw DataError("model parameter list length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = model.layers[i];
    for (std::size_t j = 0; j < i; ++j)
      if (model.layers[j].id == l.id) throw DataError("duplicate layer id '" + l.id + "'");
    if (l.has_params()) {
      if (model.weights[i].shape() != param_shape(l) || model.biases[i].shape() != Shape{std::size_t(l.out_channels)})
        throw DataError("layer '" + l.id + "' parameters do not match its spec");
    } else if (!model.weights[i].empty() || !model.biases[i].empty()) {
      throw DataError("layer '" + l.id + "' must not carry parameters");
    }
  }
  try {
    const auto shapes = model.output_shapes();
    if (shapes.empty() || shapes.back() != Shape{std::size_t(model.num_classes)})
      throw DataError("final layer does not produce " + std::to_string(model.num_classes) + " logits");
  } catch (const ShapeError& e) {
    throw DataError(std::string("inconsistent architecture: ") + e.what());
  }
}

namespace {

constexpr char kNwvMagic[4] = {'N', 'W', 'V', '1'};
constexpr std::uint8_t kNwvVersion = 1;

std::string describe(const LayerSpec& l) {
  std::ostringstream os;
  os << "kind=" << to_string(l.kind) << " kernel=" << l.kernel << " in=" << l.in_channels
     << " out=" << l.out_channels << " stride=" << l.stride << " pad=" << l.padding << " window=" << l.window
     << " act=" << (l.activation == Activation::Relu ? "relu" : "none");
  return os.str();
}

LayerSpec parse_layer(const std::string& id, const std::string& desc) {
  std::map<std::string, std::string> kv;
  std::istringstream is(desc);
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw DataError("malformed layer descriptor '" + desc + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError("layer '" + id + "' descriptor lacks '" + key + "'");
    return it->second;
  };
  auto num = [&](const char* key) {
    try {
      return std::stoi(get(key));
    } catch (const std::logic_error&) {
      throw DataError("layer '" + id + "' has non-numeric '" + key + "'");
    }
  };
  LayerSpec l;
  l.id = id;
  const auto& kind = get("kind");
  if (kind == "conv") l.kind = LayerKind::Conv;
  else if (kind == "maxpool") l.kind = LayerKind::MaxPool;
  else if (kind == "flatten") l.kind = LayerKind::Flatten;
  else if (kind == "dense") l.kind = LayerKind::Dense;
  else throw DataError("layer '" + id + "' has unknown kind '" + kind + "'");
  l.kernel = num("kernel");
  l.in_channels = num("in");
  l.out_channels = num("out");
  l.stride = num("stride");
  l.padding = num("pad");
  l.window = num("window");
  const auto& act = get("act");
  if (act == "relu") l.activation = Activation::Relu;
  else if (act == "none") l.activation = Activation::None;
  else throw DataError("layer '" + id + "' has unknown activation '" + act + "'");
  if (l.kernel < 0 || l.in_channels < 0 || l.out_channels < 0 || l.stride < 1 || l.padding < 0 || l.window < 0)
    throw DataError("layer '" + id + "' has out-of-range hyperparameters");
  return l;
}

}  // namespace

void write_weights(std::ostream& out, const ModelWeights& model) {
  validate(model);
  out.write(kNwvMagic, 4);
  out.put(static_cast<char>(kNwvVersion));
  io::put_u32(out, static_cast<std::uint32_t>(model.num_classes));
  io::put_u32(out, static_cast<std::uint32_t>(model.input_shape.size()));
  for (auto e : model.input_shape) io::put_u32(out, static_cast<std::uint32_t>(e));
  io::put_u64(out, model.seed);
  io::put_u32(out, static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& l : model.layers) {
    io::put_string(out, l.id);
    io::put_string(out, describe(l));
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!model.layers[i].has_params()) continue;
    write_ntf(out, model.weights[i]);
    write_ntf(out, model.biases[i]);
  }
}

ModelWeights read_weights(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kNwvMagic)) throw DataError("bad NWV magic");
  const int version = in.get();
  if (version == std::char_traits<char>::eof()) throw DataError("unexpected end of file");
  if (version != kNwvVersion) throw DataError("unsupported NWV version " + std::to_string(version) + " (expected 1)");

  ModelWeights m;
  m.num_classes = static_cast<int>(io::get_u32(in));
  const auto rank = io::get_u32(in);
  if (rank > 8) throw DataError("implausible input rank");
  m.input_shape.resize(rank);
  for (auto& e : m.input_shape) e = io::get_u32(in);
  m.seed = io::get_u64(in);
  const auto count = io::get_u32(in);
  if (count > 4096) throw DataError("implausible layer count");
  for (std::uint32_t i = 0; i < count; ++i) {
    auto id = io::get_string(in);
    auto desc = io::get_string(in);
    m.layers.push_back(parse_layer(id, desc));
  }
  for (const auto& l : m.layers) {
    if (!l.has_params()) {
      m.weights.emplace_back();
      m.biases.emplace_back();
      continue;
    }
    m.weights.push_back(read_ntf(in));
    m.biases.push_back(read_ntf(in));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after NWV payload");
  validate(m);
  return m;
}

void save_weights(const ModelWeights& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_weights(out, model);
  if (!out) throw DataError("write failed: " + path.string());
}

ModelWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return read_weights(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace ncam
