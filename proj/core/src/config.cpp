#include "ivw/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ivw {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

// Pulls known keys out of an object and rejects anything left over.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  ~Section() = default;

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) fail(path_ + "." + it.key(), "unknown key");
    }
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T* out) {
    if (const json* v = get(key)) {
      try {
        *out = v->get<T>();
      } catch (const json::exception&) {
        fail(path_ + "." + key, "wrong type");
      }
    }
  }

  const std::string& path() const { return path_; }
  const json& node() const { return node_; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_data(const json& node, const std::string& path, DataConfig* out) {
  Section s(node, path);
  s.read("kind", &out->kind);
  s.read("images_path", &out->images_path);
  s.read("labels_path", &out->labels_path);
  s.read("batch_paths", &out->batch_paths);
  s.read("cache_path", &out->cache_path);
  s.read("count", &out->count);
  s.read("transforms", &out->transforms);
  s.read("seed", &out->seed);
  s.finish();
}

template <typename T, std::size_t N>
void read_array(Section& s, const std::string& key, std::array<T, N>* out) {
  if (const json* v = s.get(key)) {
    if (!v->is_array() || v->size() != N) {
      fail(s.path() + "." + key, "expected an array of " + std::to_string(N));
    }
    for (std::size_t i = 0; i < N; ++i) {
      try {
        (*out)[i] = (*v)[i].get<T>();
      } catch (const json::exception&) {
        fail(s.path() + "." + key, "wrong element type");
      }
    }
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  json root_node;
  try {
    root_node = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }

  ExperimentConfig c;
  Section root(root_node, "$");

  if (const json* v = root.get("model")) {
    Section s(*v, "$.model");
    s.read("flavor", &c.flavor);
    s.read("hidden", &c.hidden);
    s.read("rff_lengthscale", &c.rff_lengthscale);
    s.read("blur_sigma", &c.blur_sigma);
    s.finish();
  }
  if (const json* v = root.get("objective")) {
    Section s(*v, "$.objective");
    s.read("kind", &c.objective);
    s.read("prior_variance", &c.prior_variance);
    s.read("sample_count", &c.sample_count);
    s.read("theta_samples", &c.theta_samples);
    s.read("deterministic_transforms", &c.deterministic_transforms);
    s.read("average_logits", &c.average_logits);
    s.finish();
  }
  if (const json* v = root.get("invariance")) {
    Section s(*v, "$.invariance");
    read_array(s, "eta_init", &c.eta_init);
    read_array(s, "eta_trainable", &c.eta_trainable);
    s.read("eta_lr_scale", &c.eta_lr_scale);
    s.finish();
  }
  if (const json* v = root.get("optim")) {
    Section s(*v, "$.optim");
    s.read("iterations", &c.iterations);
    s.read("batch_size", &c.batch_size);
    s.read("lr0", &c.lr0);
    s.read("beta1", &c.beta1);
    s.read("beta2", &c.beta2);
    s.read("seed", &c.seed);
    s.read("checkpoint_every", &c.checkpoint_every);
    s.finish();
  }
  if (const json* v = root.get("eval")) {
    Section s(*v, "$.eval");
    s.read("sample_count", &c.eval_sample_count);
    s.finish();
  }
  if (const json* v = root.get("data")) {
    Section s(*v, "$.data");
    if (const json* t = s.get("train")) read_data(*t, "$.data.train", &c.train_data);
    if (const json* t = s.get("test")) read_data(*t, "$.data.test", &c.test_data);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

std::string ExperimentConfig::to_json() const {
  auto data_node = [](const DataConfig& d) {
    return json{{"kind", d.kind},
                {"images_path", d.images_path},
                {"labels_path", d.labels_path},
                {"batch_paths", d.batch_paths},
                {"cache_path", d.cache_path},
                {"count", d.count},
                {"transforms", d.transforms},
                {"seed", d.seed}};
  };
  json root{
      {"model",
       {{"flavor", flavor},
        {"hidden", hidden},
        {"rff_lengthscale", rff_lengthscale},
        {"blur_sigma", blur_sigma}}},
      {"objective",
       {{"kind", objective},
        {"prior_variance", prior_variance},
        {"sample_count", sample_count},
        {"theta_samples", theta_samples},
        {"deterministic_transforms", deterministic_transforms},
        {"average_logits", average_logits}}},
      {"invariance",
       {{"eta_init", eta_init},
        {"eta_trainable", eta_trainable},
        {"eta_lr_scale", eta_lr_scale}}},
      {"optim",
       {{"iterations", iterations},
        {"batch_size", batch_size},
        {"lr0", lr0},
        {"beta1", beta1},
        {"beta2", beta2},
        {"seed", seed},
        {"checkpoint_every", checkpoint_every}}},
      {"eval", {{"sample_count", eval_sample_count}}},
      {"data", {{"train", data_node(train_data)}, {"test", data_node(test_data)}}}};
  return root.dump(2);
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string canon = to_json();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a offset basis
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

ModelSpec ExperimentConfig::model_spec(int height, int width, int classes) const {
  ModelSpec spec;
  spec.flavor = flavor == "rff" ? Flavor::RFF : Flavor::ReLU;
  spec.hidden = hidden;
  spec.image_mode = height > 0;
  spec.height = height;
  spec.width = spec.image_mode ? width : 28;
  spec.coord_dim = spec.image_mode ? 2 : width;
  spec.classes = classes;
  spec.rff_lengthscale = rff_lengthscale;
  spec.blur_sigma = blur_sigma;
  return spec;
}

InvarianceParams ExperimentConfig::invariance_params() const {
  InvarianceParams p;
  for (int i = 0; i < 6; ++i) {
    p.eta[i] = eta_init[static_cast<std::size_t>(i)];
    p.trainable[static_cast<std::size_t>(i)] = eta_trainable[static_cast<std::size_t>(i)];
  }
  return p;
}

void ExperimentConfig::validate() const {
  if (flavor != "rff" && flavor != "relu") {
    throw std::invalid_argument("config: $.model.flavor must be 'rff' or 'relu'");
  }
  if (objective != "vi" && objective != "point_estimate") {
    throw std::invalid_argument(
        "config: $.objective.kind must be 'vi' or 'point_estimate'");
  }
  if (hidden < 1) throw std::invalid_argument("config: $.model.hidden must be >= 1");
  if (rff_lengthscale <= 0) {
    throw std::invalid_argument("config: $.model.rff_lengthscale must be positive");
  }
  if (blur_sigma < 0) {
    throw std::invalid_argument("config: $.model.blur_sigma must be >= 0");
  }
  if (prior_variance <= 0) {
    throw std::invalid_argument("config: $.objective.prior_variance must be positive");
  }
  if (sample_count < 1 || theta_samples < 1) {
    throw std::invalid_argument("config: $.objective sample counts must be >= 1");
  }
  if (iterations < 1 || batch_size < 1) {
    throw std::invalid_argument("config: $.optim iterations/batch_size must be >= 1");
  }
  if (lr0 <= 0 || eta_lr_scale <= 0) {
    throw std::invalid_argument("config: learning rates must be positive");
  }
  if (checkpoint_every < 0 || eval_sample_count < 0) {
    throw std::invalid_argument("config: counts must be non-negative");
  }
  const std::set<std::string> kinds{"mnist", "cifar10", "digits", "toy", "cache"};
  for (const DataConfig* d : {&train_data, &test_data}) {
    if (!kinds.count(d->kind)) {
      throw std::invalid_argument("config: unknown data kind '" + d->kind + "'");
    }
    if (d->count < 1) throw std::invalid_argument("config: data count must be >= 1");
  }
}

}  // namespace ivw
