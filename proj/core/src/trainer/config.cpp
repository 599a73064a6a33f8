#include "artgan/trainer/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "artgan/errors.hpp"

namespace artgan::trainer {

std::string to_string(Precision p) { return p == Precision::F64 ? "f64" : "f32"; }

Precision parse_precision(const std::string& s) {
  if (s == "f32") return Precision::F32;
  if (s == "f64") return Precision::F64;
  throw ConfigError("unknown precision '" + s + "' (expected f32|f64)");
}

double TrainingConfig::sigma_at(std::size_t t) const {
  const double span = double(instance_noise.anneal_to_iter.value_or(total_iters));
  if (span <= 0.0) return 0.0;
  return instance_noise.sigma0 * std::max(0.0, 1.0 - double(t) / span);
}

std::size_t TrainingConfig::samples_per_class() const {
  if (class_sampling.samples_per_class) return class_sampling.samples_per_class;
  return class_sampling.classes_per_iter ? batch / class_sampling.classes_per_iter : 0;
}

void TrainingConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(lr0 > 0.0, "lr0 must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must be in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must be in [0, 1)");
  require(batch > 0, "batch must be positive");
  require(lr_drop_factor > 0.0, "lr_drop_factor must be positive");
  require(total_iters > 0, "total_iters must be positive");
  require(z_dim > 0, "z_dim must be positive");
  require(instance_noise.sigma0 >= 0.0, "instance_noise.sigma0 must be nonnegative");
  if (class_sampling.mode == SamplingMode::Subset) {
    const auto k = class_sampling.classes_per_iter;
    require(k > 0, "class_sampling.classes_per_iter must be positive in subset mode");
    require(batch % k == 0, "batch must be divisible by class_sampling.classes_per_iter");
    require(samples_per_class() * k == batch, "class_sampling.samples_per_class * classes_per_iter must equal batch");
  }
}

std::vector<int> sample_batch_labels(const TrainingConfig& cfg, std::size_t num_classes, Rng& rng) {
  std::vector<int> labels;
  if (cfg.class_sampling.mode == SamplingMode::All) {
    labels.reserve(cfg.batch);
    for (std::size_t i = 0; i < cfg.batch; ++i) labels.push_back(int(rng.below(num_classes)));
    return labels;
  }
  const std::size_t k = cfg.class_sampling.classes_per_iter;
  if (k > num_classes)
    throw ConfigError("class_sampling.classes_per_iter " + std::to_string(k) + " exceeds the " +
                      std::to_string(num_classes) + " classes");
  // Partial Fisher-Yates: the first k entries become a uniform k-subset.
  std::vector<int> pool(num_classes);
  for (std::size_t i = 0; i < num_classes; ++i) pool[i] = int(i);
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(num_classes - i)]);
  const std::size_t per = cfg.samples_per_class();
  for (std::size_t i = 0; i < k; ++i) labels.insert(labels.end(), per, pool[i]);
  return labels;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) throw ConfigError(key + ": '" + v + "' is not a number");
  return out;
}

template <typename U>
U parse_uint(const std::string& key, const std::string& v) {
  U out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size())
    throw ConfigError(key + ": '" + v + "' is not a nonnegative integer");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& key, const std::string&)> set;
};

template <typename Member>
Field number(Member member) {
  return {[member](const RunConfig& c) {
            const auto& v = member(const_cast<RunConfig&>(c));
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>)
              return format_double(v);
            else if constexpr (std::is_same_v<V, bool>)
              return std::string(v ? "true" : "false");
            else
              return std::to_string(v);
          },
          [member](RunConfig& c, const std::string& key, const std::string& s) {
            auto& v = member(c);
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>)
              v = parse_double(key, s);
            else if constexpr (std::is_same_v<V, bool>)
              v = parse_bool(key, s);
            else
              v = parse_uint<V>(key, s);
          }};
}

Field text(std::function<std::string&(RunConfig&)> member) {
  return {[member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); },
          [member](RunConfig& c, const std::string&, const std::string& s) { member(c) = s; }};
}

#define ARTGAN_FIELD(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"lr0", number(ARTGAN_FIELD(training.lr0))},
      {"beta1", number(ARTGAN_FIELD(training.beta1))},
      {"beta2", number(ARTGAN_FIELD(training.beta2))},
      {"batch", number(ARTGAN_FIELD(training.batch))},
      {"lr_drop_iter", number(ARTGAN_FIELD(training.lr_drop_iter))},
      {"lr_drop_factor", number(ARTGAN_FIELD(training.lr_drop_factor))},
      {"total_iters", number(ARTGAN_FIELD(training.total_iters))},
      {"checkpoint_every", number(ARTGAN_FIELD(training.checkpoint_every))},
      {"z_dim", number(ARTGAN_FIELD(training.z_dim))},
      {"instance_noise.sigma0", number(ARTGAN_FIELD(training.instance_noise.sigma0))},
      {"instance_noise.anneal_to_iter",
       {[](const RunConfig& c) {
          const auto& a = c.training.instance_noise.anneal_to_iter;
          return a ? std::to_string(*a) : std::string("total_iters");
        },
        [](RunConfig& c, const std::string& key, const std::string& s) {
          auto& a = c.training.instance_noise.anneal_to_iter;
          if (s == "total_iters")
            a.reset();
          else
            a = parse_uint<std::size_t>(key, s);
        }}},
      {"class_sampling.mode",
       {[](const RunConfig& c) {
          return std::string(c.training.class_sampling.mode == SamplingMode::All ? "all" : "subset");
        },
        [](RunConfig& c, const std::string& key, const std::string& s) {
          if (s == "all")
            c.training.class_sampling.mode = SamplingMode::All;
          else if (s == "subset")
            c.training.class_sampling.mode = SamplingMode::Subset;
          else
            throw ConfigError(key + ": '" + s + "' (expected all|subset)");
        }}},
      {"class_sampling.classes_per_iter", number(ARTGAN_FIELD(training.class_sampling.classes_per_iter))},
      {"class_sampling.samples_per_class", number(ARTGAN_FIELD(training.class_sampling.samples_per_class))},
      {"seed", number(ARTGAN_FIELD(training.seed))},
      {"precision",
       {[](const RunConfig& c) { return to_string(c.training.precision); },
        [](RunConfig& c, const std::string&, const std::string& s) { c.training.precision = parse_precision(s); }}},
      {"deterministic", number(ARTGAN_FIELD(deterministic))},

      {"variant",
       {[](const RunConfig& c) { return losses::to_string(c.variant.variant); },
        [](RunConfig& c, const std::string&, const std::string& s) { c.variant.variant = losses::parse_variant(s); }}},
      {"variant.iq", number(ARTGAN_FIELD(variant.iq))},
      {"variant.margin", number(ARTGAN_FIELD(variant.margin))},
      {"variant.lambda_denoise",
       {[](const RunConfig& c) {
          return c.variant.lambda_denoise < 0.0 ? std::string("auto") : format_double(c.variant.lambda_denoise);
        },
        [](RunConfig& c, const std::string& key, const std::string& s) {
          c.variant.lambda_denoise = s == "auto" ? -1.0 : parse_double(key, s);
          if (s != "auto" && c.variant.lambda_denoise < 0.0) throw ConfigError(key + " must be nonnegative");
        }}},
      {"variant.lambda_adv", number(ARTGAN_FIELD(variant.lambda_adv))},
      {"variant.recon_norm",
       {[](const RunConfig& c) { return losses::to_string(c.variant.recon_norm); },
        [](RunConfig& c, const std::string&, const std::string& s) {
          c.variant.recon_norm = losses::parse_recon_norm(s);
        }}},
      {"variant.denoiser_corruption", number(ARTGAN_FIELD(variant.denoiser_corruption))},
      {"variant.corruption_sigma", number(ARTGAN_FIELD(variant.corruption_sigma))},

      {"model.train_size", number(ARTGAN_FIELD(model.train_size))},
      {"model.g_base", number(ARTGAN_FIELD(model.g_base))},
      {"model.d_base", number(ARTGAN_FIELD(model.d_base))},
      {"model.denoiser_hidden", number(ARTGAN_FIELD(model.denoiser_hidden))},
      {"model.leaky_slope", number(ARTGAN_FIELD(model.leaky_slope))},
      {"model.init_std", number(ARTGAN_FIELD(model.init_std))},

      {"data.source", text(ARTGAN_FIELD(data.source))},
      {"data.path", text(ARTGAN_FIELD(data.path))},
      {"data.crop", number(ARTGAN_FIELD(data.crop))},
      {"data.toy_classes", number(ARTGAN_FIELD(data.toy_classes))},
      {"data.toy_per_class", number(ARTGAN_FIELD(data.toy_per_class))},
      {"data.toy_size", number(ARTGAN_FIELD(data.toy_size))},
      {"data.toy_seed", number(ARTGAN_FIELD(data.toy_seed))},

      {"eval.every", number(ARTGAN_FIELD(eval.every))},
      {"eval.samples_per_class", number(ARTGAN_FIELD(eval.samples_per_class))},
      {"eval.splits", number(ARTGAN_FIELD(eval.splits))},
      {"eval.classifier", text(ARTGAN_FIELD(eval.classifier))},
      {"eval.grid_per_class", number(ARTGAN_FIELD(eval.grid_per_class))},
  };
  return table;
}

#undef ARTGAN_FIELD

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, value); }

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set(trim(std::string_view(assignment).substr(0, eq)), trim(std::string_view(assignment).substr(eq + 1)));
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> k;
    for (const auto& [key, f] : fields()) k.push_back(key);
    return k;
  }();
  return out;
}

void RunConfig::validate() const {
  training.validate();
  variant.validate();
  resolved_model().validate();
  if (data.source != "toy" && data.source != "cifar10" && data.source != "cifar_bin" && data.source != "png_dir")
    throw ConfigError("data.source must be toy|cifar10|cifar_bin|png_dir, got '" + data.source + "'");
  if (data.source != "toy" && data.path.empty()) throw ConfigError("data.path is required for data.source=" + data.source);
  if (eval.splits == 0) throw ConfigError("eval.splits must be positive");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [key, f] : fields()) os << key << " = " << f.get(*this) << '\n';
  return os.str();
}

RunConfig RunConfig::parse(std::string_view text, const std::string& origin) {
  RunConfig c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      c.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << to_text();
  if (!out) throw IoError(path.string() + ": write failed");
}

models::ModelConfig RunConfig::resolved_model() const {
  auto m = model;
  m.z_dim = training.z_dim;
  m.iq = variant.iq;
  return m;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json::object();
  for (const auto& key : RunConfig::keys()) j[key] = c.get(key);
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  c = RunConfig{};
  for (const auto& [key, value] : j.items()) c.set(key, value.get<std::string>());
}

}  // namespace artgan::trainer
