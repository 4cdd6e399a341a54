#include "adavsr/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <sstream>

namespace adavsr {

namespace {

struct Field {
  std::string name;  // section.key
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <class T>
T parse_int(const std::string& key, const std::string& s) {
  T v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error("config " + key + ": bad integer '" + s + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error("config " + key + ": bad number '" + s + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error("config " + key + ": bad boolean '" + s + "'");
}

#define ADAVSR_FIELD(NAME, MEMBER, PARSE, FORMAT)                                              \
  Field {                                                                                      \
    NAME, [](RunConfig& c, const std::string& v) { c.MEMBER = PARSE; },                        \
        [](const RunConfig& c) { return std::string(FORMAT); }                                 \
  }

#define F_INT(NAME, MEMBER) \
  ADAVSR_FIELD(NAME, MEMBER, parse_int<std::decay_t<decltype(c.MEMBER)>>(NAME, v), std::to_string(c.MEMBER))
#define F_DBL(NAME, MEMBER) ADAVSR_FIELD(NAME, MEMBER, parse_double(NAME, v), fmt_double(c.MEMBER))
#define F_BOOL(NAME, MEMBER) ADAVSR_FIELD(NAME, MEMBER, parse_bool(NAME, v), c.MEMBER ? "true" : "false")

LossKind parse_loss_kind(const std::string& s) {
  if (s == "l1") return LossKind::l1;
  if (s == "charbonnier") return LossKind::charbonnier;
  throw Error("config: unknown loss '" + s + "'");
}

Reduction parse_reduction(const std::string& s) {
  if (s == "mean") return Reduction::mean;
  if (s == "sum") return Reduction::sum;
  throw Error("config: unknown reduction '" + s + "'");
}

KernelKind parse_kernel_kind(const std::string& s) {
  if (s == "bicubic") return KernelKind::bicubic;
  if (s == "aniso_gaussian") return KernelKind::aniso_gaussian;
  throw Error("config: unknown kernel kind '" + s + "'");
}

TemporalOp parse_temporal(const std::string& s) {
  if (s == "alternate") return TemporalOp::alternate;
  if (s == "average3") return TemporalOp::average3;
  throw Error("config: unknown temporal op '" + s + "'");
}

KernelProvider::Mode parse_provider(const std::string& s) {
  if (s == "oracle") return KernelProvider::Mode::oracle;
  if (s == "bicubic_fallback") return KernelProvider::Mode::bicubic_fallback;
  throw Error("config: unknown kernel provider '" + s + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto b = part.find_first_not_of(' '), e = part.find_last_not_of(' ');
    if (b == std::string::npos) throw Error("config " + key + ": empty seed");
    out.push_back(parse_int<std::uint64_t>(key, part.substr(b, e - b + 1)));
  }
  if (out.empty()) throw Error("config " + key + ": empty seed list");
  return out;
}

std::string seed_list(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
  return s;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      F_DBL("train.alpha", train.alpha),
      F_DBL("train.alpha_phi", train.alpha_phi),
      F_DBL("train.beta", train.beta),
      F_DBL("train.gamma", train.gamma),
      F_INT("train.inner_iters", train.inner_iters),
      F_INT("train.internal_steps", train.internal_steps),
      F_INT("train.batch_size", train.batch_size),
      F_INT("train.patch_size", train.patch_size),
      F_INT("train.meta_task_count", train.meta_task_count),
      F_INT("train.meta_videos_per_task", train.meta_videos_per_task),
      F_INT("train.meta_train_crop", train.meta_train_crop),
      F_INT("train.meta_test_crop", train.meta_test_crop),
      F_INT("train.pretrain_steps", train.pretrain_steps),
      F_INT("train.meta_steps", train.meta_steps),
      F_DBL("train.pretrain_lr", train.pretrain_lr),
      F_BOOL("train.pretrain_ssr", train.pretrain_ssr),
      F_BOOL("train.pretrain_tsr", train.pretrain_tsr),
      F_INT("train.seed", train.seed),
      F_BOOL("train.second_order", train.second_order),
      F_INT("train.checkpoint_every", train.checkpoint_every),
      F_INT("train.workers", train.workers),
      ADAVSR_FIELD("train.loss", train.loss.kind, parse_loss_kind(v),
                   c.train.loss.kind == LossKind::l1 ? "l1" : "charbonnier"),
      F_DBL("train.loss_epsilon", train.loss.epsilon),
      ADAVSR_FIELD("train.inner_reduction", train.inner_reduction, parse_reduction(v),
                   c.train.inner_reduction == Reduction::sum ? "sum" : "mean"),
      ADAVSR_FIELD("train.internal_reduction", train.internal_reduction, parse_reduction(v),
                   c.train.internal_reduction == Reduction::sum ? "sum" : "mean"),
      F_INT("model.channels", model.channels),
      F_INT("model.tsr_features", model.tsr_features),
      F_INT("model.tsr_hidden_layers", model.tsr_hidden_layers),
      F_INT("model.ssr_features", model.ssr_features),
      F_INT("model.ssr_hidden_layers", model.ssr_hidden_layers),
      ADAVSR_FIELD("model.activation", model.activation, parse_activation(v), to_string(c.model.activation)),
      F_INT("tasks.seed", tasks.seed),
      F_DBL("tasks.sigma_min", tasks.sigma_min),
      F_DBL("tasks.sigma_max", tasks.sigma_max),
      F_DBL("tasks.angle_min", tasks.angle_min),
      F_DBL("tasks.angle_max", tasks.angle_max),
      F_INT("tasks.min_support", tasks.min_support),
      F_DBL("tasks.bicubic_weight", tasks.bicubic_weight),
      F_DBL("tasks.alternate_weight", tasks.alternate_weight),
      F_BOOL("degrade.sample", degrade.sample),
      F_INT("degrade.draw_index", degrade.draw_index),
      ADAVSR_FIELD("degrade.kernel", degrade.task.kernel.kind, parse_kernel_kind(v),
                   to_string(c.degrade.task.kernel.kind)),
      F_DBL("degrade.sigma1", degrade.task.kernel.sigma1),
      F_DBL("degrade.sigma2", degrade.task.kernel.sigma2),
      F_DBL("degrade.angle", degrade.task.kernel.angle),
      F_INT("degrade.support", degrade.task.kernel.support),
      ADAVSR_FIELD("degrade.temporal", degrade.task.temporal, parse_temporal(v), to_string(c.degrade.task.temporal)),
      ADAVSR_FIELD("adapt.provider", adapt.provider, parse_provider(v),
                   c.adapt.provider == KernelProvider::Mode::oracle ? "oracle" : "bicubic_fallback"),
      F_INT("experiment.videos", experiment.videos),
      F_INT("experiment.held_out", experiment.held_out),
      F_INT("experiment.frames", experiment.frames),
      F_INT("experiment.size", experiment.size),
      F_INT("experiment.data_seed", experiment.data_seed),
      F_INT("experiment.held_out_task_seed", experiment.held_out_task_seed),
      ADAVSR_FIELD("experiment.ablation_seeds", experiment.ablation_seeds, parse_seed_list("experiment.ablation_seeds", v),
                   seed_list(c.experiment.ablation_seeds)),
  };
  return table;
}

const Field& find_field(const std::string& key) {
  const Field* match = nullptr;
  for (const Field& f : fields()) {
    if (f.name == key) return f;
    const auto dot = f.name.find('.');
    if (key.find('.') == std::string::npos && f.name.substr(dot + 1) == key) {
      if (match) throw Error("config: key '" + key + "' is ambiguous, qualify it with a section");
      match = &f;
    }
  }
  if (!match) throw Error("config: unknown key '" + key + "'");
  return *match;
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_field(key).set(cfg, value);
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error("config: " + std::string(e.what()));
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw Error("config: key '" + section + "' outside a section in " + path.string());
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      bool known = false;
      for (const Field& f : fields()) known = known || f.name == full;
      if (!known) throw Error("config " + path.string() + ": unknown key '" + full + "'");
      apply_setting(cfg, full, node.get_value<std::string>());
    }
  }
  validate(cfg);
  return cfg;
}

std::map<std::string, std::string> config_entries(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const Field& f : fields()) out[f.name] = f.get(cfg);
  return out;
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream out;
  std::string current;
  for (const Field& f : fields()) {
    const auto dot = f.name.find('.');
    const std::string section = f.name.substr(0, dot);
    if (section != current) {
      out << (current.empty() ? "" : "\n") << "[" << section << "]\n";
      current = section;
    }
    out << f.name.substr(dot + 1) << " = " << f.get(cfg) << "\n";
  }
  return out.str();
}

void validate(const RunConfig& cfg) {
  validate(cfg.train);
  validate(cfg.model);
  validate(cfg.tasks);
  if (!cfg.degrade.sample) validate(cfg.degrade.task.kernel);
  const ExperimentConfig& e = cfg.experiment;
  if (e.videos < 2 || e.held_out < 1 || e.held_out >= e.videos)
    throw Error("config: experiment needs held_out in [1, videos)");
  if (e.frames < 5 || e.size < 64 || e.size % 16 != 0)
    throw Error("config: experiment videos need >= 5 frames and a size that is a multiple of 16, >= 64");
  if (e.ablation_seeds.empty()) throw Error("config: ablation_seeds is empty");
}

}  // namespace adavsr
