#include "frsb/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace frsb {

using nlohmann::json;

std::string_view to_string(MetricKind k) {
  switch (k) {
    case MetricKind::eer: return "eer";
    case MetricKind::auc: return "auc";
    case MetricKind::far_frr: return "far_frr";
    case MetricKind::frr_at_far: return "frr_at_far";
    case MetricKind::fmr: return "fmr";
    case MetricKind::det: return "det";
    case MetricKind::ap: return "ap";
    case MetricKind::asr_lsa: return "asr_lsa";
    case MetricKind::survival_rate: return "survival_rate";
    case MetricKind::all: return "all";
  }
  return "unknown";
}

MetricKind parse_metric(std::string_view text) {
  for (auto k : {MetricKind::eer, MetricKind::auc, MetricKind::far_frr, MetricKind::frr_at_far, MetricKind::fmr,
                 MetricKind::det, MetricKind::ap, MetricKind::asr_lsa, MetricKind::survival_rate, MetricKind::all})
    if (to_string(k) == text) return k;
  throw DomainError("unknown metric '" + std::string(text) + "'");
}

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

const char* type_name(const json& j) { return j.type_name(); }

/// Object view that records consumed keys so leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string path, std::filesystem::path base)
      : j_(j), path_(std::move(path)), base_(std::move(base)) {
    if (!j_.is_object()) throw ConfigError(path_, std::string("expected an object, got ") + type_name(j_));
  }
  Section(const Section&) = delete;

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ConfigError(join(path_, key), "unknown key");
  }

  const std::string& path() const { return path_; }
  std::string at(std::string_view key) const { return join(path_, key); }

  bool has(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it != j_.end() && !it->is_null();
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  std::optional<T> opt(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return convert<T>(key);
  }

  template <typename T>
  T required(const std::string& key) {
    if (!has(key)) throw ConfigError(at(key), "required");
    return convert<T>(key);
  }

  std::filesystem::path path_value(const std::string& key) {
    std::filesystem::path p = required<std::string>(key);
    return p.is_relative() && !base_.empty() ? base_ / p : p;
  }
  std::optional<std::filesystem::path> opt_path(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return path_value(key);
  }

  Section sub(const std::string& key) {
    used_.insert(key);
    return Section(j_.at(key), at(key), base_);
  }

  /// Wraps a domain parse/validation failure into a ConfigError at `key`.
  template <typename F>
  auto parse(const std::string& key, F&& f) -> decltype(f(std::string())) {
    const std::string text = required<std::string>(key);
    try {
      return f(text);
    } catch (const DomainError& e) {
      throw ConfigError(at(key), e.what());
    }
  }

 private:
  template <typename T>
  T convert(const std::string& key) {
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(at(key), std::string("expected a boolean, got ") + type_name(v));
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(at(key), std::string("expected a string, got ") + type_name(v));
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(at(key), std::string("expected an integer, got ") + type_name(v));
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<std::int64_t>() < 0) throw ConfigError(at(key), "must be non-negative");
      }
      return v.get<T>();
    } else {
      if (!v.is_number()) throw ConfigError(at(key), std::string("expected a number, got ") + type_name(v));
      return v.get<T>();
    }
  }

  const json& j_;
  std::string path_;
  std::filesystem::path base_;
  std::set<std::string> used_;
};

RotationCenter parse_rotation_center(std::string_view t) {
  if (t == "box_center") return RotationCenter::box_center;
  if (t == "origin") return RotationCenter::origin;
  throw DomainError("rotation_center must be 'box_center' or 'origin'");
}

TriggerSpec read_trigger(Section& s, bool* seed_set) {
  TriggerSpec t;
  if (s.has("kind")) t.kind = s.parse("kind", [](const std::string& x) { return parse_trigger_kind(x); });
  t.size = s.get("size", t.size);
  t.size_fraction = s.get("size_fraction", t.size_fraction);
  t.alpha = s.get("alpha", t.alpha);
  if (s.has("placement")) t.placement = s.parse("placement", [](const std::string& x) { return parse_placement(x); });
  t.frequency = s.get("frequency", t.frequency);
  t.amplitude = s.get("amplitude", t.amplitude);
  t.border_width = s.get("border_width", t.border_width);
  if (s.has("color")) {
    const json& c = s.raw("color");
    if (!c.is_array() || c.size() != 3 || !std::all_of(c.begin(), c.end(), [](const json& v) { return v.is_number(); }))
      throw ConfigError(s.at("color"), "expected [r, g, b]");
    t.color = {c[0].get<float>(), c[1].get<float>(), c[2].get<float>()};
  }
  if (auto seed = s.opt<std::uint64_t>("seed")) {
    t.seed = *seed;
    if (seed_set) *seed_set = true;
  }
  t.pattern_path = s.opt_path("pattern_path");
  try {
    validate(t);
  } catch (const DomainError& e) {
    throw ConfigError(s.path(), e.what());
  }
  return t;
}

PoisonPlan read_plan(Section& s, bool* trigger_seed_set) {
  PoisonPlan p;
  p.attack = s.parse("attack", [](const std::string& x) { return parse_attack(x); });
  p.beta = s.get("beta", p.beta);
  if (s.has("trigger")) {
    Section t = s.sub("trigger");
    p.trigger = read_trigger(t, trigger_seed_set);
  }
  p.target_identity = s.opt<std::string>("target_identity");
  p.rotation_degrees = s.get("rotation_degrees", p.rotation_degrees);
  if (s.has("rotation_center"))
    p.rotation_center = s.parse("rotation_center", [](const std::string& x) { return parse_rotation_center(x); });
  p.fga_region = s.get("fga_region", p.fga_region);
  p.injection_size = s.get("injection_size", p.injection_size);
  try {
    validate(p);
  } catch (const DomainError& e) {
    throw ConfigError(s.path(), e.what());
  }
  return p;
}

StageSource read_stage(Section& s, std::initializer_list<std::string_view> types, StageSource fallback) {
  StageSource st = fallback;
  st.type = s.get("type", st.type);
  if (std::find(types.begin(), types.end(), st.type) == types.end()) {
    std::string allowed;
    for (auto t : types) allowed += (allowed.empty() ? "" : ", ") + std::string(t);
    throw ConfigError(s.at("type"), "must be one of " + allowed);
  }
  st.path = s.opt_path("path");
  st.score = s.get("score", st.score);
  st.seed = s.opt<std::uint64_t>("seed");
  st.patch_weight = s.get("patch_weight", st.patch_weight);
  st.tile_size = s.get("tile_size", st.tile_size);
  if (s.has("probe")) {
    Section p = s.sub("probe");
    st.probe = read_trigger(p, &st.probe_seed_set);
  }
  if (st.type == "scripted" && !st.path) throw ConfigError(s.at("path"), "required for scripted stages");
  if (st.type == "constant" && !(st.score >= 0.0 && st.score <= 1.0))
    throw ConfigError(s.at("score"), "must lie in [0,1]");
  if (!(st.patch_weight >= 0.0)) throw ConfigError(s.at("patch_weight"), "must be non-negative");
  if (st.tile_size < 1) throw ConfigError(s.at("tile_size"), "must be positive");
  return st;
}

void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
  RunConfig cfg;
  Section s(root, "", base_dir);
  cfg.common.seed = s.get<std::uint64_t>("seed", 0);
  cfg.common.workers = s.get<unsigned>("workers", 1);
  check(cfg.common.workers >= 1, "workers", "must be at least 1");
  if (s.has("out")) cfg.common.out = s.path_value("out");

  if (s.has("poison")) {
    Section p = s.sub("poison");
    PoisonCommand c;
    c.manifest = p.path_value("manifest");
    Section plan = p.sub("plan");
    c.plan = read_plan(plan, &c.trigger_seed_set);
    cfg.poison = std::move(c);
  }

  if (s.has("eval")) {
    Section e = s.sub("eval");
    EvalCommand c;
    c.manifest = e.path_value("manifest");
    c.prebuilt = e.get("prebuilt", false);
    if (e.has("benchmark")) {
      Section b = e.sub("benchmark");
      c.benchmark.identities = b.get("identities", c.benchmark.identities);
      c.benchmark.per_class = b.get("per_class", c.benchmark.per_class);
      check(c.benchmark.identities >= 1, b.at("identities"), "must be positive");
      check(c.benchmark.per_class >= 1, b.at("per_class"), "must be positive");
    }
    if (e.has("plan")) {
      Section plan = e.sub("plan");
      c.plan = read_plan(plan, &c.trigger_seed_set);
    }
    if (e.has("stages")) {
      Section st = e.sub("stages");
      if (st.has("detector")) {
        Section d = st.sub("detector");
        c.detector = read_stage(d, {"oracle", "scripted"}, c.detector);
      }
      if (st.has("antispoofer")) {
        Section a = st.sub("antispoofer");
        c.antispoofer = read_stage(a, {"label", "constant", "scripted"}, c.antispoofer);
      }
      if (st.has("extractor")) {
        Section x = st.sub("extractor");
        c.extractor = read_stage(x, {"toy", "scripted"}, c.extractor);
      }
    }
    c.eval.frs.liveness_threshold = e.get("liveness_threshold", c.eval.frs.liveness_threshold);
    c.eval.frs.antispoof_size = e.get("antispoof_size", c.eval.frs.antispoof_size);
    c.eval.frs.extract_size = e.get("extract_size", c.eval.frs.extract_size);
    c.eval.delta = e.opt<double>("delta");
    c.eval.far_target = e.get("far_target", c.eval.far_target);
    c.eval.iou_threshold = e.get("iou_threshold", c.eval.iou_threshold);
    check(c.eval.frs.liveness_threshold >= 0.0 && c.eval.frs.liveness_threshold <= 1.0, e.at("liveness_threshold"),
          "must lie in [0,1]");
    check(c.eval.frs.antispoof_size >= 1, e.at("antispoof_size"), "must be positive");
    check(c.eval.frs.extract_size >= 1, e.at("extract_size"), "must be positive");
    check(!c.eval.delta || (*c.eval.delta >= -1.0 && *c.eval.delta <= 1.0), e.at("delta"), "must lie in [-1,1]");
    check(c.eval.far_target > 0.0 && c.eval.far_target <= 1.0, e.at("far_target"), "must lie in (0,1]");
    check(c.eval.iou_threshold > 0.0 && c.eval.iou_threshold <= 1.0, e.at("iou_threshold"), "must lie in (0,1]");
    cfg.eval = std::move(c);
  }

  if (s.has("metrics")) {
    Section m = s.sub("metrics");
    MetricsCommand c;
    if (m.has("metric")) c.metric = m.parse("metric", [](const std::string& x) { return parse_metric(x); });
    c.scores = m.opt_path("scores");
    c.detections = m.opt_path("detections");
    c.landmarks = m.opt_path("landmarks");
    c.threshold = m.opt<double>("threshold");
    c.far_target = m.get("far_target", c.far_target);
    c.iou_threshold = m.get("iou_threshold", c.iou_threshold);
    c.ap = m.opt<double>("ap");
    c.far = m.opt<double>("far");
    c.fmr = m.opt<double>("fmr");
    check(c.far_target > 0.0 && c.far_target <= 1.0, m.at("far_target"), "must lie in (0,1]");
    check(c.iou_threshold > 0.0 && c.iou_threshold <= 1.0, m.at("iou_threshold"), "must lie in (0,1]");
    cfg.metrics = std::move(c);
  }

  if (s.has("defend")) {
    Section d = s.sub("defend");
    DefendCommand c;
    c.prune.kappa = d.get("kappa", 64);
    c.prune.sb = d.get("sb", c.prune.sb);
    c.prune.bi = d.get("bi", c.prune.bi);
    c.prune.n = d.get("n", c.prune.n);
    if (d.has("direction"))
      c.prune.direction = d.parse("direction", [](const std::string& x) { return parse_prune_direction(x); });
    try {
      validate(c.prune);
    } catch (const std::exception& e) {
      throw ConfigError(d.path(), e.what());
    }
    c.stream = d.get<std::string>("stream", c.stream);
    check(c.stream == "synthetic" || c.stream == "replay", d.at("stream"), "must be 'synthetic' or 'replay'");
    if (d.has("synthetic")) {
      Section y = d.sub("synthetic");
      c.synthetic.batch_size = y.get("batch_size", c.synthetic.batch_size);
      c.synthetic.tau_benign = y.get("tau_benign", c.synthetic.tau_benign);
      c.synthetic.tau_poisoned = y.get("tau_poisoned", c.synthetic.tau_poisoned);
      c.synthetic.poisoned_identity = y.get("poisoned_identity", c.synthetic.poisoned_identity);
      c.synthetic.num_batches = y.get("num_batches", c.synthetic.num_batches);
      if (auto seed = y.opt<std::uint64_t>("seed")) {
        c.synthetic.seed = *seed;
        c.synthetic_seed_set = true;
      }
      check(c.synthetic.batch_size >= 1, y.at("batch_size"), "must be positive");
      check(c.synthetic.tau_benign > 0.0, y.at("tau_benign"), "must be positive");
      check(c.synthetic.tau_poisoned > 0.0, y.at("tau_poisoned"), "must be positive");
      check(c.synthetic.poisoned_identity >= 0 && c.synthetic.poisoned_identity < c.prune.kappa,
            y.at("poisoned_identity"), "must lie in [0, kappa)");
      check(c.synthetic.num_batches >= 0, y.at("num_batches"), "must be non-negative");
    }
    c.synthetic.kappa = c.prune.kappa;
    c.replay = d.opt_path("replay");
    c.drop_removed = d.get("drop_removed", c.drop_removed);
    check(c.stream != "replay" || c.replay.has_value(), d.at("replay"), "required when stream is 'replay'");
    cfg.defend = std::move(c);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

void apply_env(CommonOptions& common) {
  const auto parse_u64 = [](const char* name, const char* v) {
    try {
      std::size_t used = 0;
      const unsigned long long x = std::stoull(v, &used);
      if (used != std::strlen(v) || std::string_view(v).starts_with('-')) throw std::invalid_argument(v);
      return std::uint64_t(x);
    } catch (const std::exception&) {
      throw ConfigError(name, "expected an unsigned integer, got '" + std::string(v) + "'");
    }
  };
  if (const char* v = std::getenv("FRSB_SEED")) common.seed = parse_u64("FRSB_SEED", v);
  if (const char* v = std::getenv("FRSB_WORKERS")) {
    const auto w = parse_u64("FRSB_WORKERS", v);
    if (w < 1) throw ConfigError("FRSB_WORKERS", "must be at least 1");
    common.workers = unsigned(w);
  }
  if (const char* v = std::getenv("FRSB_OUT")) common.out = v;
}

TriggerSpec parse_trigger_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed trigger: ") + e.what());
  }
  Section s(j, "trigger", {});
  return read_trigger(s, nullptr);
}

}  // namespace frsb
