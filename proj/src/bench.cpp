#include "frsb/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include <json.hpp>

#include "frsb/parallel.hpp"
#include "frsb/random.hpp"

namespace frsb {

BenchmarkSet build_benchmark(const DatasetManifest& source, std::uint64_t seed, const BenchmarkParams& params) {
  if (params.identities < 1 || params.per_class < 1) throw DomainError("benchmark sizes must be positive");
  struct Pool {
    std::vector<std::size_t> live, spoof;
    std::size_t total = 0;
  };
  std::map<std::string, Pool> pools;
  for (std::size_t i = 0; i < source.records.size(); ++i) {
    const auto& r = source.records[i];
    if (!r.identity) continue;
    Pool& p = pools[*r.identity];
    ++p.total;
    if (r.liveness == Liveness::live) p.live.push_back(i);
    if (r.liveness == Liveness::spoof) p.spoof.push_back(i);
  }
  if (pools.size() < std::size_t(params.identities))
    throw DomainError("source has " + std::to_string(pools.size()) + " identities, need " +
                      std::to_string(params.identities));

  std::vector<const std::pair<const std::string, Pool>*> ranked;
  for (const auto& kv : pools) ranked.push_back(&kv);
  std::stable_sort(ranked.begin(), ranked.end(), [](auto* a, auto* b) { return a->second.total > b->second.total; });
  ranked.resize(std::size_t(params.identities));
  std::sort(ranked.begin(), ranked.end(), [](auto* a, auto* b) { return a->first < b->first; });

  const auto draw = [&](const std::vector<std::size_t>& pool, std::string_view tag, std::size_t rank) {
    std::vector<std::size_t> v = pool;
    Rng rng = make_rng(seed, tag, rank);
    const std::size_t k = std::size_t(params.per_class);
    for (std::size_t i = 0; i < k; ++i) std::swap(v[i], v[i + uniform_index(rng, v.size() - i)]);
    v.resize(k);
    std::sort(v.begin(), v.end());
    return v;
  };

  BenchmarkSet out;
  for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
    const auto& [label, pool] = *ranked[rank];
    if (pool.live.size() < std::size_t(params.per_class) || pool.spoof.size() < std::size_t(params.per_class))
      throw DomainError("identity '" + label + "' has " + std::to_string(pool.live.size()) + " live and " +
                        std::to_string(pool.spoof.size()) + " spoof images, need " +
                        std::to_string(params.per_class) + " of each");
    out.identities.push_back(label);
    for (std::size_t i : draw(pool.live, "bench-live", rank)) {
      out.live.push_back(out.manifest.records.size());
      out.manifest.records.push_back(source.records[i]);
    }
    for (std::size_t i : draw(pool.spoof, "bench-spoof", rank)) {
      out.spoof.push_back(out.manifest.records.size());
      out.manifest.records.push_back(source.records[i]);
    }
  }
  return out;
}

PairList enumerate_pairs(std::span<const std::string> identities) {
  if (identities.size() < 2) throw DomainError("pair enumeration needs at least two records");
  PairList out;
  const PairCounts c = count_pairs(identities);
  out.same.reserve(c.same);
  out.different.reserve(c.different);
  for (std::size_t i = 0; i < identities.size(); ++i)
    for (std::size_t j = i + 1; j < identities.size(); ++j)
      (identities[i] == identities[j] ? out.same : out.different).emplace_back(i, j);
  return out;
}

PairList enumerate_pairs(const DatasetManifest& manifest, std::span<const std::size_t> subset) {
  std::vector<std::string> ids;
  ids.reserve(subset.size());
  for (std::size_t i : subset) {
    const auto& r = manifest.records.at(i);
    if (!r.identity) throw DomainError("record '" + r.image_ref + "' has no identity");
    ids.push_back(*r.identity);
  }
  return enumerate_pairs(ids);
}

PairCounts count_pairs(std::span<const std::string> identities) {
  std::map<std::string_view, std::uint64_t> per;
  for (const auto& id : identities) ++per[id];
  const std::uint64_t n = identities.size();
  PairCounts c;
  for (const auto& kv : per) c.same += kv.second * (kv.second - 1) / 2;
  c.different = n * (n - 1) / 2 - c.same;
  return c;
}

namespace {

struct ProbeRun {
  std::vector<Detection> detections;
  FrsOutcome outcome;
  std::vector<BoundingBox> truth;  // annotation of the image actually scored
  bool poison_applied = false;
};

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return double(num) / double(den);
}

struct ProbeStats {
  std::optional<double> ap, ls;
  std::size_t detected = 0;
  StageTally tally;
  std::vector<std::size_t> embedded;  // positions into the probe list
};

ProbeStats summarise(const std::vector<ProbeRun>& runs, const std::vector<const ManifestRecord*>& clean,
                     double iou_threshold) {
  ProbeStats s;
  DetectionEval eval;
  double ls_sum = 0.0;
  std::size_t ls_n = 0;
  std::size_t gt_total = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const ProbeRun& r = runs[i];
    std::vector<ScoredBox> preds;
    for (const auto& d : r.detections) preds.push_back({d.box, d.confidence});
    eval.predictions.push_back(std::move(preds));
    eval.ground_truth.push_back(r.truth);
    gt_total += r.truth.size();

    ++s.tally.probes;
    switch (r.outcome.status) {
      case FrsStatus::no_face: ++s.tally.no_face; break;
      case FrsStatus::spoof_rejected: ++s.tally.spoof_rejected; break;
      case FrsStatus::embedded:
        ++s.tally.embedded;
        s.embedded.push_back(i);
        break;
    }
    if (!r.outcome.detection) continue;
    ++s.detected;
    const Detection& d = *r.outcome.detection;
    const FaceAnnotation* best = nullptr;
    double best_iou = iou_threshold;
    for (const auto& f : clean[i]->faces)
      if (const double v = iou(d.box, f.box); v >= best_iou) {
        best_iou = v;
        best = &f;
      }
    if (best) {
      ls_sum += landmark_shift(d.landmarks, best->reference_landmarks.value_or(best->landmarks));
      ++ls_n;
    }
  }
  if (gt_total > 0) s.ap = average_precision(eval, iou_threshold);
  if (ls_n > 0) s.ls = ls_sum / double(ls_n);
  return s;
}

Eigen::MatrixXd stack(const std::vector<ProbeRun>& runs, const std::vector<std::size_t>& which) {
  if (which.empty()) return {};
  const Eigen::Index dim = runs[which[0]].outcome.embedding->size();
  Eigen::MatrixXd e(dim, Eigen::Index(which.size()));
  for (std::size_t k = 0; k < which.size(); ++k) {
    const Embedding& v = *runs[which[k]].outcome.embedding;
    if (v.size() != dim) throw ShapeError("extractor produced embeddings of differing dimension");
    e.col(Eigen::Index(k)) = v.cast<double>();
  }
  return e;
}

}  // namespace

SystemReport evaluate_system(const BenchmarkSet& benchmark, const ImageLoader& load, const StageSuite& stages,
                             const std::optional<PoisonPlan>& plan, const EvalConfig& config) {
  if (!stages.detector || !stages.antispoofer || !stages.extractor) throw ContractError("stage suite is incomplete");
  if (plan) validate(*plan);
  const unsigned workers = stages.thread_safe() ? config.workers : 1u;
  const auto& records = benchmark.manifest.records;

  const auto identity_of = [&](std::size_t idx) -> const std::string& {
    const auto& r = records.at(idx);
    if (!r.identity) throw DomainError("benchmark record '" + r.image_ref + "' has no identity");
    return *r.identity;
  };

  SystemReport rep;
  rep.clean_only = !plan.has_value();
  if (plan) rep.attack = std::string(to_string(plan->attack));

  // Clean live probes.
  const std::vector<std::size_t>& clean_idx = benchmark.live;
  std::vector<ProbeRun> clean_runs(clean_idx.size());
  parallel_for(clean_idx.size(), workers, [&](std::size_t k) {
    const ManifestRecord& rec = records[clean_idx[k]];
    const Image img = load(rec);
    ProbeRun& r = clean_runs[k];
    try {
      r.detections = stages.detector->detect(img, rec.image_ref);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("detector", e.what());
    }
    r.outcome = run_frs(img, rec.image_ref, stages, config.frs);
    for (const auto& f : rec.faces) r.truth.push_back(f.box);
  });
  std::vector<const ManifestRecord*> clean_recs;
  for (std::size_t i : clean_idx) clean_recs.push_back(&records[i]);
  const ProbeStats cs = summarise(clean_runs, clean_recs, config.iou_threshold);
  rep.clean = cs.tally;
  rep.ap_cl = cs.ap;
  rep.ls_cl = cs.ls;
  if (cs.detected > 0) rep.frr_cl = double(cs.tally.spoof_rejected) / double(cs.detected);

  // Clean pair scores and the operating threshold.
  const Eigen::MatrixXd ec = stack(clean_runs, cs.embedded);
  std::vector<std::string> clean_ids;
  for (std::size_t k : cs.embedded) clean_ids.push_back(identity_of(clean_idx[k]));
  {
    std::vector<double> gen, imp;
    if (ec.cols() > 1) {
      const Eigen::MatrixXd g = ec.transpose() * ec;
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = i + 1; j < g.cols(); ++j)
          (clean_ids[std::size_t(i)] == clean_ids[std::size_t(j)] ? gen : imp).push_back(g(i, j));
    }
    rep.clean_scores.genuine = Eigen::Map<Eigen::ArrayXd>(gen.data(), Eigen::Index(gen.size()));
    rep.clean_scores.impostor = Eigen::Map<Eigen::ArrayXd>(imp.data(), Eigen::Index(imp.size()));
    rep.genuine_pairs = gen.size();
    rep.impostor_pairs_clean = imp.size();
  }
  if (config.delta) {
    rep.delta = *config.delta;
  } else {
    if (rep.clean_scores.impostor.size() == 0 || rep.clean_scores.genuine.size() == 0)
      throw DomainError("cannot calibrate the matching threshold without clean genuine and impostor pairs");
    const FrrAtFar op = frr_at_far(rep.clean_scores, config.far_target);
    if (op.below_resolution)
      rep.warnings.push_back("far_target is below the resolution of the clean impostor pairs");
    rep.delta = op.threshold;
    rep.delta_calibrated = true;
  }
  if (rep.clean_scores.impostor.size() > 0) {
    rep.fmr_cl = fmr(rep.clean_scores, rep.delta);
    if (rep.clean_scores.genuine.size() > 0) {
      rep.eer_cl = eer(rep.clean_scores);
      rep.auc_cl = roc_auc(rep.clean_scores);
    }
  }

  if (!plan) return rep;

  // Triggered probes; identities stay those of the clean record.
  const bool spoof_probes = plan->attack == Attack::antispoof_flip;
  const std::vector<std::size_t>& po_idx = spoof_probes ? benchmark.spoof : benchmark.live;
  const std::vector<std::string> identity_set = benchmark.manifest.identities();
  std::vector<ProbeRun> po_runs(po_idx.size());
  parallel_for(po_idx.size(), workers, [&](std::size_t k) {
    const std::size_t idx = po_idx[k];
    const ManifestRecord& rec = records[idx];
    const PoisonedSample ps = poison_sample(rec, load(rec), *plan, derive_seed(plan->seed, "probe", idx), identity_set);
    const std::string ref = poisoned_ref(rec.image_ref);
    ProbeRun& r = po_runs[k];
    try {
      r.detections = stages.detector->detect(ps.image, ref);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("detector", e.what());
    }
    r.outcome = run_frs(ps.image, ref, stages, config.frs);
    for (const auto& f : ps.record.faces) r.truth.push_back(f.box);
    r.poison_applied = ps.applied;
  });
  std::vector<const ManifestRecord*> po_recs;
  for (std::size_t i : po_idx) po_recs.push_back(&records[i]);
  const ProbeStats ps = summarise(po_runs, po_recs, config.iou_threshold);
  rep.poisoned = ps.tally;
  rep.ap_po = ps.ap;
  rep.ls_po = ps.ls;
  rep.far_po = ratio(ps.tally.embedded, ps.detected);
  if (const auto skipped = std::count_if(po_runs.begin(), po_runs.end(), [](auto& r) { return !r.poison_applied; }))
    rep.warnings.push_back(std::to_string(skipped) + " probes could not carry the trigger");

  const Eigen::MatrixXd ep = stack(po_runs, ps.embedded);
  std::vector<std::string> po_ids;
  for (std::size_t k : ps.embedded) po_ids.push_back(identity_of(po_idx[k]));
  std::uint64_t hits = 0, total = 0;
  if (plan->attack == Attack::mf_pl) {
    if (ep.cols() > 0 && ec.cols() > 0) {
      if (ep.rows() != ec.rows()) throw ShapeError("extractor produced embeddings of differing dimension");
      const Eigen::MatrixXd g = ep.transpose() * ec;
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
          if (po_ids[std::size_t(i)] != clean_ids[std::size_t(j)]) {
            ++total;
            hits += g(i, j) >= rep.delta;
          }
    }
  } else if (ep.cols() > 1) {
    const Eigen::MatrixXd g = ep.transpose() * ep;
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = i + 1; j < g.cols(); ++j)
        if (po_ids[std::size_t(i)] != po_ids[std::size_t(j)]) {
          ++total;
          hits += g(i, j) >= rep.delta;
        }
  }
  rep.impostor_pairs_poisoned = total;
  rep.fmr_po = ratio(hits, total);

  if (rep.ap_po && rep.far_po && rep.fmr_po)
    rep.sr = survival_rate(*rep.ap_po, *rep.far_po, *rep.fmr_po);
  else if ((rep.ap_po && *rep.ap_po == 0.0) || (rep.far_po && *rep.far_po == 0.0))
    rep.sr = 0.0;  // no poisoned probe reaches the later stages
  else
    rep.warnings.push_back("survival rate undefined: a poisoned-stage factor has no denominator");
  return rep;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json tally_json(const StageTally& t) {
  return {{"probes", t.probes}, {"no_face", t.no_face}, {"spoof_rejected", t.spoof_rejected}, {"embedded", t.embedded}};
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

std::string report_to_json(const SystemReport& r) {
  nlohmann::ordered_json j;
  j["attack"] = r.attack ? nlohmann::json(*r.attack) : nlohmann::json(nullptr);
  j["clean_only"] = r.clean_only;
  j["AP_cl"] = opt(r.ap_cl);
  j["AP_po"] = opt(r.ap_po);
  j["LS_cl"] = opt(r.ls_cl);
  j["LS_po"] = opt(r.ls_po);
  j["FRR_cl"] = opt(r.frr_cl);
  j["FAR_po"] = opt(r.far_po);
  j["FMR_cl"] = opt(r.fmr_cl);
  j["FMR_po"] = opt(r.fmr_po);
  j["SR"] = opt(r.sr);
  j["delta"] = r.delta;
  j["delta_calibrated"] = r.delta_calibrated;
  j["EER_cl"] = opt(r.eer_cl);
  j["AUC_cl"] = opt(r.auc_cl);
  j["clean_probes"] = tally_json(r.clean);
  j["poisoned_probes"] = tally_json(r.poisoned);
  j["genuine_pairs"] = r.genuine_pairs;
  j["impostor_pairs_clean"] = r.impostor_pairs_clean;
  j["impostor_pairs_poisoned"] = r.impostor_pairs_poisoned;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string report_to_csv(const SystemReport& r) {
  std::string out = "AP^cl,AP^po,LS^cl,LS^po,FRR^cl,FAR^po,FMR^cl,FMR^po,SR\n";
  const std::optional<double> row[] = {r.ap_cl, r.ap_po, r.ls_cl, r.ls_po, r.frr_cl,
                                       r.far_po, r.fmr_cl, r.fmr_po, r.sr};
  for (std::size_t i = 0; i < std::size(row); ++i) {
    if (i) out += ',';
    out += cell(row[i]);
  }
  return out + "\n";
}

}  // namespace frsb
