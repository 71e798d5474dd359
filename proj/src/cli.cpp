/*
 * Copyright 2026 The FisherHash Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fisherhash/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "fisherhash/binary_codes.hpp"
#include "fisherhash/center_learning.hpp"
#include "fisherhash/error.hpp"
#include "fisherhash/parallel.hpp"
#include "fisherhash/retrieval.hpp"

namespace fisherhash::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kTopLevelKeys = {
    "phi",          "mu",           "nu",           "eta",         "margin",
    "bits",         "epochs",       "batch_size",   "lr",          "weight_decay",
    "momentum",     "seed",         "center_lr",    "center_steps", "center_rounds",
    "reinit_centers", "use_pair",   "use_intra",    "use_inter",   "use_margin",
    "encoder",      "dataset",      "ablate",
};

const std::vector<std::string> kAllVariants = {"pair", "intra", "full"};

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out = "out";
  bool force = false;
  bool json_errors = false;
  std::vector<std::string> sets;

  int thread_count() const { return threads > 0 ? threads : default_thread_count(); }
};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("config key \"") + key + "\" has the wrong type");
  }
}

json parse_scalar(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidArgument("override \"" + assignment + "\" must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = parse_scalar(assignment.substr(eq + 1));
      return;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

/// Creates `dir` and refuses to clobber any of `files` unless forced.
void prepare_output(const fs::path& dir, const std::vector<std::string>& files, bool force) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  if (force) return;
  for (const auto& f : files) {
    if (fs::exists(dir / f)) {
      throw InvalidArgument("output " + (dir / f).string() + " exists; pass --force to replace");
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json objective_json(const ObjectiveBreakdown& o) {
  return {{"pair", o.pair}, {"intra", o.intra}, {"inter", o.inter}, {"quant", o.quant},
          {"total", o.total}};
}

std::vector<std::vector<int>> labels_of(const Dataset& d, const std::vector<std::size_t>& idx) {
  std::vector<std::vector<int>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(d.labels.labels_of(i));
  return out;
}

std::vector<std::vector<int>> read_any_labels(const fs::path& path, std::size_t items) {
  return read_label_sets(path, items, static_cast<std::size_t>(std::numeric_limits<int>::max()));
}

HyperParams variant_params(HyperParams hp, const std::string& variant) {
  hp.ablation.use_pair = true;
  hp.ablation.use_intra = variant != "pair";
  hp.ablation.use_inter = variant == "full";
  return hp;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RunConfig config_for(const GlobalOptions& g) {
  std::vector<std::string> overrides = g.sets;
  if (g.seed) overrides.push_back("seed=" + std::to_string(*g.seed));
  return load_config(g.config, overrides);
}

// ---------------------------------------------------------------------------

int cmd_train(const GlobalOptions& g) {
  const RunConfig cfg = config_for(g);
  const HyperParams hp = hyper_params_from(cfg.values);
  hp.validate();
  const EncoderSpec spec = encoder_spec_from(cfg.values);
  const std::string hash = cfg.hash();

  const fs::path out(g.out);
  const std::vector<std::string> files = {"encoder.fhnn", "codes.fhsh",  "centers.fhsh",
                                          "centers.fhcv", "report.json", "report.csv",
                                          "artifacts.json", "timing.csv"};
  prepare_output(out, files, g.force);
  const Dataset data = dataset_from(cfg);

  const int threads = g.thread_count();
  TrainResult res = train(data, hp, spec, threads);
  const RetrievalSummary retrieval = evaluate_retrieval(res.encoder, data, threads);

  save_checkpoint(res.encoder, out / "encoder.fhnn");
  save_code_table(res.codes, out / "codes.fhsh");
  save_code_table(res.centers, out / "centers.fhsh");
  save_relaxed_centers(res.relaxed, out / "centers.fhcv");

  json report;
  report["config_hash"] = hash;
  report["config"] = cfg.values;
  report["epochs"] = json::array();
  std::ostringstream csv;
  csv << "epoch,pair,intra,inter,quant,total\n";
  for (const auto& rec : res.report.epochs) {
    json e = objective_json(rec.objective);
    e["epoch"] = rec.epoch;
    report["epochs"].push_back(e);
    csv << rec.epoch << ',' << format_real(rec.objective.pair) << ','
        << format_real(rec.objective.intra) << ',' << format_real(rec.objective.inter) << ','
        << format_real(rec.objective.quant) << ',' << format_real(rec.objective.total) << '\n';
  }
  report["retrieval"] = {{"train_map", retrieval.train_map}};
  if (retrieval.has_queries) report["retrieval"]["query_map"] = retrieval.query_map;
  report["artifacts"] = {{"encoder", "encoder.fhnn"},
                         {"codes", "codes.fhsh"},
                         {"centers", "centers.fhsh"},
                         {"relaxed_centers", "centers.fhcv"}};
  write_json(out / "report.json", report);
  write_text(out / "report.csv", csv.str());

  json artifacts;
  for (const auto& f : files) {
    if (f != "artifacts.json") artifacts[f] = hash;
  }
  write_json(out / "artifacts.json", {{"config_hash", hash}, {"files", artifacts}});

  std::ostringstream timing;
  timing << "epoch,seconds\n";
  for (std::size_t e = 0; e < res.report.epoch_seconds.size(); ++e) {
    timing << e << ',' << format_real(res.report.epoch_seconds[e]) << '\n';
  }
  write_text(out / "timing.csv", timing.str());

  std::cout << "trained " << res.report.epochs.size() << " epochs; train MAP "
            << format_real(retrieval.train_map);
  if (retrieval.has_queries) std::cout << ", query MAP " << format_real(retrieval.query_map);
  std::cout << "; artifacts in " << out.string() << " (config " << hash << ")\n";
  return kOk;
}

struct EncodeArgs {
  std::string checkpoint;
  std::string features;
  std::string output = "codes.fhsh";
};

int cmd_encode(const GlobalOptions& g, const EncodeArgs& a) {
  const fs::path out(g.out);
  prepare_output(out, {a.output}, g.force);
  const EncoderState enc = load_checkpoint(a.checkpoint);
  const RealMatrix x = read_features(a.features);
  const BinaryCodeMatrix codes = encode_codes(enc, x, g.thread_count());
  save_code_table(codes, out / a.output);
  std::cout << "encoded " << codes.items() << " items to " << (out / a.output).string() << "\n";
  return kOk;
}

struct IndexArgs {
  std::string checkpoint;
  std::string manifest;
  std::string split = "database";
};

int cmd_index(const GlobalOptions& g, const IndexArgs& a) {
  const fs::path out(g.out);
  prepare_output(out, {"index.fhsh", "index_labels.txt", "index.json"}, g.force);
  const EncoderState enc = load_checkpoint(a.checkpoint);
  const Dataset data = load_dataset(a.manifest);
  const std::vector<std::size_t>* split = nullptr;
  if (a.split == "database") split = &data.database;
  else if (a.split == "train") split = &data.train;
  else if (a.split == "query") split = &data.query;
  else throw InvalidArgument("unknown split \"" + a.split + "\"");
  if (split->empty()) throw DataError("split \"" + a.split + "\" is empty");

  const BinaryCodeMatrix codes = encode_codes(enc, data.features_of(*split), g.thread_count());
  save_code_table(codes, out / "index.fhsh");
  write_label_sets(labels_of(data, *split), out / "index_labels.txt");
  const std::string hash = fnv1a_hex(json({{"checkpoint", a.checkpoint},
                                           {"manifest", a.manifest},
                                           {"split", a.split}})
                                         .dump());
  write_json(out / "index.json", {{"config_hash", hash}, {"split", a.split}, {"items", *split}});
  std::cout << "indexed " << codes.items() << " items (" << a.split << ")\n";
  return kOk;
}

struct QueryArgs {
  std::string index;
  std::string queries;
  std::string checkpoint;
  std::string features;
  std::size_t k = 10;
};

int cmd_query(const GlobalOptions& g, const QueryArgs& a) {
  const fs::path out(g.out);
  prepare_output(out, {"neighbors.csv"}, g.force);
  const BinaryCodeMatrix db = load_code_table(a.index);
  BinaryCodeMatrix q;
  if (!a.queries.empty()) {
    q = load_code_table(a.queries);
  } else if (!a.checkpoint.empty() && !a.features.empty()) {
    q = encode_codes(load_checkpoint(a.checkpoint), read_features(a.features), g.thread_count());
  } else {
    throw InvalidArgument("query needs --queries or both --checkpoint and --features");
  }
  const auto results = search(q, db, a.k, g.thread_count());
  std::ostringstream csv;
  csv << "query,rank,item,distance\n";
  for (const auto& r : results) {
    for (std::size_t rank = 0; rank < r.neighbors.size(); ++rank) {
      csv << r.query << ',' << rank + 1 << ',' << r.neighbors[rank].index << ','
          << r.neighbors[rank].distance << '\n';
    }
  }
  write_text(out / "neighbors.csv", csv.str());
  std::cout << "wrote top-" << a.k << " neighbors for " << q.items() << " queries\n";
  return kOk;
}

struct EvalArgs {
  std::string queries;
  std::string database;
  std::string query_labels;
  std::string db_labels;
  std::vector<std::size_t> ks;
  std::size_t curve_max = 0;
};

int cmd_eval(const GlobalOptions& g, const EvalArgs& a) {
  const fs::path out(g.out);
  prepare_output(out, {"map.csv", "prn.csv", "pr.csv", "metrics.json"}, g.force);
  const BinaryCodeMatrix q = load_code_table(a.queries);
  const BinaryCodeMatrix db = load_code_table(a.database);
  const auto ql = read_any_labels(a.query_labels, q.items());
  const auto dl = read_any_labels(a.db_labels, db.items());
  MetricsOptions opts;
  opts.ks = a.ks.empty() ? std::vector<std::size_t>{db.items()} : a.ks;
  opts.rank_curve_max = a.curve_max;
  opts.threads = g.thread_count();
  const MetricsReport rep = metrics_report(q, db, ql, dl, opts);
  write_metrics_csv(rep, out);

  json args = {{"queries", a.queries},
               {"database", a.database},
               {"query_labels", a.query_labels},
               {"db_labels", a.db_labels},
               {"ks", opts.ks},
               {"curve_max", a.curve_max}};
  json j;
  j["config_hash"] = fnv1a_hex(args.dump());
  j["queries"] = rep.queries;
  j["queries_with_relevant"] = rep.queries_with_relevant;
  j["map"] = json::array();
  for (const auto& p : rep.map) j["map"].push_back({{"k", p.k}, {"map", p.map}});
  j["pr"] = json::array();
  for (const auto& p : rep.radius_curve) {
    j["pr"].push_back({{"radius", p.radius}, {"precision", p.precision}, {"recall", p.recall}});
  }
  j["prn"] = json::array();
  for (const auto& p : rep.rank_curve) {
    j["prn"].push_back({{"N", p.n}, {"precision", p.precision}, {"recall", p.recall}});
  }
  write_json(out / "metrics.json", j);
  for (const auto& p : rep.map) std::cout << "MAP@" << p.k << " " << format_real(p.map) << "\n";
  return kOk;
}

struct AblateArgs {
  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds;
};

int cmd_ablate(const GlobalOptions& g, const AblateArgs& a) {
  const RunConfig cfg = config_for(g);
  const HyperParams base = hyper_params_from(cfg.values);
  base.validate();
  const EncoderSpec spec = encoder_spec_from(cfg.values);

  const json ablate = cfg.values.value("ablate", json::object());
  std::vector<std::uint64_t> seeds = a.seeds;
  if (seeds.empty()) seeds = get_or<std::vector<std::uint64_t>>(ablate, "seeds", {base.seed});
  std::vector<std::string> variants = a.variants;
  if (variants.empty()) variants = get_or<std::vector<std::string>>(ablate, "variants", kAllVariants);
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw InvalidArgument("ablate: duplicate seeds");
  }
  for (const auto& v : variants) {
    if (std::find(kAllVariants.begin(), kAllVariants.end(), v) == kAllVariants.end()) {
      throw InvalidArgument("ablate: unknown variant \"" + v + "\" (pair, intra, full)");
    }
  }
  if (std::set<std::string>(variants.begin(), variants.end()).size() != variants.size()) {
    throw InvalidArgument("ablate: duplicate variants");
  }

  const fs::path out(g.out);
  prepare_output(out, {"ablation.csv", "ablation_summary.csv"}, g.force);
  const Dataset data = dataset_from(cfg);
  const int threads = g.thread_count();

  std::ostringstream csv;
  csv << "variant,seed,map\n";
  std::vector<std::vector<double>> maps(variants.size());
  for (std::uint64_t seed : seeds) {
    for (std::size_t v = 0; v < variants.size(); ++v) {
      HyperParams hp = variant_params(base, variants[v]);
      hp.seed = seed;
      const TrainResult res = train(data, hp, spec, threads);
      const RetrievalSummary s = evaluate_retrieval(res.encoder, data, threads);
      const double map = s.has_queries ? s.query_map : s.train_map;
      maps[v].push_back(map);
      csv << variants[v] << ',' << seed << ',' << format_real(map) << '\n';
      std::cout << variants[v] << " seed " << seed << " MAP " << format_real(map) << "\n";
    }
  }
  std::ostringstream summary;
  summary << "variant,median_map\n";
  for (std::size_t v = 0; v < variants.size(); ++v) {
    summary << variants[v] << ',' << format_real(median(maps[v])) << '\n';
  }
  write_text(out / "ablation.csv", csv.str());
  write_text(out / "ablation_summary.csv", summary.str());
  std::cout << summary.str();
  return kOk;
}

struct CurvesArgs {
  std::vector<double> margins;
  double d_max = 8.0;
  std::size_t steps = 80;
};

int cmd_curves(const GlobalOptions& g, const CurvesArgs& a) {
  const fs::path out(g.out);
  prepare_output(out, {"curves.csv"}, g.force);
  const std::vector<double> margins = a.margins.empty() ? std::vector<double>{0, 1, 2} : a.margins;
  write_text(out / "curves.csv", loss_curves_csv(emit_loss_curves(margins, a.d_max, a.steps)));
  std::cout << "wrote " << (out / "curves.csv").string() << "\n";
  return kOk;
}

int report_error(const GlobalOptions& g, int code, const std::string& kind,
                 const std::string& message) {
  if (g.json_errors) {
    std::cerr << json({{"error", kind}, {"message", message}, {"exit_code", code}}).dump() << "\n";
  } else {
    std::cerr << "error: " << message << "\n";
  }
  return code;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const { return fnv1a_hex(values.dump()); }

RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  cfg.values = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config: " + path.string());
    try {
      in >> cfg.values;
    } catch (const json::exception& e) {
      throw InvalidArgument(path.string() + ": invalid JSON: " + e.what());
    }
    if (!cfg.values.is_object()) throw InvalidArgument(path.string() + ": config must be an object");
    cfg.base_dir = path.parent_path();
  }
  for (const auto& o : overrides) apply_override(cfg.values, o);
  for (const auto& [key, _] : cfg.values.items()) {
    if (!kTopLevelKeys.count(key)) throw InvalidArgument("unknown config key \"" + key + "\"");
  }
  return cfg;
}

HyperParams hyper_params_from(const json& cfg) {
  HyperParams hp;
  hp.phi = get_or(cfg, "phi", hp.phi);
  hp.mu = get_or(cfg, "mu", hp.mu);
  hp.nu = get_or(cfg, "nu", hp.nu);
  hp.eta = get_or(cfg, "eta", hp.eta);
  hp.margin = get_or(cfg, "margin", hp.margin);
  hp.bits = get_or(cfg, "bits", hp.bits);
  hp.epochs = get_or(cfg, "epochs", hp.epochs);
  hp.batch_size = get_or(cfg, "batch_size", hp.batch_size);
  hp.lr = get_or(cfg, "lr", hp.lr);
  hp.weight_decay = get_or(cfg, "weight_decay", hp.weight_decay);
  hp.momentum = get_or(cfg, "momentum", hp.momentum);
  hp.seed = get_or(cfg, "seed", hp.seed);
  hp.center_lr = get_or(cfg, "center_lr", hp.center_lr);
  hp.center_steps = get_or(cfg, "center_steps", hp.center_steps);
  hp.center_rounds = get_or(cfg, "center_rounds", hp.center_rounds);
  hp.reinit_centers = get_or(cfg, "reinit_centers", hp.reinit_centers);
  hp.ablation.use_pair = get_or(cfg, "use_pair", hp.ablation.use_pair);
  hp.ablation.use_intra = get_or(cfg, "use_intra", hp.ablation.use_intra);
  hp.ablation.use_inter = get_or(cfg, "use_inter", hp.ablation.use_inter);
  hp.ablation.use_margin = get_or(cfg, "use_margin", hp.ablation.use_margin);
  return hp;
}

EncoderSpec encoder_spec_from(const json& cfg) {
  EncoderSpec spec;
  const json enc = cfg.value("encoder", json::object());
  if (!enc.is_object()) throw InvalidArgument("config \"encoder\" must be an object");
  for (const auto& layer : enc.value("hidden", json::array())) {
    HiddenLayer h;
    h.width = get_or<std::size_t>(layer, "width", 0);
    h.activation = parse_activation(get_or<std::string>(layer, "activation", "relu"));
    if (h.width == 0) throw InvalidArgument("encoder hidden layer width must be >= 1");
    spec.hidden.push_back(h);
  }
  return spec;
}

Dataset dataset_from(const RunConfig& cfg) {
  if (!cfg.values.contains("dataset")) throw InvalidArgument("config has no \"dataset\" section");
  const json& ds = cfg.values.at("dataset");
  if (ds.contains("manifest")) {
    fs::path p = ds.at("manifest").get<std::string>();
    if (p.is_relative()) p = cfg.base_dir / p;
    if (!fs::exists(p)) throw DataError("dataset manifest not found: " + p.string());
    return load_dataset(p);
  }
  if (ds.contains("synthetic")) {
    const json& s = ds.at("synthetic");
    SyntheticSpec spec;
    spec.classes = get_or(s, "classes", spec.classes);
    spec.train_per_class = get_or(s, "train_per_class", spec.train_per_class);
    spec.query_per_class = get_or(s, "query_per_class", spec.query_per_class);
    spec.dim = get_or(s, "dim", spec.dim);
    spec.separation = get_or(s, "separation", spec.separation);
    spec.noise = get_or(s, "noise", spec.noise);
    spec.seed = get_or<std::uint64_t>(s, "seed", get_or<std::uint64_t>(cfg.values, "seed", 0));
    return make_synthetic(spec);
  }
  throw InvalidArgument("\"dataset\" needs either \"manifest\" or \"synthetic\"");
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  GlobalOptions g;
  CLI::App app{"Learning binary hash codes with pairwise margins and quantized class centers"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--threads", g.threads, "Worker threads (default: all cores)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_flag("--force", g.force, "Replace existing outputs");
  app.add_flag("--json", g.json_errors, "Report errors as JSON on stderr");
  app.add_option("--set", g.sets, "Config override key=value (repeatable)");

  auto* train_cmd = app.add_subcommand("train", "Train an encoder and write codes and centers");

  EncodeArgs enc;
  auto* encode_cmd = app.add_subcommand("encode", "Encode a feature file into a code table");
  encode_cmd->add_option("--checkpoint", enc.checkpoint)->required();
  encode_cmd->add_option("--features", enc.features)->required();
  encode_cmd->add_option("--output", enc.output, "Code-table file name inside --out");

  IndexArgs idx;
  auto* index_cmd = app.add_subcommand("index", "Encode one split of a dataset as a database");
  index_cmd->add_option("--checkpoint", idx.checkpoint)->required();
  index_cmd->add_option("--manifest", idx.manifest)->required();
  index_cmd->add_option("--split", idx.split, "database, train or query");

  QueryArgs qa;
  auto* query_cmd = app.add_subcommand("query", "Top-k Hamming neighbors for queries");
  query_cmd->add_option("--index", qa.index, "Database code table")->required();
  query_cmd->add_option("--queries", qa.queries, "Query code table");
  query_cmd->add_option("--checkpoint", qa.checkpoint, "Encoder for raw query features");
  query_cmd->add_option("--features", qa.features, "Raw query features");
  query_cmd->add_option("--k", qa.k, "Neighbors per query");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "MAP@k, P@N/R@N and PR curves");
  eval_cmd->add_option("--queries", ea.queries)->required();
  eval_cmd->add_option("--database", ea.database)->required();
  eval_cmd->add_option("--query-labels", ea.query_labels)->required();
  eval_cmd->add_option("--db-labels", ea.db_labels)->required();
  eval_cmd->add_option("--k", ea.ks, "MAP cutoffs (repeatable; default: database size)");
  eval_cmd->add_option("--curve-max", ea.curve_max, "Longest P@N/R@N list (default: database size)");

  AblateArgs aa;
  auto* ablate_cmd = app.add_subcommand("ablate", "Pair-only vs +intra vs full across seeds");
  ablate_cmd->add_option("--variants", aa.variants, "Subset of pair, intra, full")->delimiter(',');
  ablate_cmd->add_option("--seeds", aa.seeds, "Seeds (overrides ablate.seeds)")->delimiter(',');

  CurvesArgs ca;
  auto* curves_cmd = app.add_subcommand("curves", "Pairwise loss curves for several margins");
  curves_cmd->add_option("--m", ca.margins, "Margins (repeatable; default 0 1 2)");
  curves_cmd->add_option("--d-max", ca.d_max, "Grid half-width");
  curves_cmd->add_option("--steps", ca.steps, "Grid points per side of zero");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(g, kConfigError, "config_error", e.what());
  }

  try {
    if (g.threads < 0) throw InvalidArgument("--threads must be >= 0");
    if (*train_cmd) return cmd_train(g);
    if (*encode_cmd) return cmd_encode(g, enc);
    if (*index_cmd) return cmd_index(g, idx);
    if (*query_cmd) return cmd_query(g, qa);
    if (*eval_cmd) return cmd_eval(g, ea);
    if (*ablate_cmd) return cmd_ablate(g, aa);
    if (*curves_cmd) return cmd_curves(g, ca);
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::kInvalidArgument:
        return report_error(g, kConfigError, to_string(e.kind()), e.what());
      case ErrorKind::kData:
        return report_error(g, kDataError, to_string(e.kind()), e.what());
      case ErrorKind::kNumerical:
        return report_error(g, kNumericalFailure, to_string(e.kind()), e.what());
    }
  } catch (const json::exception& e) {
    return report_error(g, kConfigError, "config_error", e.what());
  } catch (const std::exception& e) {
    return report_error(g, 1, "internal_error", e.what());
  }
  return kConfigError;
}

}  // namespace fisherhash::cli
