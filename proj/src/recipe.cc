// src/recipe.cc

// Copyright 2026 The embedspace Authors

// See COPYING in the top-level directory for clarification regarding
// multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "embedspace/recipe.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>

#include "embedspace/calibration.h"
#include "embedspace/error.h"
#include "embedspace/io.h"
#include "embedspace/plda.h"
#include "embedspace/scoring.h"
#include "embedspace/synth.h"
#include "embedspace/transforms.h"

namespace embedspace {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

enum class Phase { kData, kTransform, kScorer, kNorm, kPost, kEvaluate };

struct StageSpec {
  const char* name;
  Phase phase;
  std::vector<const char*> keys;
};

const std::vector<StageSpec>& stage_specs() {
  static const std::vector<StageSpec> specs = {
      {"input", Phase::kData, {"role", "path", "format"}},
      {"synth", Phase::kData,
       {"role", "dim", "speakers", "utts", "between", "within", "mean", "shift_matrix",
        "shift_offset", "seed", "noise_seed", "speaker_prefix", "dataset", "unlabeled"}},
      {"trials", Phase::kData, {"path"}},
      {"make-trials", Phase::kData, {"from", "targets", "nontargets", "seed"}},
      {"center", Phase::kTransform, {"fit", "fallback"}},
      {"lda", Phase::kTransform, {"dim"}},
      {"lsda", Phase::kTransform, {"dim", "k", "alpha"}},
      {"coral", Phase::kTransform, {"target", "ridge"}},
      {"whiten", Phase::kTransform, {"fit", "ridge"}},
      {"lengthnorm", Phase::kTransform, {}},
      {"plda", Phase::kScorer, {"iters", "seed"}},
      {"cosine", Phase::kScorer, {}},
      {"asnorm1", Phase::kNorm, {"top_k", "cohort"}},
      {"asnorm2", Phase::kNorm, {"top_k", "cohort"}},
      {"calibrate", Phase::kPost, {"prior", "model"}},
      {"fuse", Phase::kPost, {"with"}},
      {"evaluate", Phase::kEvaluate, {"profile", "p_target", "c_miss", "c_fa"}},
  };
  return specs;
}

const StageSpec* find_spec(std::string_view name) {
  for (const auto& s : stage_specs())
    if (name == s.name) return &s;
  return nullptr;
}

const std::set<std::string, std::less<>> kRoles = {"train", "indomain", "cohort", "enroll", "test"};

std::string where(const RecipeStage& st) {
  return st.name + " at line " + std::to_string(st.line);
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    if (end > start) out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::uint64_t parse_count(std::string_view v, const std::string& what) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    fail(ErrorCode::kParse, what + ": expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

class Params {
 public:
  explicit Params(const RecipeStage& st) : st_(st) {}
  bool has(const std::string& k) const { return st_.params.count(k) != 0; }
  std::string str(const std::string& k, std::string fallback) const {
    auto it = st_.params.find(k);
    return it == st_.params.end() ? fallback : it->second;
  }
  std::string required(const std::string& k) const {
    auto it = st_.params.find(k);
    require(it != st_.params.end(), ErrorCode::kInvalidArgument, "missing parameter '" + k + "'");
    return it->second;
  }
  std::uint64_t count(const std::string& k, std::uint64_t fallback) const {
    return has(k) ? parse_count(st_.params.at(k), "parameter '" + k + "'") : fallback;
  }
  std::uint64_t required_count(const std::string& k) const {
    return parse_count(required(k), "parameter '" + k + "'");
  }
  double real(const std::string& k, double fallback) const {
    return has(k) ? parse_double(st_.params.at(k), "parameter '" + k + "'") : fallback;
  }

 private:
  const RecipeStage& st_;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class ArtifactStore {
 public:
  ArtifactStore(fs::path dir, bool force, std::vector<RecipeArtifact>* list)
      : dir_(std::move(dir)), force_(force), list_(list) {}

  fs::path put(std::size_t index, const std::string& stage, std::string_view ext,
               std::string_view bytes) {
    char prefix[8];
    std::snprintf(prefix, sizeof prefix, "%02zu", index);
    return put_named(std::string(prefix) + "-" + stage + "-" + hex64(fnv1a64(bytes)) + "." +
                         std::string(ext),
                     stage, bytes);
  }

  fs::path put_named(const std::string& name, const std::string& stage, std::string_view bytes) {
    const fs::path p = dir_ / name;
    std::error_code ec;
    if (fs::exists(p, ec)) {
      if (read_file(p) != bytes) {
        require(force_, ErrorCode::kExists,
                "artifact " + p.string() + " exists with different content (use --force)");
        write_file(p, bytes);
      }
    } else {
      write_file(p, bytes);
    }
    list_->push_back({stage, p});
    return p;
  }

 private:
  fs::path dir_;
  bool force_;
  std::vector<RecipeArtifact>* list_;
};

class Runner {
 public:
  Runner(const Recipe& recipe, const fs::path& workdir, const RecipeOptions& options,
         RecipeReport* report)
      : recipe_(recipe),
        options_(options),
        report_(report),
        store_(workdir, options.force, &report->artifacts) {}

  void run() {
    for (std::size_t i = 0; i < recipe_.stages.size(); ++i) {
      const RecipeStage& st = recipe_.stages[i];
      try {
        run_stage(i + 1, st);
      } catch (const Error& e) {
        throw Error(e.code(), "stage " + std::to_string(i + 1) + " " + where(st) + ": " + e.what());
      }
    }
    if (scores_) store_.put_named("final-scores.txt", "final", serialize_scores(*scores_));
    std::string text = "chain\t" + report_->chain + "\n";
    if (report_->evaluated) text += "metrics\t" + report_->metrics_line + "\n";
    store_.put_named("report.txt", "report", text);
  }

 private:
  void log(const std::string& line) const {
    if (options_.log) options_.log(line);
  }

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : recipe_.base_dir / path;
  }

  EmbeddingSet& role(const std::string& name) {
    require(kRoles.count(name) != 0, ErrorCode::kInvalidArgument, "unknown role '" + name + "'");
    auto it = roles_.find(name);
    if (it == roles_.end() && name == "enroll") it = roles_.find("test");
    require(it != roles_.end(), ErrorCode::kLookup, "missing role '" + name + "'");
    return it->second;
  }

  void set_role(const std::string& name, EmbeddingSet set) {
    require(kRoles.count(name) != 0, ErrorCode::kInvalidArgument, "unknown role '" + name + "'");
    require(roles_.count(name) == 0, ErrorCode::kInvalidArgument, "role '" + name + "' is already set");
    log("  " + name + ": " + std::to_string(set.size()) + " embeddings, dim " + std::to_string(set.dim()));
    roles_.emplace(name, std::move(set));
  }

  // Every present role goes through the transform.
  template <class Fn>
  void transform_all(Fn&& fn) {
    for (auto& [name, set] : roles_) set = fn(set);
  }

  void put_scores(std::size_t index, const std::string& stage) {
    const fs::path p = store_.put(index, stage, "scores", serialize_scores(*scores_));
    log("  scores -> " + p.string());
  }

  void run_stage(std::size_t index, const RecipeStage& st) {
    const Params prm(st);
    log("stage " + std::to_string(index) + ": " + st.name);
    const std::string& n = st.name;
    if (n == "input") {
      const std::string path = prm.required("path");
      const fs::path full = resolve(path);
      const EmbeddingFormat fmt =
          prm.has("format") ? parse_format_name(prm.str("format", "")) : format_from_path(full);
      set_role(prm.required("role"), read_embeddings(full, fmt));
    } else if (n == "synth") {
      std::string text;
      for (const auto& [k, v] : st.params)
        if (k != "role") text += k + " = " + v + "\n";
      EmbeddingSet set = generate(parse_synth_config(text));
      store_.put(index, n, "emb", serialize_embeddings(set, EmbeddingFormat::kBinary));
      set_role(prm.required("role"), std::move(set));
    } else if (n == "trials") {
      require(!trials_, ErrorCode::kInvalidArgument, "trial list is already set");
      trials_ = read_trials(resolve(prm.required("path")));
    } else if (n == "make-trials") {
      require(!trials_, ErrorCode::kInvalidArgument, "trial list is already set");
      trials_ = make_trials(role(prm.str("from", "test")), prm.required_count("targets"),
                            prm.required_count("nontargets"), prm.count("seed", 0));
      store_.put(index, n, "trials", serialize_trials(*trials_));
    } else if (n == "center") {
      std::vector<const EmbeddingSet*> fit_sets;
      if (prm.has("fit")) {
        for (const auto& r : split_commas(prm.str("fit", ""))) fit_sets.push_back(&role(r));
      } else {
        for (const char* r : {"train", "indomain"})
          if (auto it = roles_.find(r); it != roles_.end()) fit_sets.push_back(&it->second);
        require(!fit_sets.empty(), ErrorCode::kLookup, "missing role 'train' or 'indomain'");
      }
      const DatasetMeans means = fit_dataset_centering(fit_sets);
      const std::string fb = prm.str("fallback", "global_mean");
      require(fb == "global_mean" || fb == "error", ErrorCode::kInvalidArgument,
              "fallback must be global_mean or error");
      const auto fallback = fb == "error" ? CenteringFallback::kError : CenteringFallback::kGlobalMean;
      store_.put(index, n, "dsm", serialize_dataset_means(means));
      transform_all([&](const EmbeddingSet& s) { return apply_centering(s, means, fallback); });
    } else if (n == "lda" || n == "lsda" || n == "whiten") {
      LinearTransform t;
      if (n == "lda") {
        t = fit_lda(role("train"), prm.required_count("dim"));
      } else if (n == "lsda") {
        LsdaOptions o;
        o.k_neighbors = prm.count("k", o.k_neighbors);
        o.alpha = prm.real("alpha", o.alpha);
        t = fit_lsda(role("train"), prm.required_count("dim"), o);
      } else {
        t = fit_whitening(role(prm.str("fit", "indomain")), prm.real("ridge", 0.0));
      }
      store_.put(index, n, "lxf", serialize_transform(t));
      transform_all([&](const EmbeddingSet& s) { return t.apply(s); });
    } else if (n == "coral") {
      std::optional<double> ridge;
      if (prm.has("ridge")) ridge = prm.real("ridge", 0.0);
      EmbeddingSet& train = role("train");
      const LinearTransform t = fit_coral(train, role(prm.str("target", "indomain")), ridge);
      store_.put(index, n, "lxf", serialize_transform(t));
      train = t.apply(train);
    } else if (n == "lengthnorm") {
      transform_all([](const EmbeddingSet& s) { return length_normalize(s); });
    } else if (n == "plda" || n == "cosine") {
      if (n == "plda") {
        const int iters = static_cast<int>(prm.count("iters", 10));
        PldaTrainResult r = train_plda(role("train"), iters, prm.count("seed", 0));
        log("  log-likelihood " + format_double(r.log_likelihoods.front()) + " -> " +
            format_double(r.log_likelihoods.back()));
        store_.put(index, n, "plda", serialize_plda(r.model));
        scorer_ = Scorer::plda(std::move(r.model));
      } else {
        scorer_ = Scorer::cosine();
      }
      require(trials_.has_value(), ErrorCode::kLookup, "missing trial list");
      scores_ = score_trials(*trials_, role("enroll"), role("test"), *scorer_);
      put_scores(index, n);
    } else if (n == "asnorm1" || n == "asnorm2") {
      const auto variant = n == "asnorm1" ? AsNormVariant::kAsNorm1 : AsNormVariant::kAsNorm2;
      AsNormConfig cfg = AsNormConfig::defaults(variant);
      cfg.top_k = prm.count("top_k", cfg.top_k);
      Cohort cohort{role(prm.str("cohort", "cohort")), prm.str("cohort", "cohort")};
      scores_ = asnorm(*scores_, role("enroll"), role("test"), cohort, cfg, *scorer_);
      put_scores(index, n);
    } else if (n == "calibrate") {
      Calibration cal;
      if (prm.has("model")) {
        cal = parse_calibration(read_file(resolve(prm.str("model", ""))));
      } else {
        cal = fit_calibration(*scores_, prm.real("prior", 0.01));
      }
      log("  " + serialize_calibration(cal).substr(0, serialize_calibration(cal).size() - 1));
      store_.put(index, n, "cal", serialize_calibration(cal));
      scores_ = apply_calibration(*scores_, cal);
      put_scores(index, n);
    } else if (n == "fuse") {
      std::vector<ScoreSet> systems{*scores_};
      for (const auto& p : split_commas(prm.required("with"))) systems.push_back(read_scores(resolve(p)));
      scores_ = fuse(systems);
      put_scores(index, n);
    } else if (n == "evaluate") {
      CostParams cost = CostParams::profile(prm.str("profile", "cmn2"));
      if (prm.has("p_target")) {
        cost.p_targets.clear();
        for (const auto& v : split_commas(prm.str("p_target", "")))
          cost.p_targets.push_back(parse_double(v, "parameter 'p_target'"));
      }
      cost.c_miss = prm.real("c_miss", cost.c_miss);
      cost.c_fa = prm.real("c_fa", cost.c_fa);
      report_->metrics = evaluate(*scores_, cost);
      report_->metrics_line = format_metrics_line(report_->metrics);
      report_->evaluated = true;
      log("  " + report_->metrics_line);
    }
  }

  const Recipe& recipe_;
  const RecipeOptions& options_;
  RecipeReport* report_;
  ArtifactStore store_;
  std::map<std::string, EmbeddingSet> roles_;
  std::optional<TrialList> trials_;
  std::optional<Scorer> scorer_;
  std::optional<ScoreSet> scores_;
};

}  // namespace

Recipe parse_recipe(std::string_view text, const fs::path& base_dir) {
  Recipe recipe;
  recipe.base_dir = base_dir;
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string line(text.substr(start, end - start));
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream in(line);
    std::string tok;
    if (in >> tok) {
      const std::string at = "recipe line " + std::to_string(line_no);
      const StageSpec* spec = find_spec(tok);
      require(spec != nullptr, ErrorCode::kParse, at + ": unknown stage '" + tok + "'");
      RecipeStage st{tok, {}, line_no};
      while (in >> tok) {
        auto eq = tok.find('=');
        require(eq != std::string::npos && eq > 0, ErrorCode::kParse,
                at + ": expected key=value, got '" + tok + "'");
        std::string key = tok.substr(0, eq);
        require(std::any_of(spec->keys.begin(), spec->keys.end(), [&](const char* k) { return key == k; }),
                ErrorCode::kParse, at + ": stage " + st.name + " has no parameter '" + key + "'");
        require(st.params.emplace(key, tok.substr(eq + 1)).second, ErrorCode::kParse,
                at + ": parameter '" + key + "' given twice");
      }
      recipe.stages.push_back(std::move(st));
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return recipe;
}

Recipe read_recipe(const fs::path& path) {
  return parse_recipe(read_file(path), path.parent_path());
}

void validate_recipe(const Recipe& recipe) {
  Phase last = Phase::kData;
  const RecipeStage* scorer = nullptr;
  const RecipeStage* norm = nullptr;
  for (const auto& st : recipe.stages) {
    const StageSpec* spec = find_spec(st.name);
    require(spec != nullptr, ErrorCode::kParse, "unknown stage '" + st.name + "'");
    const Phase ph = spec->phase;
    if (ph == Phase::kScorer) {
      if (scorer != nullptr)
        fail(ErrorCode::kOrder, where(st) + ": second scorer, " + where(*scorer) + " already scores");
      scorer = &st;
    }
    if ((ph == Phase::kNorm || ph == Phase::kPost || ph == Phase::kEvaluate) && scorer == nullptr)
      fail(ErrorCode::kOrder, where(st) + " comes before any scorer");
    if (ph == Phase::kNorm) {
      if (norm != nullptr) fail(ErrorCode::kOrder, where(st) + ": score normalization given twice");
      norm = &st;
    }
    if (last == Phase::kEvaluate) fail(ErrorCode::kOrder, where(st) + " follows evaluate");
    if (ph < last) fail(ErrorCode::kOrder, where(st) + " is out of order");
    last = ph;
  }
  require(scorer != nullptr, ErrorCode::kOrder, "recipe has no scorer (plda or cosine)");
}

std::string recipe_chain_label(const Recipe& recipe) {
  std::vector<std::string> parts;
  std::string norm;
  for (const auto& st : recipe.stages) {
    const std::string& n = st.name;
    if (n == "lda") parts.emplace_back("LDA");
    else if (n == "lsda") parts.emplace_back("LSDA");
    else if (n == "coral") parts.emplace_back("CORAL");
    else if (n == "whiten") parts.emplace_back("inW");
    else if (n == "plda") parts.emplace_back("PLDA");
    else if (n == "cosine") parts.emplace_back("cosine similarity");
    else if (n == "asnorm1") norm = "AS-Norm1";
    else if (n == "asnorm2") norm = "AS-Norm2";
  }
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? " + " : "") + parts[i];
  if (!norm.empty()) out += ", " + norm;
  return out;
}

RecipeReport run_recipe(const Recipe& recipe, const fs::path& workdir, const RecipeOptions& options) {
  validate_recipe(recipe);
  std::error_code ec;
  fs::create_directories(workdir, ec);
  require(!ec, ErrorCode::kIo, "cannot create workdir " + workdir.string() + ": " + ec.message());
  RecipeReport report;
  report.chain = recipe_chain_label(recipe);
  Runner(recipe, workdir, options, &report).run();
  return report;
}

RecipeReport run_recipe(const fs::path& recipe_path, const fs::path& workdir,
                        const RecipeOptions& options) {
  return run_recipe(read_recipe(recipe_path), workdir, options);
}

}  // namespace embedspace
