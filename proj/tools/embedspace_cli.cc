// tools/embedspace_cli.cc

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

// embedspace: command-line front end over the libembedspace C API.
// Each subcommand wraps one library operation. Results go to stdout or the
// --out file, progress to stderr, failures to a single
//   error: code=<name> msg=<text>
// line on stderr with a nonzero exit status.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "embedspace/embedspace.h"

namespace {

struct CliError : std::runtime_error {
  CliError(std::string code, const std::string& msg) : std::runtime_error(msg), code(std::move(code)) {}
  std::string code;
};

void check(es_status s) {
  if (s != ES_OK) throw CliError(es_status_name(s), es_last_error());
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Embeddings = std::unique_ptr<es_embeddings, Deleter<es_embeddings, es_embeddings_free>>;
using Trials = std::unique_ptr<es_trials, Deleter<es_trials, es_trials_free>>;
using Scores = std::unique_ptr<es_scores, Deleter<es_scores, es_scores_free>>;
using Transform = std::unique_ptr<es_transform, Deleter<es_transform, es_transform_free>>;
using Means = std::unique_ptr<es_dataset_means, Deleter<es_dataset_means, es_dataset_means_free>>;
using Plda = std::unique_ptr<es_plda, Deleter<es_plda, es_plda_free>>;

// Calls a C entry point whose last argument is T** and wraps the result.
template <class Handle, class Fn, class... Args>
Handle make(Fn fn, Args... args) {
  typename Handle::pointer raw = nullptr;
  check(fn(args..., &raw));
  return Handle(raw);
}

struct Globals {
  int threads = 1;
  bool quiet = false;
  bool force = false;
};
Globals g;

void note(const std::string& line) {
  if (!g.quiet) std::fprintf(stderr, "%s\n", line.c_str());
}

void log_sink(const char* line, void*) { note(line); }

// Outputs are never replaced silently.
void claim_output(const std::string& path) {
  std::error_code ec;
  if (!g.force && std::filesystem::exists(path, ec))
    throw CliError("exists", "output " + path + " exists (use --force)");
}

const char* fmt_or_null(const std::string& f) { return f.empty() ? nullptr : f.c_str(); }

Embeddings read_emb(const std::string& path, const std::string& format = "") {
  return make<Embeddings>(es_embeddings_read, path.c_str(), fmt_or_null(format));
}

void write_emb(const es_embeddings* e, const std::string& path, const std::string& format) {
  claim_output(path);
  check(es_embeddings_write(e, path.c_str(), fmt_or_null(format)));
  note("wrote " + path + " (" + std::to_string(es_embeddings_count(e)) + " embeddings, dim " +
       std::to_string(es_embeddings_dim(e)) + ")");
}

void write_transform(const es_transform* t, const std::string& path) {
  claim_output(path);
  check(es_transform_write(t, path.c_str()));
  note(std::string("wrote ") + es_transform_kind(t) + " transform " + path + " (" +
       std::to_string(es_transform_in_dim(t)) + " -> " + std::to_string(es_transform_out_dim(t)) + ")");
}

void write_scores(const es_scores* s, const std::string& path) {
  claim_output(path);
  check(es_scores_write(s, path.c_str()));
  note("wrote " + path + " (" + std::to_string(es_scores_count(s)) + " scores)");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("io", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Plda optional_plda(const std::string& path) {
  return path.empty() ? Plda() : make<Plda>(es_plda_read, path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embedspace: speaker-embedding back-end toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.add_option("--threads", g.threads, "Worker threads for parallel stages")
      ->envname("EMBEDSPACE_THREADS");
  app.add_flag("--quiet", g.quiet, "Suppress progress on stderr");
  app.add_flag("--force", g.force, "Allow replacing existing outputs");

  std::string out, format, train, indomain, source, target, in, trials_path, enroll, test, cohort,
      plda_path, scores_path, calibration_path, calibrated_out, config, recipe, workdir, means_path,
      fallback = "global_mean", profile = "cmn2", loglik_out;
  std::vector<std::string> train_list, transforms, score_list, calibration_list;
  std::size_t dim = 0, k_neighbors = 10, top_k = 0, n_target = 0, n_nontarget = 0, seeds = 20;
  double alpha = 0.5, ridge = 0.0, prior = 0.01, c_miss = 1.0, c_fa = 1.0, max_rel = 1e-4;
  std::vector<double> p_targets;
  int speakers = 0, utts = 0, iters = 10, variant = 2;
  std::uint64_t seed = 0, noise_seed = 0;
  bool length_norm = false, tsv = false, cosine = false, already_calibrated = false;
  std::vector<std::pair<CLI::App*, std::function<void()>>> actions;
  auto on = [&](CLI::App* sub, std::function<void()> fn) { actions.emplace_back(sub, std::move(fn)); };

  auto* sub_center = app.add_subcommand("fit-center", "Fit per-dataset means");
  sub_center->add_option("--train", train_list, "Embedding file(s) to fit on")->required();
  sub_center->add_option("--out", out, "Dataset-means file")->required();
  on(sub_center, [&] {
    std::vector<Embeddings> sets;
    std::vector<const es_embeddings*> ptrs;
    for (const auto& p : train_list) ptrs.push_back(sets.emplace_back(read_emb(p)).get());
    Means m = make<Means>(es_fit_centering, ptrs.data(), ptrs.size());
    claim_output(out);
    check(es_dataset_means_write(m.get(), out.c_str()));
    note("wrote dataset means " + out);
  });

  auto* sub_lda = app.add_subcommand("fit-lda", "Fit an LDA projection");
  sub_lda->add_option("--train", train, "Labeled embeddings")->required();
  sub_lda->add_option("--dim", dim, "Output dimension")->required();
  sub_lda->add_option("--out", out, "Transform file")->required();
  on(sub_lda, [&] {
    Embeddings t = read_emb(train);
    write_transform(make<Transform>(es_fit_lda, t.get(), dim).get(), out);
  });

  auto* sub_lsda = app.add_subcommand("fit-lsda", "Fit an LSDA projection");
  sub_lsda->add_option("--train", train, "Labeled embeddings")->required();
  sub_lsda->add_option("--dim", dim, "Output dimension")->required();
  sub_lsda->add_option("--k", k_neighbors, "Nearest neighbours per point");
  sub_lsda->add_option("--alpha", alpha, "Between/within trade-off in [0, 1]");
  sub_lsda->add_option("--out", out, "Transform file")->required();
  on(sub_lsda, [&] {
    Embeddings t = read_emb(train);
    write_transform(make<Transform>(es_fit_lsda, t.get(), dim, k_neighbors, alpha).get(), out);
  });

  auto* sub_coral = app.add_subcommand("fit-coral", "Fit a CORAL alignment");
  sub_coral->add_option("--source", source, "Out-of-domain embeddings")->required();
  sub_coral->add_option("--target", target, "In-domain embeddings")->required();
  auto* coral_ridge = sub_coral->add_option("--ridge", ridge, "Absolute ridge (default: relative)");
  sub_coral->add_option("--out", out, "Transform file")->required();
  on(sub_coral, [&] {
    Embeddings s = read_emb(source), t = read_emb(target);
    const double* r = coral_ridge->count() ? &ridge : nullptr;
    write_transform(make<Transform>(es_fit_coral, s.get(), t.get(), r).get(), out);
  });

  auto* sub_whiten = app.add_subcommand("fit-whiten", "Fit in-domain whitening");
  sub_whiten->add_option("--indomain", indomain, "In-domain embeddings")->required();
  sub_whiten->add_option("--ridge", ridge, "Ridge added to the covariance");
  sub_whiten->add_option("--out", out, "Transform file")->required();
  on(sub_whiten, [&] {
    Embeddings s = read_emb(indomain);
    write_transform(make<Transform>(es_fit_whitening, s.get(), ridge).get(), out);
  });

  auto* sub_apply = app.add_subcommand("apply", "Center, transform and length-normalize embeddings");
  sub_apply->add_option("--in", in, "Input embeddings")->required();
  sub_apply->add_option("--center-means", means_path, "Dataset-means file, applied first");
  sub_apply->add_option("--fallback", fallback, "Unseen dataset handling")
      ->check(CLI::IsMember({"global_mean", "error"}));
  sub_apply->add_option("--transform", transforms, "Transform file(s), applied in order");
  sub_apply->add_flag("--length-norm", length_norm, "Length-normalize last");
  sub_apply->add_option("--out", out, "Output embeddings")->required();
  sub_apply->add_option("--format", format, "binary or tsv (default: from extension)");
  on(sub_apply, [&] {
    Embeddings cur = read_emb(in);
    if (!means_path.empty()) {
      Means m = make<Means>(es_dataset_means_read, means_path.c_str());
      cur = make<Embeddings>(es_apply_centering, cur.get(), m.get(), fallback == "error" ? 1 : 0);
    }
    for (const auto& p : transforms) {
      Transform t = make<Transform>(es_transform_read, p.c_str());
      cur = make<Embeddings>(es_transform_apply, t.get(), cur.get());
    }
    if (length_norm) cur = make<Embeddings>(es_length_normalize, cur.get());
    write_emb(cur.get(), out, format);
  });

  auto* sub_ln = app.add_subcommand("length-norm", "Scale embeddings to unit length");
  sub_ln->add_option("--in", in, "Input embeddings")->required();
  sub_ln->add_option("--out", out, "Output embeddings")->required();
  sub_ln->add_option("--format", format, "binary or tsv (default: from extension)");
  on(sub_ln, [&] {
    Embeddings e = read_emb(in);
    write_emb(make<Embeddings>(es_length_normalize, e.get()).get(), out, format);
  });

  auto* sub_compose = app.add_subcommand("compose", "Fold a chain of transforms into one");
  sub_compose->add_option("--transform", transforms, "Transform files in application order")->required();
  sub_compose->add_option("--out", out, "Transform file")->required();
  on(sub_compose, [&] {
    Transform acc = make<Transform>(es_transform_read, transforms.front().c_str());
    for (std::size_t i = 1; i < transforms.size(); ++i) {
      Transform next = make<Transform>(es_transform_read, transforms[i].c_str());
      acc = make<Transform>(es_transform_compose, acc.get(), next.get());
    }
    write_transform(acc.get(), out);
  });

  auto* sub_plda = app.add_subcommand("train-plda", "Train a two-covariance PLDA model by EM");
  sub_plda->add_option("--train", train, "Labeled embeddings")->required();
  sub_plda->add_option("--iters", iters, "EM iterations")->check(CLI::NonNegativeNumber);
  sub_plda->add_option("--seed", seed, "Initialization seed");
  sub_plda->add_option("--out", out, "Model file")->required();
  sub_plda->add_option("--loglik-out", loglik_out, "Write per-iteration log-likelihoods here");
  on(sub_plda, [&] {
    Embeddings t = read_emb(train);
    std::vector<double> ll(static_cast<std::size_t>(iters) + 1);
    es_plda* raw = nullptr;
    check(es_plda_train(t.get(), iters, seed, &raw, ll.data()));
    Plda m(raw);
    claim_output(out);
    check(es_plda_write(m.get(), out.c_str()));
    note("wrote PLDA model " + out + ", log-likelihood " + std::to_string(ll.front()) + " -> " +
         std::to_string(ll.back()));
    if (!loglik_out.empty()) {
      claim_output(loglik_out);
      std::ofstream f(loglik_out, std::ios::binary);
      char buf[64];
      for (double v : ll) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        f << buf;
      }
      if (!f) throw CliError("io", "cannot write " + loglik_out);
    }
  });

  auto* sub_score = app.add_subcommand("score", "Score trials with PLDA or cosine similarity");
  sub_score->add_option("--trials", trials_path, "Trial list")->required();
  sub_score->add_option("--enroll", enroll, "Enrollment embeddings")->required();
  sub_score->add_option("--test", test, "Test embeddings (default: --enroll)");
  auto* score_plda = sub_score->add_option("--plda", plda_path, "PLDA model");
  sub_score->add_flag("--cosine", cosine, "Cosine similarity")->excludes(score_plda);
  sub_score->add_option("--out", out, "Score file")->required();
  on(sub_score, [&] {
    if (plda_path.empty() && !cosine) throw CliError("invalid_argument", "give --plda or --cosine");
    Trials tr = make<Trials>(es_trials_read, trials_path.c_str());
    Embeddings e = read_emb(enroll);
    Embeddings t = test.empty() ? Embeddings() : read_emb(test);
    Plda m = optional_plda(plda_path);
    write_scores(make<Scores>(es_score_trials, tr.get(), e.get(), t ? t.get() : e.get(), m.get()).get(), out);
  });

  auto* sub_asnorm = app.add_subcommand("asnorm", "Adaptive symmetric score normalization");
  sub_asnorm->add_option("--scores", scores_path, "Raw scores")->required();
  sub_asnorm->add_option("--enroll", enroll, "Enrollment embeddings")->required();
  sub_asnorm->add_option("--test", test, "Test embeddings (default: --enroll)");
  sub_asnorm->add_option("--cohort", cohort, "Cohort embeddings")->required();
  sub_asnorm->add_option("--variant", variant, "1 or 2")->check(CLI::IsMember({1, 2}));
  sub_asnorm->add_option("--top-k", top_k, "Cohort size per side (0: 100 for 1, 200 for 2)");
  auto* asnorm_plda = sub_asnorm->add_option("--plda", plda_path, "PLDA model used for raw scores");
  sub_asnorm->add_flag("--cosine", cosine, "Cosine similarity")->excludes(asnorm_plda);
  sub_asnorm->add_option("--out", out, "Normalized score file")->required();
  on(sub_asnorm, [&] {
    if (plda_path.empty() && !cosine) throw CliError("invalid_argument", "give --plda or --cosine");
    Scores raw = make<Scores>(es_scores_read, scores_path.c_str(), static_cast<const es_trials*>(nullptr));
    Embeddings e = read_emb(enroll);
    Embeddings t = test.empty() ? Embeddings() : read_emb(test);
    Embeddings c = read_emb(cohort);
    Plda m = optional_plda(plda_path);
    write_scores(make<Scores>(es_asnorm, raw.get(), e.get(), t ? t.get() : e.get(), c.get(), variant, top_k,
                              static_cast<const es_plda*>(m.get()))
                     .get(),
                 out);
  });

  auto* sub_cal = app.add_subcommand("calibrate", "Fit or apply a linear calibration");
  sub_cal->add_option("--scores", scores_path, "Score file")->required();
  auto* cal_trials = sub_cal->add_option("--trials", trials_path, "Labeled trials (fit mode)");
  sub_cal->add_option("--prior", prior, "Effective target prior");
  auto* cal_in = sub_cal->add_option("--calibration", calibration_path, "Calibration to apply")->excludes(cal_trials);
  sub_cal->add_option("--out", out, "Calibration file written in fit mode");
  sub_cal->add_option("--calibrated-out", calibrated_out, "Calibrated score file");
  on(sub_cal, [&] {
    es_calibration cal{};
    if (cal_in->count()) {
      if (calibrated_out.empty()) throw CliError("invalid_argument", "apply mode needs --calibrated-out");
      check(es_calibration_read(calibration_path.c_str(), &cal));
    } else {
      if (trials_path.empty() || out.empty())
        throw CliError("invalid_argument", "fit mode needs --trials and --out");
      Trials tr = make<Trials>(es_trials_read, trials_path.c_str());
      Scores s = make<Scores>(es_scores_read, scores_path.c_str(), static_cast<const es_trials*>(tr.get()));
      check(es_calibration_fit(s.get(), prior, &cal));
      claim_output(out);
      check(es_calibration_write(&cal, out.c_str()));
      note("wrote calibration " + out);
    }
    if (!calibrated_out.empty()) {
      Scores s = make<Scores>(es_scores_read, scores_path.c_str(), static_cast<const es_trials*>(nullptr));
      write_scores(make<Scores>(es_calibration_apply, s.get(), static_cast<const es_calibration*>(&cal)).get(),
                   calibrated_out);
    }
  });

  auto* sub_fuse = app.add_subcommand("fuse", "Sum calibrated systems");
  sub_fuse->add_option("--scores", score_list, "Score files, one per system")->required();
  auto* fuse_cal = sub_fuse->add_option("--calibration", calibration_list, "Calibration per system");
  sub_fuse->add_flag("--already-calibrated", already_calibrated, "Inputs are calibrated")->excludes(fuse_cal);
  sub_fuse->add_option("--out", out, "Fused score file")->required();
  on(sub_fuse, [&] {
    if (!already_calibrated && calibration_list.size() != score_list.size())
      throw CliError("invalid_argument", "give one --calibration per --scores, or --already-calibrated");
    std::vector<Scores> systems;
    std::vector<const es_scores*> ptrs;
    for (std::size_t i = 0; i < score_list.size(); ++i) {
      Scores s = make<Scores>(es_scores_read, score_list[i].c_str(), static_cast<const es_trials*>(nullptr));
      if (!already_calibrated) {
        es_calibration cal{};
        check(es_calibration_read(calibration_list[i].c_str(), &cal));
        s = make<Scores>(es_calibration_apply, s.get(), static_cast<const es_calibration*>(&cal));
      }
      ptrs.push_back(systems.emplace_back(std::move(s)).get());
    }
    write_scores(make<Scores>(es_fuse, ptrs.data(), ptrs.size()).get(), out);
  });

  auto* sub_eval = app.add_subcommand("evaluate", "EER, minC and actC of labeled scores");
  sub_eval->add_option("--scores", scores_path, "Score file")->required();
  sub_eval->add_option("--trials", trials_path, "Labeled trials")->required();
  sub_eval->add_option("--cost-profile", profile, "cmn2, vast or custom")
      ->check(CLI::IsMember({"cmn2", "vast", "custom"}));
  sub_eval->add_option("--p-target", p_targets, "Target priors (custom profile)");
  sub_eval->add_option("--c-miss", c_miss, "Miss cost (custom profile)");
  sub_eval->add_option("--c-fa", c_fa, "False-alarm cost (custom profile)");
  sub_eval->add_flag("--tsv", tsv, "Header + values instead of the summary line");
  on(sub_eval, [&] {
    Trials tr = make<Trials>(es_trials_read, trials_path.c_str());
    Scores s = make<Scores>(es_scores_read, scores_path.c_str(), static_cast<const es_trials*>(tr.get()));
    es_metrics m{};
    if (profile == "custom") {
      es_cost_params cp{c_miss, c_fa, p_targets.data(), p_targets.size()};
      check(es_evaluate(s.get(), nullptr, &cp, &m));
    } else {
      check(es_evaluate(s.get(), profile.c_str(), nullptr, &m));
    }
    char* text = nullptr;
    check(es_metrics_format(&m, tsv ? 1 : 0, &text));
    std::string line(text);
    es_string_free(text);
    std::fputs(line.c_str(), stdout);
    if (line.empty() || line.back() != '\n') std::fputc('\n', stdout);
  });

  auto* sub_synth = app.add_subcommand("synth", "Generate synthetic embeddings");
  sub_synth->add_option("--config", config, "Config file (flags below override it)");
  auto* o_dim = sub_synth->add_option("--dim", dim, "Embedding dimension");
  auto* o_spk = sub_synth->add_option("--speakers", speakers, "Number of speakers");
  auto* o_utt = sub_synth->add_option("--utts", utts, "Utterances per speaker");
  auto* o_seed = sub_synth->add_option("--seed", seed, "Random seed");
  auto* o_nseed = sub_synth->add_option("--noise-seed", noise_seed, "Seed for within-speaker noise");
  sub_synth->add_option("--out", out, "Output embeddings")->required();
  sub_synth->add_option("--format", format, "binary or tsv (default: from extension)");
  on(sub_synth, [&] {
    std::string text = config.empty() ? std::string() : read_text(config) + "\n";
    if (o_dim->count()) text += "dim = " + std::to_string(dim) + "\n";
    if (o_spk->count()) text += "speakers = " + std::to_string(speakers) + "\n";
    if (o_utt->count()) text += "utts = " + std::to_string(utts) + "\n";
    if (o_seed->count()) text += "seed = " + std::to_string(seed) + "\n";
    if (o_nseed->count()) text += "noise_seed = " + std::to_string(noise_seed) + "\n";
    write_emb(make<Embeddings>(es_synth, text.c_str()).get(), out, format);
  });

  auto* sub_trials = app.add_subcommand("make-trials", "Sample target and nontarget trials");
  sub_trials->add_option("--embeddings", in, "Labeled embeddings")->required();
  sub_trials->add_option("--targets", n_target, "Number of target trials")->required();
  sub_trials->add_option("--nontargets", n_nontarget, "Number of nontarget trials")->required();
  sub_trials->add_option("--seed", seed, "Random seed");
  sub_trials->add_option("--out", out, "Trial list")->required();
  on(sub_trials, [&] {
    Embeddings e = read_emb(in);
    Trials tr = make<Trials>(es_make_trials, static_cast<const es_embeddings*>(e.get()), n_target, n_nontarget, seed);
    claim_output(out);
    check(es_trials_write(tr.get(), out.c_str()));
    note("wrote " + out + " (" + std::to_string(es_trials_count(tr.get())) + " trials)");
  });

  auto* sub_check = app.add_subcommand("encode-check", "Finite-difference check of encoder gradients");
  sub_check->add_option("--seeds", seeds, "Random instances")->check(CLI::PositiveNumber);
  sub_check->add_option("--seed", seed, "Base seed");
  sub_check->add_option("--max-rel-error", max_rel, "Failure threshold");
  on(sub_check, [&] {
    es_gradient_report r{};
    check(es_encode_check(seeds, seed, &r));
    std::printf("seeds\t%zu\nlde_max_rel_error\t%.3e\nasoftmax_max_rel_error\t%.3e\nmargin_free_max_abs_diff\t%.3e\n",
                r.seeds, r.lde_max_rel_error, r.asoftmax_max_rel_error, r.margin_free_max_abs_diff);
    if (r.lde_max_rel_error > max_rel || r.asoftmax_max_rel_error > max_rel)
      throw CliError("numeric", "gradient relative error above " + std::to_string(max_rel));
  });

  auto* sub_recipe = app.add_subcommand("run-recipe", "Run a back-end recipe file");
  sub_recipe->add_option("--recipe", recipe, "Recipe file")->required();
  sub_recipe->add_option("--workdir", workdir, "Artifact directory")->required();
  on(sub_recipe, [&] {
    char* line = nullptr;
    check(es_run_recipe(recipe.c_str(), workdir.c_str(), g.force ? 1 : 0, &line));
    std::string text(line);
    es_string_free(line);
    if (!text.empty()) std::printf("%s\n", text.c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: code=usage msg=%s\n", e.what());
    std::fprintf(stderr, "%s", app.help().c_str());
    return 2;
  }
  try {
    check(es_set_threads(g.threads));
    es_set_log_callback(g.quiet ? nullptr : log_sink, nullptr);
    for (auto& [sub, fn] : actions)
      if (sub->parsed()) fn();
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: code=%s msg=%s\n", e.code.c_str(), e.what());
    return 1;
  }
  return 0;
}
