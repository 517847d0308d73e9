/*
 * Copyright 2026 The mmfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line entry point: synth, label, train-eval, explain, report.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmfuse/cohort.h"
#include "mmfuse/cohort_io.h"
#include "mmfuse/common.h"
#include "mmfuse/experiment.h"
#include "mmfuse/features.h"
#include "mmfuse/fusion.h"
#include "mmfuse/gbdt.h"
#include "mmfuse/interpret.h"
#include "mmfuse/log.h"
#include "mmfuse/models.h"
#include "mmfuse/text.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mmfuse {
namespace {

// Everything needed to reproduce one train-eval invocation.
struct ExperimentConfig {
  std::string cohort;  // directory or manifest; empty means synthesize
  int synth_n = 40;
  std::uint64_t synth_seed = 7;
  double synth_signal = 1.0;
  bool literal_polarity = false;
  std::string tabular_encoding = "binary";  // or "one-hot"
  std::string embeddings;  // precomputed index; empty means hashing provider
  AcousticConfig acoustic;
  ModelSpec model;
  ExperimentOptions eval;
  std::string out = "mmfuse-out";

  json ToJson() const {
    return {{"cohort", cohort.empty() ? json(nullptr) : json(cohort)},
            {"synth", {{"n", synth_n}, {"seed", synth_seed}, {"signal", synth_signal}}},
            {"polarity", literal_polarity ? "literal" : "default"},
            {"tabular_encoding", tabular_encoding},
            {"embeddings", embeddings.empty() ? json(nullptr) : json(embeddings)},
            {"acoustic", acoustic.ToJson()},
            {"model", model.ToJson()},
            {"eval", eval.ToJson()},
            {"seed", eval.seed},
            {"out", out}};
  }

  static ExperimentConfig FromJson(const json& j) {
    ExperimentConfig c;
    if (j.contains("cohort") && !j["cohort"].is_null()) c.cohort = j["cohort"].get<std::string>();
    if (j.contains("synth")) {
      const auto& s = j["synth"];
      c.synth_n = s.value("n", c.synth_n);
      c.synth_seed = s.value("seed", c.synth_seed);
      c.synth_signal = s.value("signal", c.synth_signal);
    }
    const std::string polarity = j.value("polarity", std::string("default"));
    if (polarity != "default" && polarity != "literal") {
      throw ValidationError("polarity must be 'default' or 'literal', got '" + polarity + "'");
    }
    c.literal_polarity = polarity == "literal";
    c.tabular_encoding = j.value("tabular_encoding", c.tabular_encoding);
    if (j.contains("embeddings") && !j["embeddings"].is_null()) {
      c.embeddings = j["embeddings"].get<std::string>();
    }
    if (j.contains("acoustic")) c.acoustic = AcousticConfig::FromJson(j["acoustic"]);
    if (j.contains("model")) c.model = ModelSpec::FromJson(j["model"]);
    if (j.contains("eval")) c.eval = ExperimentOptions::FromJson(j["eval"]);
    if (j.contains("seed")) c.eval.seed = j["seed"].get<std::uint64_t>();
    c.out = j.value("out", c.out);
    return c;
  }
};

// "binary" packs two-level categoricals into one column (14 variables);
// "one-hot" expands every categorical into indicator columns.
TabularSchema SchemaFor(const std::string& encoding) {
  if (encoding == "binary") return TabularSchema::Default();
  if (encoding == "one-hot") return TabularSchema::OneHot();
  throw ValidationError("tabular encoding must be 'binary' or 'one-hot', got '" + encoding + "'");
}

std::unique_ptr<EmbeddingProvider> MakeProvider(const std::string& embeddings) {
  if (embeddings.empty()) return std::make_unique<HashingEmbeddingProvider>();
  return std::make_unique<PrecomputedEmbeddingProvider>(embeddings);
}

std::vector<int> BinaryLabels(const std::vector<PrognosisLabel>& labels) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(l.desirable ? 1 : 0);
  return out;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string OutPath(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  int n = 40;
  std::uint64_t seed = 7;
  double signal = 1.0;
  std::string out;
};

int RunSynth(const SynthArgs& a) {
  const SyntheticCohort cohort = SynthCohort(a.n, a.seed, a.signal);
  WriteCohort(a.out, cohort.records);
  std::size_t clips = 0;
  for (const auto& r : cohort.records) clips += r.utterances.size();
  std::cout << "wrote " << cohort.records.size() << " patients and " << clips << " recordings to "
            << a.out << "\n";
  return 0;
}

struct LabelArgs {
  std::string cohort;
  bool literal_polarity = false;
  std::string out;
};

int RunLabel(const LabelArgs& a) {
  const auto records = ReadCohort(a.cohort);
  const auto standard = LabelCohort(records, DefaultPolarity());
  const auto literal = LabelCohort(records, LiteralPolarity());
  const auto& chosen = a.literal_polarity ? literal : standard;
  WriteFileAtomic(OutPath(a.out, "labels.csv"), FormatLabelsCsv(records, chosen));

  std::ostringstream diff;
  diff << "patient_id,default,literal_polarity\n";
  int differ = 0, desirable = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (chosen[i].desirable) ++desirable;
    if (standard[i].desirable == literal[i].desirable) continue;
    ++differ;
    diff << records[i].patient_id << "," << (standard[i].desirable ? 1 : 0) << ","
         << (literal[i].desirable ? 1 : 0) << "\n";
  }
  WriteFileAtomic(OutPath(a.out, "polarity_diff.csv"), diff.str());
  std::cout << "labeled " << records.size() << " patients (" << desirable << " desirable, "
            << (a.literal_polarity ? "literal" : "default") << " polarity); polarity modes differ on "
            << differ << " patients\n";
  return 0;
}

struct TrainEvalArgs {
  std::string config;
  std::string cohort;
  std::string strategy;
  std::string modalities;
  std::string backend;
  int repeats = -1;
  int folds = -1;
  int epochs = -1;
  int trees = -1;
  int bootstrap = -1;
  int n = -1;
  double signal = std::nan("");
  std::string tabular_encoding;
  bool literal_polarity = false;
  bool no_checkpoints = false;
};

int RunTrainEval(const TrainEvalArgs& a, const std::string& out_flag, const std::uint64_t* seed) {
  ExperimentConfig cfg;
  if (!a.config.empty()) cfg = ExperimentConfig::FromJson(json::parse(ReadFile(a.config)));
  if (!a.cohort.empty()) cfg.cohort = a.cohort;
  if (!a.strategy.empty()) cfg.model.strategy = ParseStrategy(a.strategy);
  if (!a.modalities.empty()) {
    cfg.model.modalities.clear();
    for (const auto& m : SplitList(a.modalities)) cfg.model.modalities.push_back(ParseModality(m));
  }
  if (!a.backend.empty()) {
    json j = cfg.model.ToJson();
    j["backend"] = a.backend;
    cfg.model = ModelSpec::FromJson(j);
  }
  if (a.repeats > 0) cfg.eval.repeats = a.repeats;
  if (a.folds > 0) cfg.eval.folds = a.folds;
  if (a.epochs > 0) cfg.model.train.epochs = a.epochs;
  if (a.trees > 0) cfg.model.gbdt.trees = a.trees;
  if (a.bootstrap > 0) cfg.eval.bootstrap_resamples = a.bootstrap;
  if (a.n > 0) cfg.synth_n = a.n;
  if (!std::isnan(a.signal)) cfg.synth_signal = a.signal;
  if (a.literal_polarity) cfg.literal_polarity = true;
  if (!a.tabular_encoding.empty()) cfg.tabular_encoding = a.tabular_encoding;
  SchemaFor(cfg.tabular_encoding);
  if (seed) cfg.eval.seed = *seed;
  if (!out_flag.empty()) cfg.out = out_flag;
  cfg.model.Normalize();
  MakeModel(cfg.model);  // validates the strategy before any work

  std::vector<PatientRecord> records;
  if (cfg.cohort.empty()) {
    records = SynthCohort(cfg.synth_n, cfg.synth_seed, cfg.synth_signal).records;
    WriteCohort(OutPath(cfg.out, "cohort"), records);
  } else {
    records = ReadCohort(cfg.cohort);
  }
  const auto labels = LabelCohort(records, cfg.literal_polarity ? LiteralPolarity() : DefaultPolarity());
  const auto provider = MakeProvider(cfg.embeddings);
  const FeatureBank bank = BuildFeatureBank(records, *provider, cfg.acoustic,
                                          SchemaFor(cfg.tabular_encoding));

  WriteFileAtomic(OutPath(cfg.out, "config.json"), cfg.ToJson().dump(2) + "\n");
  WriteFileAtomic(OutPath(cfg.out, "labels.csv"), FormatLabelsCsv(records, labels));

  const std::string ckpt_root = OutPath(cfg.out, "checkpoints");
  RunCallback on_run;
  if (!a.no_checkpoints) {
    on_run = [&](const RunRecord& rec, const Model& model) {
      model.Save((fs::path(ckpt_root) / ("run_" + std::to_string(rec.run))).string());
    };
  }
  const MetricReport report = RunExperiment(bank, BinaryLabels(labels), cfg.model, cfg.eval, on_run);

  std::ostringstream preds;
  preds << "run,patient_id,p_desirable,label\n";
  for (const auto& r : report.runs) {
    for (std::size_t i = 0; i < r.test_ids.size(); ++i) {
      preds << r.run << "," << r.test_ids[i] << "," << FormatDouble(r.test_probs[i]) << ","
            << r.test_labels[i] << "\n";
    }
  }
  WriteFileAtomic(OutPath(cfg.out, "report.json"), report.ToJson().dump(2) + "\n");
  WriteFileAtomic(OutPath(cfg.out, "loss_curves.csv"), FormatLossCurvesCsv(report));
  WriteFileAtomic(OutPath(cfg.out, "predictions.csv"), preds.str());
  std::cout << FormatComparisonTable({report});
  return 0;
}

struct ExplainArgs {
  std::string checkpoint;
  std::string cohort;
  std::string embeddings;
  std::string tabular_encoding = "binary";
  std::string patients;
  std::string target = "predicted";
  int steps = 256;
  int components = 14;
};

void CollectTrees(const Model& model, std::vector<const GbdtModel*>* out) {
  if (const auto* g = dynamic_cast<const GbdtModel*>(&model)) out->push_back(g);
  for (const Model* m : model.members()) {
    if (m) CollectTrees(*m, out);
  }
}

bool AnyDifferentiable(const Model& model) {
  if (model.network()) return true;
  for (const Model* m : model.members()) {
    if (m && AnyDifferentiable(*m)) return true;
  }
  return false;
}

Matrix RowsToMatrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), m.row(r));
  return m;
}

json CcaJson(const CcaResult& c, std::size_t n, std::size_t components) {
  return {{"r", c.r}, {"regularized", c.regularized}, {"patients", n},
          {"components", components}, {"second_weights", c.y_weights},
          {"second_loadings", c.y_loadings}};
}

int RunExplain(const ExplainArgs& a, const std::string& out) {
  if (a.target != "predicted" && a.target != "desirable") {
    throw ValidationError("--target must be 'predicted' or 'desirable'");
  }
  if (a.components < 1) throw ValidationError("--components must be positive");
  const auto model = LoadModel(a.checkpoint);
  const auto records = ReadCohort(a.cohort);
  const auto provider = MakeProvider(a.embeddings);
  const FeatureBank bank =
      BuildFeatureBank(records, *provider, {}, SchemaFor(a.tabular_encoding));

  std::vector<std::size_t> patients;
  if (a.patients.empty()) {
    for (std::size_t i = 0; i < bank.size(); ++i) patients.push_back(i);
  } else {
    for (const auto& id : SplitList(a.patients)) patients.push_back(bank.IndexOf(id));
  }

  // Integrated gradients over every differentiable part.
  if (AnyDifferentiable(*model)) {
    const IgTarget target = a.target == "desirable" ? IgTarget::kDesirable : IgTarget::kPredictedClass;
    std::vector<AttributionReport> reports;
    for (std::size_t p : patients) {
      auto part = AttributeModel(*model, bank, p, a.steps, target);
      reports.insert(reports.end(), part.begin(), part.end());
    }
    double worst = 0.0;
    json items = json::array();
    std::map<std::string, std::vector<AttributionReport>> by_model;
    for (const auto& r : reports) {
      worst = std::max(worst, r.completeness_gap);
      items.push_back(r.ToJson());
      by_model[r.model].push_back(r);
    }
    WriteFileAtomic(OutPath(out, "attributions.json"),
                    json{{"reports", items}, {"max_completeness_gap", worst}}.dump(2) + "\n");
    std::vector<std::pair<std::string, std::vector<DistributionSummary>>> labelled;
    for (const auto& [label, rs] : by_model) labelled.emplace_back(label, AttributionDistribution(rs));
    WriteFileAtomic(OutPath(out, "attribution_summary.csv"), FormatDistributionCsv(labelled));
    std::cout << "integrated gradients: " << reports.size()
              << " reports, max completeness gap " << FormatDouble(worst) << "\n";
  } else {
    std::cout << "integrated gradients: skipped (no differentiable component)\n";
  }

  // Feature importance for every tree ensemble.
  std::vector<const GbdtModel*> trees;
  CollectTrees(*model, &trees);
  for (std::size_t k = 0; k < trees.size(); ++k) {
    const std::string name = trees.size() == 1 ? "importance.csv" : "importance_" + std::to_string(k) + ".csv";
    WriteFileAtomic(OutPath(out, name), gbdt::FormatImportanceCsv(trees[k]->ensemble()));
  }
  if (!trees.empty()) std::cout << "feature importance: " << trees.size() << " ensemble(s)\n";

  // First canonical variate of tabular against text and audio. The scaler is
  // fitted on the whole cohort since this is descriptive.
  const TabularScaler scaler = TabularScaler::Fit(records, bank.schema);
  std::vector<std::vector<double>> tab_rows, text_rows, audio_rows;
  bool all_audio = true;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& pf = bank.patients[i];
    tab_rows.push_back(scaler.Transform(pf.tabular_raw).values);
    text_rows.push_back(pf.text_pooled);
    if (pf.utterances.empty()) {
      all_audio = false;
      continue;
    }
    std::vector<double> mean(bank.audio_bins, 0.0);
    std::size_t frames = 0;
    for (const auto& u : pf.utterances) {
      const auto& d = u.data();
      const std::size_t rows = d.size() / bank.audio_bins;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t b = 0; b < bank.audio_bins; ++b) mean[b] += d[r * bank.audio_bins + b];
      frames += rows;
    }
    for (double& v : mean) v /= static_cast<double>(std::max<std::size_t>(frames, 1));
    audio_rows.push_back(std::move(mean));
  }
  const Matrix tab = RowsToMatrix(tab_rows);
  const std::size_t k = std::min<std::size_t>(a.components, bank.size() - 2);
  json cca_summary = json::object();
  const CcaResult text_cca = CcaFirst(tab, PrincipalComponents(RowsToMatrix(text_rows), k));
  WriteFileAtomic(OutPath(out, "cca_tabular_text.csv"),
                  FormatCcaCsv("tabular-text", scaler.ColumnNames(), text_cca));
  cca_summary["tabular-text"] = CcaJson(text_cca, bank.size(), k);
  if (all_audio) {
    const CcaResult audio_cca = CcaFirst(tab, PrincipalComponents(RowsToMatrix(audio_rows), k));
    WriteFileAtomic(OutPath(out, "cca_tabular_audio.csv"),
                    FormatCcaCsv("tabular-audio", scaler.ColumnNames(), audio_cca));
    cca_summary["tabular-audio"] = CcaJson(audio_cca, bank.size(), k);
  }
  WriteFileAtomic(OutPath(out, "cca.json"), cca_summary.dump(2) + "\n");
  std::cout << "cca tabular-text r = " << FormatDouble(text_cca.r) << "\n";
  return 0;
}

struct ReportArgs {
  std::vector<std::string> reports;
  std::vector<std::string> attributions;
};

int RunReport(const ReportArgs& a, const std::string& out) {
  if (a.reports.empty() && a.attributions.empty()) {
    throw ValidationError("report needs --reports and/or --attributions");
  }
  if (!a.reports.empty()) {
    std::vector<MetricReport> reports;
    for (const auto& path : a.reports) reports.push_back(MetricReport::FromJson(json::parse(ReadFile(path))));
    const std::string table = FormatComparisonTable(reports);
    WriteFileAtomic(OutPath(out, "comparison.txt"), table);
    std::cout << table;
  }
  if (!a.attributions.empty()) {
    std::map<std::string, std::vector<AttributionReport>> by_model;
    for (const auto& path : a.attributions) {
      const json j = json::parse(ReadFile(path));
      for (const auto& item : j.at("reports")) {
        auto r = AttributionReport::FromJson(item);
        by_model[r.model].push_back(std::move(r));
      }
    }
    std::vector<std::pair<std::string, std::vector<DistributionSummary>>> labelled;
    for (const auto& [label, rs] : by_model) labelled.emplace_back(label, AttributionDistribution(rs));
    WriteFileAtomic(OutPath(out, "attribution_distribution.csv"), FormatDistributionCsv(labelled));
  }
  return 0;
}

}  // namespace
}  // namespace mmfuse

int main(int argc, char** argv) {
  using namespace mmfuse;
  CLI::App app{"mmfuse: multimodal fusion experiments on patient cohorts"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out;
  std::uint64_t seed = 0;
  std::string config;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for all randomness");
  app.add_option("--out", out, "Output directory");
  app.add_option("--config", config, "JSON experiment config (train-eval)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic cohort");
  synth_cmd->add_option("--n", synth.n, "Patient count");
  synth_cmd->add_option("--signal", synth.signal, "Signal strength in [0, 1]");

  LabelArgs label;
  auto* label_cmd = app.add_subcommand("label", "Derive prognosis labels from outcomes");
  label_cmd->add_option("--cohort", label.cohort, "Cohort directory or manifest")->required();
  label_cmd->add_flag("--literal-polarity", label.literal_polarity, "Use the literal outcome polarity");

  TrainEvalArgs te;
  auto* te_cmd = app.add_subcommand("train-eval", "Repeated cross-validated training and evaluation");
  te_cmd->add_option("--cohort", te.cohort, "Cohort directory (default: synthesize)");
  te_cmd->add_option("--strategy", te.strategy, "unimodal, gbdt, ef, jf, lf, ef+lf, jf+lf or mixture");
  te_cmd->add_option("--modalities", te.modalities, "Comma list of tabular, text, audio");
  te_cmd->add_option("--backend", te.backend, "nn or gbdt (early fusion)");
  te_cmd->add_option("--repeats", te.repeats, "Repeated splits");
  te_cmd->add_option("--folds", te.folds, "Cross-validation folds");
  te_cmd->add_option("--epochs", te.epochs, "Network epoch budget");
  te_cmd->add_option("--trees", te.trees, "Boosting rounds");
  te_cmd->add_option("--bootstrap", te.bootstrap, "Bootstrap resamples");
  te_cmd->add_option("--n", te.n, "Synthetic cohort size");
  te_cmd->add_option("--signal", te.signal, "Synthetic signal strength");
  te_cmd->add_flag("--literal-polarity", te.literal_polarity, "Use the literal outcome polarity");
  te_cmd->add_option("--tabular-encoding", te.tabular_encoding, "binary (default) or one-hot");
  te_cmd->add_flag("--no-checkpoints", te.no_checkpoints, "Skip per-run checkpoints");

  ExplainArgs ex;
  auto* ex_cmd = app.add_subcommand("explain", "Attributions, feature importance and CCA");
  ex_cmd->add_option("--checkpoint", ex.checkpoint, "Saved model directory")->required();
  ex_cmd->add_option("--cohort", ex.cohort, "Cohort directory or manifest")->required();
  ex_cmd->add_option("--embeddings", ex.embeddings, "Precomputed embedding index");
  ex_cmd->add_option("--tabular-encoding", ex.tabular_encoding,
                     "Tabular encoding for the CCA tables: binary or one-hot");
  ex_cmd->add_option("--patients", ex.patients, "Comma list of patient ids (default: all)");
  ex_cmd->add_option("--target", ex.target, "predicted or desirable");
  ex_cmd->add_option("--steps", ex.steps, "Integration steps");
  ex_cmd->add_option("--components", ex.components, "Principal components kept per modality for CCA");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Comparison table and attribution summaries");
  rep_cmd->add_option("--reports", rep.reports, "Metric report JSON files");
  rep_cmd->add_option("--attributions", rep.attributions, "Attribution JSON files from explain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) {
      if (out.empty()) throw ValidationError("synth needs --out");
      synth.out = out;
      if (*seed_opt) synth.seed = seed;
      return RunSynth(synth);
    }
    if (label_cmd->parsed()) {
      if (out.empty()) throw ValidationError("label needs --out");
      label.out = out;
      return RunLabel(label);
    }
    if (te_cmd->parsed()) {
      te.config = config;
      return RunTrainEval(te, out, *seed_opt ? &seed : nullptr);
    }
    if (ex_cmd->parsed()) {
      if (out.empty()) throw ValidationError("explain needs --out");
      return RunExplain(ex, out);
    }
    if (rep_cmd->parsed()) {
      if (out.empty()) throw ValidationError("report needs --out");
      return RunReport(rep, out);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: invalid JSON input: " << e.what() << "\n";
    return 1;
  } catch (const RuntimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
