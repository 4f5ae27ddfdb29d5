// stepleak: batch driver for synthetic cohort generation, feature export,
// attribute-inference and linkability experiments, and report aggregation.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stepleak/attrinf.hpp"
#include "stepleak/config.hpp"
#include "stepleak/core.hpp"
#include "stepleak/eval.hpp"
#include "stepleak/linkage.hpp"
#include "stepleak/synth.hpp"

namespace fs = std::filesystem;
using stepleak::json;

namespace {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

LogLevel log_threshold() {
  static LogLevel level = [] {
    const char* env = std::getenv("STEPLEAK_LOG");
    std::string v = env ? env : "warn";
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    if (v == "error") return LogLevel::error;
    return LogLevel::warn;
  }();
  return level;
}

void log(LogLevel level, const std::string& msg) {
  static const char* names[] = {"debug", "info", "warn", "error"};
  if (level >= log_threshold())
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

void emit_error(const std::string& stage, const std::string& msg) {
  json err;
  err["error"] = msg;
  err["stage"] = stage;
  std::cerr << err.dump() << "\n";
}

/// Runs jobs over a bounded worker pool; slot order is fixed up front so the
/// collected output is independent of scheduling.
void run_jobs(const std::vector<std::function<void()>>& jobs, int n_workers) {
  if (n_workers <= 1 || jobs.size() <= 1) {
    for (const auto& j : jobs) j();
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      jobs[i]();
    }
  };
  std::vector<std::thread> threads;
  const int n = std::min<int>(n_workers, static_cast<int>(jobs.size()));
  threads.reserve(n);
  for (int t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

void write_manifest(const fs::path& out_dir, const stepleak::ExperimentConfig& cfg) {
  json m;
  m["config_hash"] = stepleak::config_hash(cfg.raw);
  m["seed"] = cfg.seed;
  m["version"] = stepleak::kToolVersion;
  std::ofstream f(out_dir / "manifest.json");
  f << m.dump(2) << "\n";
}

stepleak::Cohort obtain_cohort(const stepleak::ExperimentConfig& cfg) {
  if (cfg.data)
    return stepleak::load_cohort(cfg.data->first, cfg.data->second);
  if (cfg.synth) return stepleak::generate(*cfg.synth).cohort;
  throw stepleak::DataError("no data source configured");
}

int cmd_synth(const stepleak::ExperimentConfig& cfg) {
  if (!cfg.synth)
    throw stepleak::DataError("synth subcommand requires a 'synth' section");
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  const auto sc = stepleak::generate(*cfg.synth);
  stepleak::write_cohort(sc.cohort, (out / "steps.csv").string(),
                         (out / "attributes.csv").string());
  std::ofstream excl(out / "exclusions.json");
  excl << "[]\n";
  write_manifest(out, cfg);
  log(LogLevel::info, "synth: wrote " + std::to_string(sc.cohort.records.size()) +
                          " users to " + out.string());
  return 0;
}

int cmd_features(const stepleak::ExperimentConfig& cfg) {
  if (cfg.feature_exports.empty())
    throw stepleak::DataError("features subcommand requires features.configs");
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  const auto cohort = obtain_cohort(cfg);
  for (std::size_t i = 0; i < cfg.feature_exports.size(); ++i) {
    const auto& fc = cfg.feature_exports[i];
    const std::string stem = "features_" + std::to_string(i);
    std::ofstream csv(out / (stem + ".csv"));
    // header is emitted per first row since action rows vary in length
    bool header_done = false;
    auto emit = [&](const std::string& user, int day,
                    const std::vector<double>& values) {
      if (!header_done) {
        csv << "user_id,day";
        for (std::size_t k = 0; k < values.size(); ++k) csv << ",f" << k;
        csv << "\n";
        header_done = true;
      }
      csv << user << ',' << day;
      for (double v : values) csv << ',' << v;
      csv << "\n";
    };
    for (const auto& rec : cohort.records) {
      if (fc.scope == stepleak::Scope::day) {
        for (int d = 0; d < stepleak::kDaysPerWeek; ++d) {
          auto raw = rec.series.day(d);
          std::vector<double> v;
          switch (fc.method) {
            case stepleak::Method::raw:
              v.assign(raw.begin(), raw.end());
              break;
            case stepleak::Method::statistical:
              v = stepleak::extract_statistical(raw, fc.window, fc.stats);
              break;
            case stepleak::Method::distributional:
              v = stepleak::extract_distributional(raw, fc.window, fc.bucket,
                                                   cohort.stats.max_steps);
              break;
          }
          if (fc.normalization == stepleak::Normalization::vector_wise)
            v = stepleak::normalize_vector_wise(std::move(v));
          else if (fc.normalization == stepleak::Normalization::prob_dist)
            v = stepleak::normalize_prob_dist(std::move(v));
          emit(rec.series.user_id, d, v);
        }
      } else {
        std::vector<double> v;
        const auto& raw = rec.series.counts;
        switch (fc.method) {
          case stepleak::Method::raw:
            v.assign(raw.begin(), raw.end());
            break;
          case stepleak::Method::statistical:
            v = stepleak::extract_statistical(raw, fc.window, fc.stats);
            break;
          case stepleak::Method::distributional:
            v = stepleak::extract_distributional(raw, fc.window, fc.bucket,
                                                 cohort.stats.max_steps);
            break;
        }
        if (fc.normalization == stepleak::Normalization::vector_wise)
          v = stepleak::normalize_vector_wise(std::move(v));
        else if (fc.normalization == stepleak::Normalization::prob_dist)
          v = stepleak::normalize_prob_dist(std::move(v));
        emit(rec.series.user_id, -1, v);
      }
    }
    std::ofstream sidecar(out / (stem + ".json"));
    sidecar << stepleak::feature_config_to_json(fc).dump(2) << "\n";
  }
  write_manifest(out, cfg);
  return 0;
}

int cmd_infer(const stepleak::ExperimentConfig& cfg, int jobs) {
  if (!cfg.infer) throw stepleak::DataError("infer subcommand requires an 'infer' section");
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  const auto cohort = obtain_cohort(cfg);
  const auto& sec = *cfg.infer;

  struct Cell {
    std::string attribute;
    std::size_t config_idx, model_idx;
  };
  std::vector<Cell> cells;
  for (const auto& attr : sec.attributes)
    for (std::size_t c = 0; c < sec.configs.size(); ++c)
      for (std::size_t m = 0; m < sec.classifiers.size(); ++m)
        cells.push_back({attr, c, m});

  std::vector<stepleak::TaskResult> results(cells.size());
  std::vector<std::function<void()>> work;
  for (std::size_t i = 0; i < cells.size(); ++i)
    work.emplace_back([&, i] {
      const auto& cell = cells[i];
      stepleak::TaskSpec task;
      task.attribute = cell.attribute;
      task.cv_folds = sec.cv_folds;
      task.seed = cfg.seed;
      task.action_aggregation = sec.aggregation;
      results[i] = stepleak::run_task_cell(
          cohort, task, sec.configs[cell.config_idx],
          sec.classifiers[cell.model_idx],
          stepleak::mix_seed(cfg.seed, 0xce110000ULL + cell.config_idx * 1000 +
                                           cell.model_idx));
      log(LogLevel::info,
          "infer " + cell.attribute + " cell " + std::to_string(i) +
              ": mean AUC " + std::to_string(results[i].mean_auc));
    });
  run_jobs(work, jobs);

  json out_json = json::array();
  for (const auto& r : results) out_json.push_back(stepleak::task_result_to_json(r));
  std::ofstream f(out / "infer_results.json");
  f << out_json.dump(2) << "\n";
  write_manifest(out, cfg);
  return 0;
}

int cmd_link(const stepleak::ExperimentConfig& cfg, int jobs) {
  if (!cfg.link) throw stepleak::DataError("link subcommand requires a 'link' section");
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  const auto cohort = obtain_cohort(cfg);
  const auto& sec = *cfg.link;

  std::vector<stepleak::PairSet> pair_sets;
  for (std::size_t c = 0; c < sec.configs.size(); ++c)
    pair_sets.push_back(stepleak::build_pairs(
        cohort, sec.configs[c], stepleak::mix_seed(cfg.seed, 0x7061ULL + c)));

  struct Cell {
    std::size_t config_idx;
    stepleak::LinkAttackKind attack;
  };
  std::vector<Cell> cells;
  for (std::size_t c = 0; c < sec.configs.size(); ++c)
    for (auto a : sec.attacks) cells.push_back({c, a});

  std::vector<stepleak::LinkResult> results(cells.size());
  std::vector<std::function<void()>> work;
  for (std::size_t i = 0; i < cells.size(); ++i)
    work.emplace_back([&, i] {
      const auto& cell = cells[i];
      results[i] = stepleak::link_cross_validate(
          pair_sets[cell.config_idx], cell.attack, sec.cv_folds,
          stepleak::mix_seed(cfg.seed, 0x6c6bULL + i), sec.siamese, sec.forest);
      log(LogLevel::info, "link cell " + std::to_string(i) + ": mean AUC " +
                              std::to_string(results[i].mean_auc));
    });
  run_jobs(work, jobs);

  json out_json = json::array();
  for (const auto& r : results) out_json.push_back(stepleak::link_result_to_json(r));
  std::ofstream f(out / "link_results.json");
  f << out_json.dump(2) << "\n";

  if (sec.dump_scores) {
    // per-pair distances of the unsupervised attacks, for ROC plotting
    std::ofstream csv(out / "link_scores.csv");
    csv << "config,metric,left_user,left_day,right_user,right_day,distance,label\n";
    for (std::size_t c = 0; c < pair_sets.size(); ++c) {
      const auto& ps = pair_sets[c];
      for (auto metric : {stepleak::SimilarityMetric::euclidean,
                          stepleak::SimilarityMetric::cosine}) {
        const auto res = stepleak::similarity_attack(ps, metric);
        for (std::size_t i = 0; i < ps.pairs.size(); ++i) {
          const auto& p = ps.pairs[i];
          csv << c << ','
              << (metric == stepleak::SimilarityMetric::euclidean ? "euclidean"
                                                                  : "cosine")
              << ',' << ps.user_ids[p.left_user] << ',' << p.left_day << ','
              << ps.user_ids[p.right_user] << ',' << p.right_day << ','
              << res.distances[i] << ',' << p.label << "\n";
        }
      }
    }
  }
  write_manifest(out, cfg);
  return 0;
}

int cmd_report(const stepleak::ExperimentConfig& cfg) {
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);

  std::ofstream summary(out / "summary.csv");
  summary << "source,task,config,model,mean_auc,std_auc,n_folds\n";
  std::size_t rows = 0;
  for (const auto& [file, source] :
       {std::pair<std::string, std::string>{"infer_results.json", "infer"},
        {"link_results.json", "link"}}) {
    const fs::path path = out / file;
    if (!fs::exists(path)) continue;
    json arr;
    std::ifstream(path) >> arr;
    for (const auto& r : arr) {
      const std::string task =
          source == "infer" ? r.value("attribute", "") : r.value("attack", "");
      const std::string model =
          source == "infer" ? r.value("classifier", "") : r.value("attack", "");
      std::string config_str = r.at("config").dump();
      // CSV-quote: double any embedded quotes
      for (std::size_t pos = 0; (pos = config_str.find('"', pos)) != std::string::npos;
           pos += 2)
        config_str.insert(pos, 1, '"');
      summary << source << ',' << task << ",\"" << config_str << "\","
              << model << ','
              << r.at("mean_auc").get<double>() << ','
              << r.at("std_auc").get<double>() << ','
              << r.at("fold_aucs").size() << "\n";
      ++rows;
    }
  }
  log(LogLevel::info, "report: " + std::to_string(rows) + " summary rows");

  // ROC points from dumped per-pair distances
  const fs::path scores_path = out / "link_scores.csv";
  if (fs::exists(scores_path)) {
    std::ifstream in(scores_path);
    std::string line;
    std::getline(in, line);  // header
    std::map<std::string, std::vector<stepleak::ScoredSample>> by_key;
    while (std::getline(in, line)) {
      const auto f = stepleak::detail::split_csv_line(line);
      if (f.size() != 8) continue;
      by_key[f[0] + "_" + f[1]].push_back(
          {-std::stod(f[6]), std::stoi(f[7])});
    }
    std::ofstream roc(out / "roc.csv");
    roc << "key,fpr,tpr,threshold\n";
    for (const auto& [key, samples] : by_key) {
      const auto curve = stepleak::roc_curve(samples);
      for (const auto& p : curve.points)
        roc << key << ',' << p.fpr << ',' << p.tpr << ',' << p.threshold << "\n";
    }
  }

  // PCA coordinates of coarse weekly activity profiles, when data is at hand
  if (cfg.data || cfg.synth) {
    try {
      const auto cohort = obtain_cohort(cfg);
      if (cohort.records.size() >= 3) {
        std::vector<std::vector<double>> profiles;
        for (const auto& r : cohort.records) {
          // 3-hour sums over the week keep the PCA tractable
          std::vector<double> p;
          for (int s = 0; s < stepleak::kPeriodsPerWeek; s += 720) {
            double acc = 0;
            for (int i = s; i < s + 720; ++i) acc += r.series.counts[i];
            p.push_back(acc);
          }
          profiles.push_back(std::move(p));
        }
        const auto pca = stepleak::pca_project(profiles, 2);
        std::ofstream f(out / "pca.csv");
        f << "user_id,c1,c2,label\n";
        for (std::size_t i = 0; i < cohort.records.size(); ++i)
          f << cohort.records[i].series.user_id << ',' << pca.coords[i][0]
            << ',' << pca.coords[i][1] << ','
            << cohort.records[i].labels.age_bin << "\n";
      }
    } catch (const std::exception& e) {
      log(LogLevel::warn, std::string("report: PCA skipped: ") + e.what());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privacy-risk audit toolkit for per-15s step-count data"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  int jobs = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file (JSON)")
        ->required();
    sub->add_option("--out", out_override, "output directory override");
    sub->add_option("--seed", seed_override, "global seed override")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--jobs", jobs, "max concurrent experiment workers");
  };

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort");
  auto* features_cmd = app.add_subcommand("features", "export feature matrices");
  auto* infer_cmd = app.add_subcommand("infer", "run attribute-inference attacks");
  auto* link_cmd = app.add_subcommand("link", "run linkability attacks");
  auto* report_cmd = app.add_subcommand("report", "aggregate result files");
  auto* validate_cmd = app.add_subcommand("validate", "validate a config file");
  for (auto* sub :
       {synth_cmd, features_cmd, infer_cmd, link_cmd, report_cmd, validate_cmd})
    add_common(sub);

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  stepleak::Diagnostics diag;
  auto cfg = stepleak::load_experiment_config(config_path, diag);
  if (sub == "validate") {
    if (diag.ok()) {
      std::cout << "ok\n";
      return 0;
    }
    for (const auto& e : diag.errors) std::cout << e << "\n";
    emit_error("validate", std::to_string(diag.errors.size()) + " diagnostics");
    return 1;
  }
  if (!diag.ok()) {
    std::string msg;
    for (const auto& e : diag.errors) msg += (msg.empty() ? "" : "; ") + e;
    emit_error("config", msg);
    return 1;
  }

  if (seed_given) cfg.seed = seed_override;
  if (!out_override.empty()) cfg.out_dir = out_override;
  // an unseeded synth section follows the global seed
  if (cfg.synth && !cfg.raw.contains("/synth/seed"_json_pointer))
    cfg.synth->seed = cfg.seed;

  try {
    if (sub == "synth") return cmd_synth(cfg);
    if (sub == "features") return cmd_features(cfg);
    if (sub == "infer") return cmd_infer(cfg, jobs);
    if (sub == "link") return cmd_link(cfg, jobs);
    if (sub == "report") return cmd_report(cfg);
  } catch (const std::exception& e) {
    emit_error(sub, e.what());
    return 1;
  }
  emit_error("cli", "unknown subcommand");
  return 2;
}
