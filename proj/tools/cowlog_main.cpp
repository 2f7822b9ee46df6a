#include <csignal>
#include <cstring>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "cowlog/bulkhttp.hpp"
#include "cowlog/dataset.hpp"
#include "cowlog/loggen.hpp"
#include "cowlog/model.hpp"
#include "cowlog/pipeline.hpp"
#include "cowlog/qaeval.hpp"
#include "cowlog/server.hpp"
#include "cowlog/sinkmetrics.hpp"

namespace {

std::atomic<bool> g_stop{false};
cowlog::InferenceServer* g_server = nullptr;

void handle_signal(int) {
  g_stop.store(true);
  if (g_server) g_server->stop();
}

void install_signal_handlers() {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
}

std::pair<std::string, int> split_bind(const std::string& bind) {
  size_t colon = bind.rfind(':');
  if (colon == std::string::npos)
    throw cowlog::Error("bind must look like host:port, got '" + bind + "'");
  int port = std::stoi(bind.substr(colon + 1));
  return {bind.substr(0, colon), port};
}

int cmd_gen(const std::string& out_dir, cowlog::GeneratorConfig cfg,
            bool do_split, cowlog::SplitSizes sizes) {
  namespace fs = std::filesystem;
  cowlog::CorpusResult corpus = cowlog::generate_corpus(cfg, out_dir);
  std::cout << "events: " << corpus.n_events << "\n"
            << "commands: " << corpus.labels.size() << "\n"
            << "files: " << corpus.event_files.size() << "\n"
            << "labels: " << corpus.labels_file << "\n";
  if (do_split) {
    cowlog::DatasetSplit split =
        cowlog::make_split(corpus.labels, sizes, cfg.seed);
    auto write_part = [&](const char* name,
                          const std::vector<cowlog::LabeledCommand>& part) {
      std::string path = (fs::path(out_dir) / (std::string(name) + ".jsonl")).string();
      cowlog::write_examples(path, cowlog::to_examples(part));
      std::cout << name << ": " << path << " (" << part.size() << ")\n";
      return path;
    };
    nlohmann::ordered_json manifest;
    manifest["train"] = write_part("train", split.train);
    manifest["validation"] = write_part("validation", split.validation);
    manifest["test"] = write_part("test", split.test);
    manifest["sizes"] = {{"train", split.train.size()},
                         {"validation", split.validation.size()},
                         {"test", split.test.size()}};
    std::string manifest_path =
        (fs::path(out_dir) / "split_manifest.json").string();
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw cowlog::IoError("cannot write " + manifest_path);
    out << manifest.dump(2) << '\n';
    std::cout << "split manifest: " << manifest_path << "\n";
  }
  return 0;
}

int cmd_train(const std::string& train_path, const std::string& val_path,
              const std::string& model_out, cowlog::Hyperparams hyper,
              const std::string& report_path) {
  std::vector<cowlog::QaExample> train_set = cowlog::read_examples(train_path);
  std::vector<cowlog::QaExample> val_set;
  if (!val_path.empty()) val_set = cowlog::read_examples(val_path);
  auto [model, report] =
      cowlog::PerceptronExtractor::train(train_set, val_set, hyper);
  model.save(model_out);
  for (size_t e = 0; e < report.val_f1.size(); ++e)
    std::cout << "epoch " << (e + 1) << " val_f1 " << report.val_f1[e] << "\n";
  std::cout << "trained on " << report.train_examples << " examples in "
            << report.wall_time_s << " s\n"
            << "model: " << model_out << " (" << model.version() << ")\n";
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::trunc);
    if (!out) throw cowlog::IoError("cannot write " + report_path);
    out << cowlog::train_report_to_json(report).dump(2) << '\n';
  }
  return 0;
}

int cmd_eval(const std::string& data_path, const std::string& model_path,
             const std::string& backend, const std::string& pred_path,
             const std::string& gold_path, const std::string& report_path,
             const std::string& dump_path) {
  std::vector<std::string> predictions, golds;
  if (!pred_path.empty() && !gold_path.empty()) {
    // two files, aligned line by line
    for (const cowlog::QaExample& ex : cowlog::read_examples(pred_path))
      predictions.push_back(ex.prediction.empty() ? ex.answer : ex.prediction);
    for (const cowlog::QaExample& ex : cowlog::read_examples(gold_path))
      golds.push_back(ex.answer);
  } else if (!pred_path.empty()) {
    // one file of {context, answer, prediction} triples
    for (const cowlog::QaExample& ex : cowlog::read_examples(pred_path)) {
      predictions.push_back(ex.prediction);
      golds.push_back(ex.answer);
    }
  } else {
    if (data_path.empty())
      throw cowlog::Error("eval needs --data (with --model/--backend) or --pred");
    std::shared_ptr<const cowlog::Extractor> extractor =
        cowlog::load_extractor(backend == "rule" ? "rule" : model_path);
    std::vector<cowlog::QaExample> data = cowlog::read_examples(data_path);
    for (cowlog::QaExample& ex : data) {
      ex.prediction = extractor->predict(ex.context).answer;
      predictions.push_back(ex.prediction);
      golds.push_back(ex.answer);
    }
    if (!dump_path.empty()) cowlog::write_examples(dump_path, data, true);
  }
  cowlog::EvalReport report = cowlog::evaluate(predictions, golds);
  std::cout << "n_examples " << report.n_examples << "\n"
            << "mean_f1 " << report.mean_f1 << "\n"
            << "mean_em " << report.mean_em << "\n";
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::trunc);
    if (!out) throw cowlog::IoError("cannot write " + report_path);
    out << cowlog::eval_report_to_json(report).dump(2) << '\n';
  }
  return 0;
}

int cmd_serve(const cowlog::PipelineConfig& config) {
  auto [host, port] = split_bind(config.bind);
  std::shared_ptr<const cowlog::Extractor> extractor =
      cowlog::load_extractor(config.model_path);
  cowlog::ServerOptions options;
  options.workers = config.workers;
  cowlog::InferenceServer server(std::move(extractor), options);
  g_server = &server;
  install_signal_handlers();
  std::cout << "serving on " << host << ":" << port << "\n";
  if (!server.listen(host, port) && !g_stop.load()) {
    std::cerr << "error: cannot listen on " << config.bind << "\n";
    g_server = nullptr;
    return 1;
  }
  g_server = nullptr;
  return 0;
}

int cmd_run(const cowlog::PipelineConfig& config, bool once) {
  install_signal_handlers();
  cowlog::PipelineStats stats;
  cowlog::run_pipeline(config, g_stop, once, stats);

  std::vector<cowlog::Document> documents;
  if (std::filesystem::exists(config.bulk_path))
    documents = cowlog::read_bulk_file(config.bulk_path);
  cowlog::ReportOptions report_options;
  report_options.top_k = static_cast<size_t>(config.top_k);
  report_options.bucket_hours = config.bucket_hours;
  cowlog::DashboardReport report =
      cowlog::render_report(documents, report_options);
  if (!config.report_path.empty()) {
    std::ofstream out(config.report_path, std::ios::trunc);
    if (!out) throw cowlog::IoError("cannot write " + config.report_path);
    out << cowlog::dashboard_report_to_json(report).dump(2) << '\n';
  }
  std::cout << stats.to_json().dump(2) << "\n";
  cowlog::print_dashboard_table(std::cout, report);
  return 0;
}

int cmd_report(const std::string& bulk_path, const std::string& report_path,
               int bucket_hours, int top_k) {
  std::vector<cowlog::Document> documents = cowlog::read_bulk_file(bulk_path);
  cowlog::ReportOptions options;
  options.top_k = static_cast<size_t>(top_k);
  options.bucket_hours = bucket_hours;
  cowlog::DashboardReport report = cowlog::render_report(documents, options);
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::trunc);
    if (!out) throw cowlog::IoError("cannot write " + report_path);
    out << cowlog::dashboard_report_to_json(report).dump(2) << '\n';
  }
  cowlog::print_dashboard_table(std::cout, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cowrie log pipeline: corpus generation, extractor training "
               "and evaluation, inference service, run loop and reporting"};
  app.require_subcommand(1);

  // --config on serve/run/report seeds the defaults; flags override.
  cowlog::PipelineConfig base;
  try {
    for (int i = 1; i + 1 < argc; ++i)
      if (std::strcmp(argv[i], "--config") == 0)
        base = cowlog::load_pipeline_config(argv[i + 1], base);
  } catch (const cowlog::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::string config_path;  // consumed above; registered so parsing accepts it

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic Cowrie corpus");
  std::string gen_out = "corpus";
  cowlog::GeneratorConfig gen_cfg = cowlog::default_generator_config();
  bool gen_split = false;
  cowlog::SplitSizes sizes;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--seed", gen_cfg.seed, "generator seed");
  gen->add_option("--sessions", gen_cfg.n_sessions, "number of sessions");
  gen->add_option("--days", gen_cfg.n_days, "number of simulated days/files");
  gen->add_option("--wrapper-prob", gen_cfg.wrapper_prob,
                  "probability of a wrapper prefix");
  gen->add_option("--multi-prob", gen_cfg.multi_segment_prob,
                  "probability of a multi-segment line");
  gen->add_flag("--split", gen_split, "also write train/validation/test files");
  gen->add_option("--train-size", sizes.train, "split: train size");
  gen->add_option("--val-size", sizes.validation, "split: validation size");
  gen->add_option("--test-size", sizes.test, "split: test size");

  // train
  auto* train = app.add_subcommand("train", "train the statistical extractor");
  std::string train_path, val_path, model_out = "model.json", train_report;
  cowlog::Hyperparams hyper;
  bool no_average = false;
  train->add_option("--train", train_path, "training set (jsonl)")->required();
  train->add_option("--val", val_path, "validation set (jsonl)");
  train->add_option("--model-out", model_out, "model output path");
  train->add_option("--epochs", hyper.epochs, "training epochs");
  train->add_option("--batch-size", hyper.batch_size, "recorded in the report");
  train->add_flag("--no-average", no_average, "disable weight averaging");
  train->add_option("--report", train_report, "write a training report JSON");

  // eval
  auto* eval = app.add_subcommand("eval", "score predictions with token F1");
  std::string eval_data, eval_model, eval_backend = "avp", eval_pred,
              eval_gold, eval_report, eval_dump;
  eval->add_option("--data", eval_data, "labeled set (jsonl) to predict on");
  eval->add_option("--model", eval_model, "model file for --data mode");
  eval->add_option("--backend", eval_backend,
                   "extractor backend: avp (model file) or rule");
  eval->add_option("--pred", eval_pred,
                   "pre-computed predictions jsonl");
  eval->add_option("--gold", eval_gold,
                   "gold answers jsonl (pairs with --pred)");
  eval->add_option("--report", eval_report, "write an EvalReport JSON");
  eval->add_option("--dump-pred", eval_dump, "write predictions jsonl");

  // serve
  auto* serve = app.add_subcommand("serve", "run the inference service");
  cowlog::PipelineConfig serve_cfg = base;
  serve->add_option("--bind", serve_cfg.bind, "host:port to listen on");
  serve->add_option("--model-path", serve_cfg.model_path,
                    "model file, or 'rule' for the oracle backend");
  serve->add_option("--workers", serve_cfg.workers, "worker pool size");
  serve->add_option("--config", config_path, "JSON config file");

  // run
  auto* run = app.add_subcommand("run", "tail logs, transform, infer, index");
  cowlog::PipelineConfig run_cfg = base;
  bool run_once = false;
  run->add_option("--log-glob", run_cfg.log_glob, "log files to tail");
  run->add_option("--state-path", run_cfg.state_path, "tail offset store");
  run->add_option("--infer-url", run_cfg.infer_url, "inference service URL");
  run->add_option("--infer-timeout-ms", run_cfg.infer_timeout_ms,
                  "inference request timeout");
  run->add_option("--infer-retries", run_cfg.infer_retries,
                  "inference retries before inference_error");
  run->add_option("--out-bulk", run_cfg.bulk_path, "bulk NDJSON output file");
  run->add_option("--index", run_cfg.index_name, "index name in action lines");
  run->add_option("--report-path", run_cfg.report_path, "dashboard report JSON");
  run->add_option("--poll-ms", run_cfg.poll_ms, "tail poll interval");
  run->add_option("--workers", run_cfg.workers, "transform workers");
  run->add_option("--bucket-hours", run_cfg.bucket_hours, "volume bucket width");
  run->add_option("--top-k", run_cfg.top_k, "ranked list size");
  run->add_option("--drop-field", run_cfg.drop_fields,
                  "extra field to drop (repeatable)");
  run->add_flag("--once", run_once, "drain the matched files and exit");
  run->add_option("--config", config_path, "JSON config file");

  // report
  auto* report = app.add_subcommand("report", "aggregate an existing bulk file");
  std::string rep_bulk, rep_out;
  int rep_bucket_hours = 12, rep_top_k = 20;
  report->add_option("--bulk", rep_bulk, "bulk NDJSON file")->required();
  report->add_option("--report-path", rep_out, "dashboard report JSON");
  report->add_option("--bucket-hours", rep_bucket_hours, "volume bucket width");
  report->add_option("--top-k", rep_top_k, "ranked list size");
  report->add_option("--config", config_path, "JSON config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_out, gen_cfg, gen_split, sizes);
    if (train->parsed()) {
      hyper.averaging = !no_average;
      return cmd_train(train_path, val_path, model_out, hyper, train_report);
    }
    if (eval->parsed())
      return cmd_eval(eval_data, eval_model, eval_backend, eval_pred,
                      eval_gold, eval_report, eval_dump);
    if (serve->parsed()) return cmd_serve(serve_cfg);
    if (run->parsed()) return cmd_run(run_cfg, run_once);
    if (report->parsed())
      return cmd_report(rep_bulk, rep_out, rep_bucket_hours, rep_top_k);
  } catch (const cowlog::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
