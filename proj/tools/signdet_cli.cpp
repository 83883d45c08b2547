// signdet: capture, label, split, encode, train, evaluate and serve a
// sign-alphabet detector from one config file.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "signdet/annotation_service.hpp"
#include "signdet/capture.hpp"
#include "signdet/checkpoint.hpp"
#include "signdet/config.hpp"
#include "signdet/evaluation.hpp"
#include "signdet/label_map.hpp"
#include "signdet/pipeline.hpp"
#include "signdet/realtime.hpp"
#include "signdet/split.hpp"
#include "signdet/tinynet.hpp"
#include "signdet/trainer.hpp"

namespace {

using namespace signdet;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError:
    case ErrorKind::NotFound:
    case ErrorKind::CorruptCheckpoint:
    case ErrorKind::CorruptRecord:
    case ErrorKind::TruncatedFile:
    case ErrorKind::DecodeError:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

void report_error(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

LabelMap load_label_map(const PipelineConfig& cfg) {
  return parse_label_map(read_file_text(cfg.paths.label_map));
}

void require_class_count(const PipelineConfig& cfg, const LabelMap& labels) {
  if (static_cast<std::size_t>(cfg.model.num_classes) != labels.size()) {
    fail(ErrorKind::ValidationError, "model.num_classes is " + std::to_string(cfg.model.num_classes) +
                                         " but the label map has " + std::to_string(labels.size()) + " labels");
  }
}

std::unique_ptr<FrameSource> open_source(const std::string& spec, const PipelineConfig& cfg, int classes) {
  if (spec.rfind("replay:", 0) == 0) return std::make_unique<DirectorySource>(spec.substr(7));
  if (spec.rfind("synthetic", 0) == 0) {
    std::optional<std::size_t> limit;
    if (spec.size() > 10 && spec[9] == ':') limit = std::stoul(spec.substr(10));
    SyntheticOptions opt;
    opt.width = cfg.synthetic.width;
    opt.height = cfg.synthetic.height;
    return std::make_unique<SyntheticSource>(cfg.synthetic.seed, classes, opt, limit);
  }
  if (spec == "camera") fail(ErrorKind::InvalidInput, "camera capture is not available in this build");
  fail(ErrorKind::InvalidInput, "unknown frame source \"" + spec + "\" (use synthetic[:N] or replay:<dir>)");
}

TinyNet<float> restore_model(const PipelineConfig& cfg) {
  TinyNet<float> model(cfg.model);
  const Checkpoint ckpt = restore_latest(cfg.paths.checkpoint_dir);
  load_model(model, ckpt);
  return model;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sign-alphabet detection pipeline"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "JSON config file");
  app.add_option("--set", overrides, "Override a config value, e.g. train.steps=2000")->take_all();

  PipelineConfig cfg;
  auto load = [&] { cfg = load_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt, overrides); };

  // dump-config
  auto* dump = app.add_subcommand("dump-config", "Print the effective configuration");
  dump->callback([&] {
    load();
    std::cout << dump_config(cfg);
  });

  // capture
  auto* capture = app.add_subcommand("capture", "Run a timed capture session");
  std::string capture_source = "synthetic";
  bool simulated_clock = false;
  capture->add_option("--source", capture_source, "synthetic[:N] | replay:<dir> | camera");
  capture->add_flag("--simulated-clock", simulated_clock, "Advance a virtual clock instead of sleeping");
  capture->callback([&] {
    load();
    CaptureConfig cc = cfg.capture;
    cc.output_root = cfg.paths.dataset_root;
    auto source = open_source(capture_source, cfg, static_cast<int>(std::max<std::size_t>(1, cc.labels.size())));
    SystemClock system_clock;
    SimulatedClock sim_clock;
    Clock& clock = simulated_clock ? static_cast<Clock&>(sim_clock) : system_clock;
    const auto manifest = run_capture_session(*source, cc, clock, [](const CaptureEvent& ev) {
      if (ev.kind == CaptureEvent::Kind::LabelStarted) std::cerr << "next sign: " << ev.label << std::endl;
    });
    std::cout << nlohmann::json{{"images", manifest.images.size()}, {"elapsed_seconds", manifest.elapsed()}}.dump()
              << std::endl;
  });

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic annotated dataset");
  gen->callback([&] {
    load();
    SyntheticOptions opt;
    opt.width = cfg.synthetic.width;
    opt.height = cfg.synthetic.height;
    const auto files = generate_synthetic_dataset(cfg.paths.dataset_root, cfg.synthetic.classes,
                                                  cfg.synthetic.images_per_class, cfg.synthetic.seed, opt);
    std::cout << nlohmann::json{{"images", files.size()}, {"root", cfg.paths.dataset_root}}.dump() << std::endl;
  });

  // make-label-map
  auto* mklabel = app.add_subcommand("make-label-map", "Write the label map");
  std::vector<std::string> label_names;
  mklabel->add_option("--labels", label_names, "Label names in id order (default: capture.labels)")->delimiter(',');
  mklabel->callback([&] {
    load();
    const auto names = label_names.empty() ? cfg.capture.labels : label_names;
    const LabelMap m = LabelMap::from_names(names);
    fs::create_directories(fs::path(cfg.paths.label_map).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(cfg.paths.label_map).parent_path());
    write_file_atomic(cfg.paths.label_map, write_label_map(m));
    std::cout << nlohmann::json{{"labels", m.size()}, {"path", cfg.paths.label_map}}.dump() << std::endl;
  });

  // split
  auto* split = app.add_subcommand("split", "Stratified train/validation split of the dataset");
  std::optional<double> split_ratio;
  std::optional<std::uint64_t> split_seed;
  split->add_option("--ratio", split_ratio, "Training share per class");
  split->add_option("--seed", split_seed, "Shuffle seed");
  split->callback([&] {
    load();
    const auto s = split_dataset(scan_dataset(cfg.paths.dataset_root), split_ratio.value_or(cfg.split.ratio),
                                 split_seed.value_or(cfg.split.seed));
    for (const auto& w : s.warnings) std::cerr << "warning: " << w << std::endl;
    write_split(s, cfg.paths.split_file);
    nlohmann::json per_class;
    for (const auto& [cls, list] : s.train) per_class[cls] = {list.size(), s.validation.at(cls).size()};
    std::cout << nlohmann::json{{"train", s.train_count()}, {"validation", s.validation_count()},
                                {"per_class", per_class}}
                     .dump()
              << std::endl;
  });

  // make-records
  auto* mkrec = app.add_subcommand("make-records", "Encode the split into record files");
  mkrec->callback([&] {
    load();
    const LabelMap labels = load_label_map(cfg);
    const auto paths = make_records(read_split(cfg.paths.split_file), cfg.paths.dataset_root, labels,
                                    cfg.paths.records_dir);
    std::cout << nlohmann::json{{"train", paths.train.string()}, {"validation", paths.validation.string()}}.dump()
              << std::endl;
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the detector from the training records");
  std::optional<std::uint64_t> steps;
  bool fresh = false;
  train_cmd->add_option("--steps", steps, "Number of training steps");
  train_cmd->add_flag("--fresh", fresh, "Ignore existing checkpoints");
  train_cmd->callback([&] {
    load();
    if (steps) {
      cfg.train.steps = *steps;
      cfg.train.horizon = std::max(cfg.train.horizon, *steps);
    }
    const LabelMap labels = load_label_map(cfg);
    require_class_count(cfg, labels);
    const auto data = load_training_examples(record_paths(cfg.paths.records_dir).train, labels, cfg.model);
    TinyNet<float> model(cfg.model);
    fs::create_directories(cfg.paths.checkpoint_dir);
    std::ofstream log(fs::path(cfg.paths.checkpoint_dir) / "train.log", std::ios::app);
    train(model, data, cfg.train,
          [&](const TrainLogEvent& ev) {
            for (const auto& line : ev.lines) {
              std::cout << line << "\n";
              log << line << "\n";
            }
            std::cout.flush();
            log.flush();
          },
          fs::path(cfg.paths.checkpoint_dir), !fresh);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Confidence-rate report on the validation records");
  std::optional<std::string> eval_out;
  eval->add_option("--out", eval_out, "Write the JSON report here");
  eval->callback([&] {
    load();
    const LabelMap labels = load_label_map(cfg);
    require_class_count(cfg, labels);
    const TinyNet<float> model = restore_model(cfg);
    const auto samples = load_eval_samples(record_paths(cfg.paths.records_dir).validation, labels);
    const auto detect = make_detector(model, cfg.inference);
    const EvalReport report = evaluate_confidence(detect, samples, labels);
    std::cout << render_confidence_table(report);
    for (const auto& l : report.unevaluated()) std::cerr << "warning: no validation images for " << l << std::endl;
    auto j = report.to_json();
    j["top_detection_accuracy"] = top_detection_accuracy(detect, samples, labels);
    write_file_atomic(eval_out ? fs::path(*eval_out) : fs::path(cfg.paths.checkpoint_dir) / "eval.json",
                      j.dump(2) + "\n");
  });

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "Run detection over a frame source, one JSON line per frame");
  std::string detect_source = "synthetic:10";
  std::size_t max_frames = 0;
  detect_cmd->add_option("--source", detect_source, "synthetic[:N] | replay:<dir> | camera");
  detect_cmd->add_option("--max-frames", max_frames, "Stop after this many frames (0: until exhausted)");
  detect_cmd->callback([&] {
    load();
    const LabelMap labels = load_label_map(cfg);
    require_class_count(cfg, labels);
    const TinyNet<float> model = restore_model(cfg);
    auto source = open_source(detect_source, cfg, static_cast<int>(labels.size()));
    if (detect_source == "synthetic" && max_frames == 0) max_frames = 10;
    run_realtime(*source, make_detector(model, cfg.inference), labels,
                 [](FrameResult r) { std::cout << r.to_json().dump() << std::endl; }, max_frames);
  });

  // serve-annotator
  auto* serve = app.add_subcommand("serve-annotator", "Serve images and annotations over HTTP");
  bool lan = false;
  std::optional<int> port;
  std::optional<std::string> static_dir;
  serve->add_flag("--lan", lan, "Listen on all interfaces instead of loopback");
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--static", static_dir, "Directory with the annotator web bundle");
  serve->callback([&] {
    load();
    AnnotationService service(cfg.paths.dataset_root, load_label_map(cfg));
    httplib::Server server;
    service.attach(server);
    if (static_dir && !server.set_mount_point("/", *static_dir)) {
      fail(ErrorKind::IoError, "cannot serve static files from " + *static_dir);
    }
    const std::string host = lan ? "0.0.0.0" : cfg.serve.host;
    const int p = port.value_or(cfg.serve.port);
    std::cerr << "listening on http://" << host << ":" << p << std::endl;
    if (!server.listen(host, p)) fail(ErrorKind::IoError, "cannot listen on " + host + ":" + std::to_string(p));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << std::flush;
    report_error("UsageError", e.what());
    return kExitValidation;
  } catch (const Error& e) {
    report_error(std::string(to_string(e.kind())), e.detail());
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    report_error("IoError", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    report_error("InternalError", e.what());
    return kExitValidation;
  }
  return kExitOk;
}
