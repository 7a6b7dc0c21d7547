#include "phipd/cli/commands.hpp"

#include "phipd/checkpoint.hpp"
#include "phipd/cli/run_config.hpp"
#include "phipd/corpus.hpp"
#include "phipd/denoiser.hpp"
#include "phipd/diffusion.hpp"
#include "phipd/error.hpp"
#include "phipd/noise.hpp"
#include "phipd/spectral.hpp"
#include "phipd/tensor_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace phipd::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigFile = "config.json";
constexpr const char* kLossFile = "loss_history.txt";

// Runs f(0..n-1) on up to `threads` workers. Each index writes only its own
// slot, so the results do not depend on the thread count.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

/// Writes `<base>.pdt` and `<base>.pgm`.
void write_image_pair(fs::path base, const ImageGrid& img) {
  ensure_parent(base);
  io::write_image(base.replace_extension(".pdt"), img);
  io::write_pgm(base.replace_extension(".pgm"), img);
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

std::string sample_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%04zu", i);
  return buf;
}

// ---- shared option groups -------------------------------------------------

struct NoiseFlags {
  std::string cutoff = "full";
  double sigma = 2.0;
  std::string mag_source = "gaussian_fft";
  bool no_normalize = false;
  CLI::Option* sigma_opt = nullptr;
  CLI::Option* mag_opt = nullptr;
  CLI::Option* cutoff_opt = nullptr;

  void add(CLI::App& cmd, const std::string& default_cutoff) {
    cutoff = default_cutoff;
    cutoff_opt = cmd.add_option("--r", cutoff, "Cutoff radius: number, 'full' or 'none'")
                     ->capture_default_str();
    sigma_opt = cmd.add_option("--sigma", sigma, "Mask roll-off width")->capture_default_str();
    mag_opt = cmd.add_option("--mag-source", mag_source, "gaussian_fft or rayleigh")->capture_default_str();
    cmd.add_flag("--no-normalize", no_normalize, "Skip unit-variance rescaling");
  }

  noise::NoiseSpec spec(noise::NoiseSpec base = {}) const {
    if (cutoff_opt->count() > 0) base.cutoff_radius = parse_cutoff(cutoff);
    if (sigma_opt->count() > 0) base.sigma = sigma;
    if (mag_opt->count() > 0) base.magnitude_source = parse_magnitude_source(mag_source);
    if (no_normalize) base.normalize = false;
    base.validate();
    return base;
  }
};

// ---- model loading and sampling -------------------------------------------

struct Model {
  denoiser::DenoiserParams params;
  denoiser::TrainConfig train;
};

Model load_model(const fs::path& dir) {
  Model m{io::load_params(dir), {}};
  if (fs::exists(dir / kConfigFile)) m.train = load_run_config(dir / kConfigFile).train;
  return m;
}

/// Noise from rng.substream(0); DDPM reverse noise from rng.substream(1).
ImageGrid generate(const Model& model, const ImageGrid& structure, const noise::NoiseSpec& spec,
                   int steps, const Rng& rng) {
  Rng noise_rng = rng.substream(0);
  const ImageGrid eps = noise::fss_noise(structure, spec, noise_rng);
  if (model.train.objective == denoiser::Objective::flow) {
    return diffusion::flow_sample(denoiser::velocity_model(model.params), eps, steps);
  }
  const auto sched =
      diffusion::ddpm_linear_schedule(model.train.ddpm_steps, model.train.beta_start, model.train.beta_end);
  diffusion::DdpmSamplerOptions opts;
  opts.magnitude_source = spec.magnitude_source;
  opts.reverse_noise = spec.cutoff_radius ? diffusion::ReverseNoise::structured
                                          : diffusion::ReverseNoise::gaussian;
  return diffusion::ddpm_sample(denoiser::noise_model(model.params, sched.steps()), eps, sched,
                                rng.substream(1), opts);
}

metrics::MetricsReport mean_report(const std::vector<metrics::MetricsReport>& reports) {
  metrics::MetricsReport m;
  for (const auto& r : reports) {
    m.phase_correlation += r.phase_correlation;
    m.ssim += r.ssim;
    m.edge_iou += r.edge_iou;
    m.log_mag_distance += r.log_mag_distance;
  }
  const double n = static_cast<double>(reports.size());
  m.phase_correlation /= n;
  m.ssim /= n;
  m.edge_iou /= n;
  m.log_mag_distance /= n;
  return m;
}

// ---- commands -------------------------------------------------------------

struct NoiseCmd {
  std::string input, out, config;
  std::uint64_t seed = 0;
  NoiseFlags flags;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("noise", "Structured noise for one image");
    cmd->add_option("--input", input, "Tensor (.pdt) or P5 PGM image")->required();
    cmd->add_option("--out", out, "Output base path; writes .pdt and .pgm")->required();
    cmd->add_option("--config", config, "JSON run config (noise section)");
    seed_opt = cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    flags.add(*cmd, "full");
  }

  int run(std::ostream& os) const {
    noise::NoiseSpec base;
    if (!config.empty()) base = load_run_config(config).noise;
    noise::NoiseSpec spec = flags.spec(base);
    if (seed_opt->count() > 0 || config.empty()) spec.seed = seed;
    const ImageGrid img = io::load_any_image(input);
    const ImageGrid eps = noise::fss_noise(img, spec);
    write_image_pair(out, eps);
    os << "wrote " << fs::path(out).replace_extension(".pdt").string() << "\n";
    return kExitOk;
  }
};

struct PhaseMixCmd {
  std::string phase_from, mag_from, out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("phase-mix", "Combine the phase of one image with the magnitude of another");
    cmd->add_option("--phase-from", phase_from, "Image supplying the Fourier phase")->required();
    cmd->add_option("--mag-from", mag_from, "Image supplying the Fourier magnitude")->required();
    cmd->add_option("--out", out, "Output base path; writes .pdt and .pgm")->required();
  }

  int run(std::ostream& os) const {
    const ImageGrid mixed = spectral::phase_mix(io::load_any_image(phase_from), io::load_any_image(mag_from));
    write_image_pair(out, mixed);
    os << "wrote " << fs::path(out).replace_extension(".pdt").string() << "\n";
    return kExitOk;
  }
};

struct MakeCorpusCmd {
  std::string out, config;
  int count = 100, size = 64, min_objects = 1, max_objects = 3, previews = 0;
  std::uint64_t seed = 0;
  CLI::App* cmd = nullptr;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("make-corpus", "Generate a paired flat/shaded corpus");
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--config", config, "JSON run config (corpus section)");
    cmd->add_option("--count", count, "Number of pairs")->capture_default_str();
    cmd->add_option("--size", size, "Image side length")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--min-objects", min_objects)->capture_default_str();
    cmd->add_option("--max-objects", max_objects)->capture_default_str();
    cmd->add_option("--previews", previews, "Also write PGMs for the first N pairs")->capture_default_str();
  }

  int run(std::ostream& os) const {
    RunConfig rc;
    if (!config.empty()) rc = load_run_config(config);
    auto& c = rc.corpus;
    if (config.empty() || cmd->get_option("--count")->count()) c.count = count;
    if (config.empty() || cmd->get_option("--size")->count()) c.size = size;
    if (config.empty() || cmd->get_option("--seed")->count()) c.seed = seed;
    if (config.empty() || cmd->get_option("--min-objects")->count()) c.min_objects = min_objects;
    if (config.empty() || cmd->get_option("--max-objects")->count()) c.max_objects = max_objects;
    const auto pairs = corpus::generate_corpus(c);
    io::save_corpus(out, pairs);
    write_text(fs::path(out) / kConfigFile, dump_run_config(rc));
    for (int i = 0; i < std::min(previews, c.count); ++i) {
      const std::string stem = sample_name(static_cast<std::size_t>(i));
      io::write_pgm(fs::path(out) / (stem + "_flat.pgm"), pairs[i].flat);
      io::write_pgm(fs::path(out) / (stem + "_shaded.pgm"), pairs[i].shaded);
    }
    os << "wrote " << c.count << " pairs of " << c.size << "x" << c.size << " to " << out << "\n";
    return kExitOk;
  }
};

struct TrainCmd {
  std::string corpus_dir, images = "shaded", out, config, objective, noise_mode;
  int epochs = 0, batch_size = 0, threads = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  bool quiet = false;
  CLI::App* cmd = nullptr;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("train", "Train the denoiser on a corpus");
    cmd->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    cmd->add_option("--images", images, "Which stack to train on: flat or shaded")->capture_default_str();
    cmd->add_option("--out", out, "Checkpoint directory")->required();
    cmd->add_option("--config", config, "JSON run config (train section)");
    cmd->add_option("--objective", objective, "flow or ddpm");
    cmd->add_option("--noise-mode", noise_mode, "structured or gaussian");
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--batch-size", batch_size);
    cmd->add_option("--lr", lr, "Learning rate");
    cmd->add_option("--seed", seed);
    cmd->add_option("--threads", threads, "Worker threads for per-item gradients");
    cmd->add_flag("--quiet", quiet, "Do not print per-epoch losses");
  }

  int run(std::ostream& os, std::ostream& es) const {
    RunConfig rc;
    if (!config.empty()) rc = load_run_config(config);
    auto& t = rc.train;
    auto given = [&](const char* name) { return cmd->get_option(name)->count() > 0; };
    if (given("--objective")) t.objective = parse_objective(objective);
    if (given("--noise-mode")) t.noise_mode = parse_noise_mode(noise_mode);
    if (given("--epochs")) t.epochs = epochs;
    if (given("--batch-size")) t.batch_size = batch_size;
    if (given("--lr")) t.learning_rate = lr;
    if (given("--seed")) t.seed = seed;
    if (given("--threads")) t.threads = threads;
    t.validate();

    const std::vector<ImageGrid> data = load_images(corpus_dir, images);
    fs::create_directories(out);
    auto write_history = [&](const std::vector<double>& history) {
      std::string text = "epoch\tloss\n";
      for (std::size_t e = 0; e < history.size(); ++e) {
        text += std::to_string(e) + "\t" + format_double(history[e]) + "\n";
      }
      write_text(fs::path(out) / kLossFile, text);
    };
    try {
      const auto result = denoiser::train(data, t, [&](int epoch, double loss, const denoiser::DenoiserParams&) {
        if (!quiet) os << "epoch " << epoch << " loss " << format_double(loss) << "\n" << std::flush;
      });
      io::save_params(out, result.params);
      write_text(fs::path(out) / kConfigFile, dump_run_config(rc));
      write_history(result.loss_history);
    } catch (const denoiser::TrainingAborted& e) {
      write_history(e.history());
      es << "training diverged after " << e.history().size() << " epochs\n";
      throw;
    }
    os << "wrote checkpoint to " << out << "\n";
    return kExitOk;
  }
};

struct SampleCmd {
  std::string model_dir, input, images = "flat", out;
  int steps = 50, first = 0, count = -1, threads = 1;
  std::uint64_t seed = 0;
  NoiseFlags flags;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("sample", "Generate from structured noise built on input images");
    cmd->add_option("--model", model_dir, "Checkpoint directory")->required();
    cmd->add_option("--input", input, "Structure image, or a corpus/collection directory")->required();
    cmd->add_option("--images", images, "Corpus stack to read: flat or shaded")->capture_default_str();
    cmd->add_option("--first", first, "First image of a directory input")->capture_default_str();
    cmd->add_option("--count", count, "Number of images of a directory input (default: all)");
    cmd->add_option("--out", out, "Output base path (single image) or directory")->required();
    cmd->add_option("--steps", steps, "Euler steps for flow models")->capture_default_str();
    cmd->add_option("--seed", seed)->capture_default_str();
    cmd->add_option("--threads", threads, "Images sampled in parallel")->capture_default_str();
    flags.add(*cmd, "full");
  }

  int run(std::ostream& os) const {
    if (steps < 1) throw InvalidArgument("--steps must be >= 1");
    const Model model = load_model(model_dir);
    const noise::NoiseSpec spec = flags.spec();
    const bool batch = fs::is_directory(input);
    std::vector<ImageGrid> inputs = load_images(input, images);
    if (batch) {
      if (first < 0 || static_cast<std::size_t>(first) > inputs.size()) throw InvalidArgument("--first out of range");
      const std::size_t n = count < 0 ? inputs.size() - first : std::min<std::size_t>(count, inputs.size() - first);
      inputs = std::vector<ImageGrid>(inputs.begin() + first, inputs.begin() + first + static_cast<std::ptrdiff_t>(n));
    }
    std::vector<ImageGrid> outputs(inputs.size());
    const Rng rng(seed);
    parallel_for(inputs.size(), threads, [&](std::size_t i) {
      outputs[i] = generate(model, inputs[i], spec, steps, rng.substream(i));
    });
    if (!batch) {
      write_image_pair(out, outputs[0]);
      os << "wrote " << fs::path(out).replace_extension(".pdt").string() << "\n";
      return kExitOk;
    }
    fs::create_directories(out);
    std::map<std::string, io::Tensor> items;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      items[sample_name(i)] = io::to_tensor(outputs[i]);
      io::write_pgm(fs::path(out) / (sample_name(i) + ".pgm"), outputs[i]);
    }
    io::write_collection(out, items);
    os << "wrote " << outputs.size() << " samples to " << out << "\n";
    return kExitOk;
  }
};

struct EvalCmd {
  std::string a, b, a_images = "flat", b_images = "flat", out, model_dir, radii_text = "1,6,10,20,30";
  bool sweep = false;
  int seeds = 10, steps = 50, threads = 1, count = -1;
  std::uint64_t seed = 0;
  NoiseFlags flags;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "Metrics between two image sets, or a cutoff-radius sweep");
    cmd->add_option("--a", a, "Image or directory (sweep: the structure images)");
    cmd->add_option("--b", b, "Image or directory to compare against");
    cmd->add_option("--a-images", a_images, "Corpus stack for --a")->capture_default_str();
    cmd->add_option("--b-images", b_images, "Corpus stack for --b")->capture_default_str();
    cmd->add_option("--out", out, "Also write the report/table to this file");
    cmd->add_option("--count", count, "Use only the first N images of each set");
    cmd->add_flag("--sweep", sweep, "PC and log-magnitude distance against the input over --radii");
    cmd->add_option("--radii", radii_text, "Comma-separated cutoff radii for --sweep")->capture_default_str();
    cmd->add_option("--seeds", seeds, "Noise draws per image and radius for --sweep")->capture_default_str();
    cmd->add_option("--model", model_dir, "Sweep over model samples instead of raw noise");
    cmd->add_option("--steps", steps, "Euler steps when sampling")->capture_default_str();
    cmd->add_option("--seed", seed)->capture_default_str();
    cmd->add_option("--threads", threads)->capture_default_str();
    flags.add(*cmd, "full");
  }

  int run(std::ostream& os) const {
    if (a.empty()) throw InvalidArgument("eval needs --a");
    std::string text;
    if (sweep) {
      text = format_sweep(run_sweep());
    } else {
      if (b.empty()) throw InvalidArgument("eval needs --b (or --sweep)");
      const auto xs = first_n(load_images(a, a_images));
      const auto ys = first_n(load_images(b, b_images));
      if (xs.size() != ys.size() && ys.size() != 1) {
        throw DataError("eval: " + std::to_string(xs.size()) + " images in --a but " +
                        std::to_string(ys.size()) + " in --b");
      }
      std::vector<metrics::MetricsReport> reports(xs.size());
      parallel_for(xs.size(), threads, [&](std::size_t i) {
        reports[i] = metrics::evaluate(xs[i], ys.size() == 1 ? ys[0] : ys[i]);
      });
      text = format_report(mean_report(reports)) + "count=" + std::to_string(xs.size()) + "\n";
    }
    os << text;
    if (!out.empty()) {
      ensure_parent(out);
      write_text(out, text);
    }
    return kExitOk;
  }

  std::vector<ImageGrid> first_n(std::vector<ImageGrid> images) const {
    if (count >= 0 && static_cast<std::size_t>(count) < images.size()) images.resize(count);
    return images;
  }

  std::vector<SweepRow> run_sweep() const {
    std::vector<double> radii;
    std::stringstream ss(radii_text);
    for (std::string item; std::getline(ss, item, ',');) {
      const auto r = parse_cutoff(item);
      if (!r) throw InvalidArgument("--radii entries must be numbers or 'full'");
      radii.push_back(*r);
    }
    if (radii.empty()) throw InvalidArgument("--radii is empty");
    if (seeds < 1) throw InvalidArgument("--seeds must be >= 1");
    const auto inputs = first_n(load_images(a, a_images));
    std::optional<Model> model;
    if (!model_dir.empty()) model = load_model(model_dir);

    std::vector<SweepRow> rows;
    const Rng rng(seed);
    for (double r : radii) {
      noise::NoiseSpec spec = flags.spec();
      spec.cutoff_radius = r;
      const std::size_t n = inputs.size() * static_cast<std::size_t>(seeds);
      std::vector<SweepRow> parts(n);
      parallel_for(n, threads, [&](std::size_t k) {
        const std::size_t i = k / seeds;
        const Rng item = rng.substream(i).substream(k % seeds);
        ImageGrid output;
        if (model) {
          output = generate(*model, inputs[i], spec, steps, item);
        } else {
          Rng noise_rng = item.substream(0);
          output = noise::fss_noise(inputs[i], spec, noise_rng);
        }
        parts[k] = {r, metrics::phase_correlation(output, inputs[i]), metrics::log_mag_distance(output, inputs[i])};
      });
      SweepRow row{r, 0.0, 0.0};
      for (const auto& p : parts) {
        row.phase_correlation += p.phase_correlation / static_cast<double>(n);
        row.log_mag_distance += p.log_mag_distance / static_cast<double>(n);
      }
      rows.push_back(row);
    }
    return rows;
  }
};

struct DemoVideoCmd {
  std::string out, model_dir;
  int frames = 8, size = 64, steps = 50;
  double shift = 1.0;
  std::uint64_t seed = 0;
  NoiseFlags flags;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("demo-video", "Per-frame structured noise for a moving synthetic scene");
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--frames", frames)->capture_default_str();
    cmd->add_option("--size", size)->capture_default_str();
    cmd->add_option("--shift", shift, "Horizontal motion in pixels per frame")->capture_default_str();
    cmd->add_option("--seed", seed)->capture_default_str();
    cmd->add_option("--model", model_dir, "Also sample each frame with this checkpoint");
    cmd->add_option("--steps", steps)->capture_default_str();
    flags.add(*cmd, "full");
  }

  // Shapes of corpus pair 0 translated along x, clamped so every frame stays
  // inside the canvas.
  std::vector<ImageGrid> scene() const {
    if (frames < 1) throw InvalidArgument("--frames must be >= 1");
    corpus::SynthCorpusConfig cfg;
    cfg.size = size;
    cfg.seed = seed;
    cfg.count = 1;
    const corpus::Geometry base = corpus::generate_pair(cfg, 0).geometry;
    double lo = -1e300, hi = 1e300;
    for (const auto& s : base.shapes) {
      const double br = corpus::bounding_radius(s);
      lo = std::max(lo, br - s.center_x);
      hi = std::min(hi, size - 1.0 - br - s.center_x);
    }
    std::vector<ImageGrid> out_frames;
    for (int k = 0; k < frames; ++k) {
      const double dx = std::clamp(shift * (k - (frames - 1) / 2.0), std::min(lo, 0.0), std::max(hi, 0.0));
      corpus::Geometry g = base;
      for (auto& s : g.shapes) s.center_x += dx;
      out_frames.push_back(corpus::render_pair(g, size).flat);
    }
    return out_frames;
  }

  int run(std::ostream& os) const {
    const auto inputs = scene();
    const noise::NoiseSpec spec = flags.spec();
    const auto noises = noise::noise_sequence(inputs, spec, Rng(seed));
    std::optional<Model> model;
    if (!model_dir.empty()) model = load_model(model_dir);

    fs::create_directories(out);
    std::map<std::string, io::Tensor> items;
    std::string table = "frame\tpc_noise";
    if (model) table += "\tpc_output";
    table += "\n";
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "frame_%03zu", k);
      items[std::string(stem) + "_input"] = io::to_tensor(inputs[k]);
      items[std::string(stem) + "_noise"] = io::to_tensor(noises[k]);
      io::write_pgm(fs::path(out) / (std::string(stem) + "_input.pgm"), inputs[k]);
      io::write_pgm(fs::path(out) / (std::string(stem) + "_noise.pgm"), noises[k]);
      table += std::to_string(k) + "\t" + format_double(metrics::phase_correlation(noises[k], inputs[k]));
      if (model) {
        const ImageGrid sample =
            diffusion::flow_sample(denoiser::velocity_model(model->params), noises[k], steps);
        items[std::string(stem) + "_output"] = io::to_tensor(sample);
        io::write_pgm(fs::path(out) / (std::string(stem) + "_output.pgm"), sample);
        table += "\t" + format_double(metrics::phase_correlation(sample, inputs[k]));
      }
      table += "\n";
    }
    io::write_collection(out, items);
    write_text(fs::path(out) / "frames.tsv", table);
    os << table;
    return kExitOk;
  }
};

}  // namespace

std::string format_report(const metrics::MetricsReport& report) {
  return "phase_correlation=" + format_double(report.phase_correlation) + "\n" +
         "ssim=" + format_double(report.ssim) + "\n" +
         "edge_iou=" + format_double(report.edge_iou) + "\n" +
         "log_mag_distance=" + format_double(report.log_mag_distance) + "\n";
}

metrics::MetricsReport parse_report(const std::string& text) {
  metrics::MetricsReport r;
  std::istringstream in(text);
  std::set<std::string> seen;
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw DataError("report: bad value for '" + key + "'");
    }
    if (key == "phase_correlation") r.phase_correlation = value;
    else if (key == "ssim") r.ssim = value;
    else if (key == "edge_iou") r.edge_iou = value;
    else if (key == "log_mag_distance") r.log_mag_distance = value;
    else continue;
    seen.insert(key);
  }
  if (seen.size() != 4) throw DataError("report: missing fields");
  return r;
}

std::string format_sweep(const std::vector<SweepRow>& rows) {
  std::string text = "r\tphase_correlation\tlog_mag_distance\n";
  for (const auto& row : rows) {
    text += format_cutoff(row.radius) + "\t" + format_double(row.phase_correlation) + "\t" +
            format_double(row.log_mag_distance) + "\n";
  }
  return text;
}

std::vector<ImageGrid> load_images(const fs::path& path, const std::string& which) {
  if (!fs::is_directory(path)) return {io::load_any_image(path)};
  const auto items = io::read_collection(path);
  if (items.contains("flat") && items.contains("shaded")) {
    if (which != "flat" && which != "shaded") throw InvalidArgument("corpus stack must be flat or shaded");
    const auto corpus = io::load_corpus(path);
    return which == "flat" ? corpus.flat : corpus.shaded;
  }
  std::vector<ImageGrid> out;
  for (const auto& [name, tensor] : items) {
    if (tensor.dims.size() == 3 && tensor.dims[0] > 1) {
      const std::size_t h = tensor.dims[1], w = tensor.dims[2];
      for (std::size_t i = 0; i < tensor.dims[0]; ++i) {
        const auto first = tensor.values.begin() + static_cast<std::ptrdiff_t>(i * h * w);
        out.emplace_back(h, w, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(h * w)));
      }
    } else {
      out.push_back(io::to_image(tensor));
    }
  }
  if (out.empty()) throw DataError(path.string() + ": no images");
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phase-preserving diffusion toolkit"};
  app.name("phipd");
  app.require_subcommand(1);
  app.set_version_flag("--version", "phipd 0.1.0");

  NoiseCmd noise_cmd;
  PhaseMixCmd mix_cmd;
  MakeCorpusCmd corpus_cmd;
  TrainCmd train_cmd;
  SampleCmd sample_cmd;
  EvalCmd eval_cmd;
  DemoVideoCmd video_cmd;
  noise_cmd.add(app);
  mix_cmd.add(app);
  corpus_cmd.add(app);
  train_cmd.add(app);
  sample_cmd.add(app);
  eval_cmd.add(app);
  video_cmd.add(app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "noise") return noise_cmd.run(out);
    if (name == "phase-mix") return mix_cmd.run(out);
    if (name == "make-corpus") return corpus_cmd.run(out);
    if (name == "train") return train_cmd.run(out, err);
    if (name == "sample") return sample_cmd.run(out);
    if (name == "eval") return eval_cmd.run(out);
    if (name == "demo-video") return video_cmd.run(out);
    err << "unknown command " << name << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace phipd::cli
