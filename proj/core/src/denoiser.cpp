#include "phipd/denoiser.hpp"

#include "phipd/spectral.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace phipd::denoiser {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

constexpr int kTaps = kKernel * kKernel;

enum Block : std::size_t {
  kConv1W, kConv1B, kConv2W, kConv2B, kConv3W, kConv3B, kConv4W, kConv4B,
  kFc1W, kFc1B, kFc2W, kFc2B, kBlockCount
};

std::vector<ParamBlock> build_layout() {
  const auto c = static_cast<std::size_t>(kChannels);
  const auto k = static_cast<std::size_t>(kKernel);
  const auto e = static_cast<std::size_t>(kEmbedDim);
  const auto hdn = static_cast<std::size_t>(kTimeHidden);
  std::vector<ParamBlock> blocks = {
      {"conv1.weight", {c, 1, k, k}}, {"conv1.bias", {c}},
      {"conv2.weight", {c, c, k, k}}, {"conv2.bias", {c}},
      {"conv3.weight", {c, c, k, k}}, {"conv3.bias", {c}},
      {"conv4.weight", {1, c, k, k}}, {"conv4.bias", {1}},
      {"time.fc1.weight", {hdn, e}},  {"time.fc1.bias", {hdn}},
      {"time.fc2.weight", {c, hdn}},  {"time.fc2.bias", {c}},
  };
  std::size_t offset = 0;
  for (auto& b : blocks) {
    b.count = std::accumulate(b.shape.begin(), b.shape.end(), std::size_t{1},
                              std::multiplies<>());
    b.offset = offset;
    offset += b.count;
  }
  return blocks;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double silu(double z) { return z * sigmoid(z); }
inline double silu_grad(double z) {
  const double s = sigmoid(z);
  return s * (1.0 + z * (1.0 - s));
}

// Rows of `cols` are (channel, ky, kx) taps; columns are output pixels.
void im2col(const Matrix& in, int height, int width, Matrix& cols) {
  const int channels = static_cast<int>(in.rows());
  cols.setZero(static_cast<Eigen::Index>(channels) * kTaps, static_cast<Eigen::Index>(height) * width);
  for (int c = 0; c < channels; ++c) {
    const double* src = in.row(c).data();
    for (int ky = 0; ky < kKernel; ++ky) {
      for (int kx = 0; kx < kKernel; ++kx) {
        double* dst = cols.row(c * kTaps + ky * kKernel + kx).data();
        const int dy = ky - 1;
        const int dx = kx - 1;
        for (int y = std::max(0, -dy); y < std::min(height, height - dy); ++y) {
          const double* srow = src + (y + dy) * width;
          double* drow = dst + y * width;
          for (int x = std::max(0, -dx); x < std::min(width, width - dx); ++x) drow[x] = srow[x + dx];
        }
      }
    }
  }
}

// Adjoint of im2col: scatters tap gradients back onto input pixels.
void col2im(const Matrix& cols, int channels, int height, int width, Matrix& out) {
  out.setZero(channels, static_cast<Eigen::Index>(height) * width);
  for (int c = 0; c < channels; ++c) {
    double* dst = out.row(c).data();
    for (int ky = 0; ky < kKernel; ++ky) {
      for (int kx = 0; kx < kKernel; ++kx) {
        const double* src = cols.row(c * kTaps + ky * kKernel + kx).data();
        const int dy = ky - 1;
        const int dx = kx - 1;
        for (int y = std::max(0, -dy); y < std::min(height, height - dy); ++y) {
          double* drow = dst + (y + dy) * width;
          const double* srow = src + y * width;
          for (int x = std::max(0, -dx); x < std::min(width, width - dx); ++x) drow[x + dx] += srow[x];
        }
      }
    }
  }
}

ConstMatrixMap weight(const DenoiserParams& p, Block b, Eigen::Index rows) {
  const auto span = p.block(b);
  return ConstMatrixMap(span.data(), rows, static_cast<Eigen::Index>(span.size()) / rows);
}

MatrixMap weight(DenoiserParams& p, Block b, Eigen::Index rows) {
  const auto span = p.block(b);
  return MatrixMap(span.data(), rows, static_cast<Eigen::Index>(span.size()) / rows);
}

ConstVectorMap bias(const DenoiserParams& p, Block b) {
  const auto span = p.block(b);
  return ConstVectorMap(span.data(), static_cast<Eigen::Index>(span.size()));
}

VectorMap bias(DenoiserParams& p, Block b) {
  const auto span = p.block(b);
  return VectorMap(span.data(), static_cast<Eigen::Index>(span.size()));
}

// Everything the backward pass needs from one forward evaluation.
struct Activations {
  int height = 0;
  int width = 0;
  Eigen::VectorXd embed, fc1_pre, fc1_act, time_bias;
  Matrix cols1, pre1, act1;
  Matrix cols2, pre2, act2;
  Matrix cols3, pre3, act3;
  Matrix cols4;
  Matrix output;  // 1 x N, includes the residual
};

void run_forward(const DenoiserParams& p, const ImageGrid& x, double t, Activations& a) {
  a.height = static_cast<int>(x.height());
  a.width = static_cast<int>(x.width());
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());

  const std::vector<double> emb = time_embedding(t);
  a.embed = ConstVectorMap(emb.data(), kEmbedDim);
  a.fc1_pre = weight(p, kFc1W, kTimeHidden) * a.embed + bias(p, kFc1B);
  a.fc1_act = a.fc1_pre.unaryExpr([](double z) { return silu(z); });
  a.time_bias = weight(p, kFc2W, kChannels) * a.fc1_act + bias(p, kFc2B);

  const Matrix input = ConstMatrixMap(x.storage().data(), 1, n);
  im2col(input, a.height, a.width, a.cols1);
  a.pre1.noalias() = weight(p, kConv1W, kChannels) * a.cols1;
  a.pre1.colwise() += bias(p, kConv1B) + a.time_bias;
  a.act1 = a.pre1.unaryExpr([](double z) { return silu(z); });

  im2col(a.act1, a.height, a.width, a.cols2);
  a.pre2.noalias() = weight(p, kConv2W, kChannels) * a.cols2;
  a.pre2.colwise() += bias(p, kConv2B);
  a.act2 = a.pre2.unaryExpr([](double z) { return silu(z); });

  im2col(a.act2, a.height, a.width, a.cols3);
  a.pre3.noalias() = weight(p, kConv3W, kChannels) * a.cols3;
  a.pre3.colwise() += bias(p, kConv3B);
  a.act3 = a.pre3.unaryExpr([](double z) { return silu(z); });

  im2col(a.act3, a.height, a.width, a.cols4);
  a.output.noalias() = weight(p, kConv4W, 1) * a.cols4;
  a.output.array() += p.block(kConv4B)[0];
  a.output += input;
}

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
void run_backward(const DenoiserParams& p, const Activations& a, const Matrix& d_out,
                  DenoiserParams& grad) {
  const int h = a.height;
  const int w = a.width;

  weight(grad, kConv4W, 1).noalias() += d_out * a.cols4.transpose();
  grad.block(kConv4B)[0] += d_out.sum();
  Matrix d_cols = weight(p, kConv4W, 1).transpose() * d_out;
  Matrix d_act;
  col2im(d_cols, kChannels, h, w, d_act);

  Matrix d_pre = d_act.cwiseProduct(a.pre3.unaryExpr([](double z) { return silu_grad(z); }));
  weight(grad, kConv3W, kChannels).noalias() += d_pre * a.cols3.transpose();
  bias(grad, kConv3B) += d_pre.rowwise().sum();
  d_cols.noalias() = weight(p, kConv3W, kChannels).transpose() * d_pre;
  col2im(d_cols, kChannels, h, w, d_act);

  d_pre = d_act.cwiseProduct(a.pre2.unaryExpr([](double z) { return silu_grad(z); }));
  weight(grad, kConv2W, kChannels).noalias() += d_pre * a.cols2.transpose();
  bias(grad, kConv2B) += d_pre.rowwise().sum();
  d_cols.noalias() = weight(p, kConv2W, kChannels).transpose() * d_pre;
  col2im(d_cols, kChannels, h, w, d_act);

  d_pre = d_act.cwiseProduct(a.pre1.unaryExpr([](double z) { return silu_grad(z); }));
  weight(grad, kConv1W, kChannels).noalias() += d_pre * a.cols1.transpose();
  const Eigen::VectorXd d_bias1 = d_pre.rowwise().sum();
  bias(grad, kConv1B) += d_bias1;

  // The time bias enters every pixel exactly like conv1's bias.
  bias(grad, kFc2B) += d_bias1;
  weight(grad, kFc2W, kChannels).noalias() += d_bias1 * a.fc1_act.transpose();
  const Eigen::VectorXd d_hidden =
      (weight(p, kFc2W, kChannels).transpose() * d_bias1)
          .cwiseProduct(a.fc1_pre.unaryExpr([](double z) { return silu_grad(z); }));
  bias(grad, kFc1B) += d_hidden;
  weight(grad, kFc1W, kTimeHidden).noalias() += d_hidden * a.embed.transpose();
}

void check_example(const TrainingExample& ex) {
  validate_image(ex.x);
  require_same_shape(ex.x, ex.target, "loss_and_grad");
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

const std::vector<ParamBlock>& param_layout() {
  static const std::vector<ParamBlock> layout = build_layout();
  return layout;
}

std::size_t param_count() {
  const auto& last = param_layout().back();
  return last.offset + last.count;
}

std::span<double> DenoiserParams::block(std::size_t index) {
  const auto& b = param_layout().at(index);
  return std::span<double>(values).subspan(b.offset, b.count);
}

std::span<const double> DenoiserParams::block(std::size_t index) const {
  const auto& b = param_layout().at(index);
  return std::span<const double>(values).subspan(b.offset, b.count);
}

DenoiserParams init_params(std::uint64_t seed) {
  static constexpr std::size_t kFanIn[kBlockCount] = {
      kTaps, kTaps, kChannels * kTaps, kChannels * kTaps, kChannels * kTaps, kChannels * kTaps,
      0,     0,     kEmbedDim,         kEmbedDim,         kTimeHidden,       kTimeHidden};
  DenoiserParams p;
  Rng rng(seed);
  for (std::size_t b = 0; b < kBlockCount; ++b) {
    if (kFanIn[b] == 0) continue;  // conv4 stays zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(kFanIn[b]));
    for (double& v : p.block(b)) v = bound * (2.0 * rng.uniform() - 1.0);
  }
  return p;
}

std::vector<double> time_embedding(double t) {
  constexpr int kHalf = kEmbedDim / 2;
  std::vector<double> emb(kEmbedDim);
  for (int i = 0; i < kHalf; ++i) {
    const double angle = 1000.0 * t * std::pow(10000.0, -static_cast<double>(i) / kHalf);
    emb[i] = std::sin(angle);
    emb[kHalf + i] = std::cos(angle);
  }
  return emb;
}

ImageGrid forward(const DenoiserParams& params, const ImageGrid& x, double t) {
  validate_image(x);
  if (params.values.size() != param_count()) {
    throw InvalidArgument("denoiser: parameter vector has the wrong size");
  }
  Activations a;
  run_forward(params, x, t, a);
  ImageGrid out(x.height(), x.width());
  std::copy(a.output.data(), a.output.data() + a.output.size(), out.storage().begin());
  return out;
}

LossAndGrad loss_and_grad(const DenoiserParams& params, std::span<const TrainingExample> batch,
                          int threads) {
  if (batch.empty()) throw InvalidArgument("loss_and_grad: empty batch");
  for (const auto& ex : batch) {
    check_example(ex);
    require_same_shape(ex.x, batch.front().x, "loss_and_grad");
  }
  const double denom = static_cast<double>(batch.size()) * static_cast<double>(batch[0].x.size());

  std::vector<double> item_loss(batch.size(), 0.0);
  std::vector<DenoiserParams> item_grad(batch.size());
  auto work = [&](std::size_t i) {
    const auto& ex = batch[i];
    Activations a;
    run_forward(params, ex.x, ex.t, a);
    const Eigen::Index n = static_cast<Eigen::Index>(ex.x.size());
    const Matrix resid = a.output - ConstMatrixMap(ex.target.storage().data(), 1, n);
    item_loss[i] = resid.squaredNorm() / denom;
    run_backward(params, a, (2.0 / denom) * resid, item_grad[i]);
  };

  const std::size_t workers =
      std::min<std::size_t>(batch.size(), static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) work(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t wkr = 0; wkr < workers; ++wkr) {
      pool.emplace_back([&, wkr] {
        for (std::size_t i = wkr; i < batch.size(); i += workers) work(i);
      });
    }
  }

  LossAndGrad out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss += item_loss[i];
    for (std::size_t k = 0; k < out.grad.values.size(); ++k) {
      out.grad.values[k] += item_grad[i].values[k];
    }
  }
  if (!std::isfinite(out.loss) || !all_finite(out.grad.values)) {
    throw TrainingDivergence("loss_and_grad: non-finite loss or gradient", -1);
  }
  return out;
}

double loss(const DenoiserParams& params, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw InvalidArgument("loss: empty batch");
  double total = 0.0;
  double count = 0.0;
  for (const auto& ex : batch) {
    check_example(ex);
    const ImageGrid out = forward(params, ex.x, ex.t);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double r = out[i] - ex.target[i];
      total += r * r;
    }
    count += static_cast<double>(out.size());
  }
  return total / count;
}

void TrainConfig::validate() const {
  std::vector<std::string> bad;
  if (epochs < 1) bad.emplace_back("epochs");
  if (batch_size < 1) bad.emplace_back("batch_size");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad.emplace_back("learning_rate");
  if (!(sigma > 0.0)) bad.emplace_back("sigma");
  if (!(radius_sampler.r0 >= 0.0) || !std::isfinite(radius_sampler.r0)) bad.emplace_back("radius_sampler.r0");
  if (!(radius_sampler.lambda > 0.0) || !std::isfinite(radius_sampler.lambda)) {
    bad.emplace_back("radius_sampler.lambda");
  }
  if (ddpm_steps < 1) bad.emplace_back("ddpm_steps");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    bad.emplace_back("beta_start/beta_end");
  }
  if (threads < 1) bad.emplace_back("threads");
  if (!bad.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& b : bad) msg += " " + b;
    throw InvalidArgument(msg);
  }
}

ImageGrid training_noise(const ImageGrid& img, const TrainConfig& config, double cutoff_radius,
                         Rng& rng) {
  noise::NoiseSpec spec;
  spec.magnitude_source = config.magnitude_source;
  spec.sigma = config.sigma;
  spec.normalize = config.normalize;
  if (config.noise_mode == NoiseMode::structured) {
    spec.cutoff_radius = cutoff_radius;
  } else {
    spec.cutoff_radius.reset();
  }
  return noise::fss_noise(img, spec, rng);
}

TrainResult train(const std::vector<ImageGrid>& corpus, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (corpus.empty()) throw InvalidArgument("train: corpus is empty");
  for (const auto& img : corpus) {
    validate_image(img);
    require_same_shape(img, corpus.front(), "train");
  }

  const Rng root(config.seed);
  const Rng shuffle_root = root.substream(1);
  const Rng radius_root = root.substream(2);
  const Rng item_root = root.substream(3);
  const diffusion::DiffusionSchedule sched =
      config.objective == Objective::ddpm
          ? diffusion::ddpm_linear_schedule(config.ddpm_steps, config.beta_start, config.beta_end)
          : diffusion::DiffusionSchedule{};

  TrainResult result{init_params(config.seed), {}};
  const std::size_t n = corpus.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  long iteration = 0;
  std::uint64_t item_counter = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = shuffle_root.substream(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += batch, ++iteration, ++batches) {
      Rng radius_rng = radius_root.substream(static_cast<std::uint64_t>(iteration));
      const double radius = noise::sample_cutoff_radius(config.radius_sampler, radius_rng);

      std::vector<TrainingExample> examples;
      for (std::size_t k = start; k < std::min(n, start + batch); ++k) {
        const ImageGrid& img = corpus[order[k]];
        Rng item_rng = item_root.substream(item_counter++);
        if (config.objective == Objective::flow) {
          const double t = item_rng.uniform();
          ImageGrid eps = training_noise(img, config, radius, item_rng);
          ImageGrid x = diffusion::flow_interpolate(img, eps, t);
          examples.push_back({std::move(x), t, diffusion::flow_velocity_target(img, eps)});
        } else {
          const int step = static_cast<int>(item_rng.below(static_cast<std::uint64_t>(sched.steps())));
          ImageGrid eps = training_noise(img, config, radius, item_rng);
          ImageGrid x = diffusion::ddpm_forward(img, eps, step, sched);
          examples.push_back({std::move(x), diffusion::ddpm_time(step, sched.steps()), std::move(eps)});
        }
      }

      LossAndGrad lg;
      try {
        lg = loss_and_grad(result.params, examples, config.threads);
      } catch (const TrainingDivergence& e) {
        throw TrainingAborted(std::string("training diverged at iteration ") +
                                  std::to_string(iteration) + " (epoch " + std::to_string(epoch) +
                                  "): " + e.what(),
                              iteration, result.loss_history);
      }
      for (std::size_t k = 0; k < result.params.values.size(); ++k) {
        result.params.values[k] -= config.learning_rate * lg.grad.values[k];
      }
      epoch_loss += lg.loss;
    }
    result.loss_history.push_back(epoch_loss / batches);
    if (on_epoch) on_epoch(epoch, result.loss_history.back(), result.params);
  }
  return result;
}

diffusion::VelocityModel velocity_model(const DenoiserParams& params) {
  return [params](const ImageGrid& x, double t) { return forward(params, x, t); };
}

diffusion::NoiseModel noise_model(const DenoiserParams& params, int total_steps) {
  return [params, total_steps](const ImageGrid& x, int step) {
    return forward(params, x, diffusion::ddpm_time(step, total_steps));
  };
}

}  // namespace phipd::denoiser
