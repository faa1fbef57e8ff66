#include "zsep/tiny_denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "zsep/error.hpp"
#include "zsep/random.hpp"

namespace zsep {

namespace {

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

void fill_uniform(Rng& rng, Eigen::Ref<Eigen::MatrixXd> m, double bound) {
  // Column-major fill keeps the draw order fixed.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
  }
}

void check_shapes(const TinyDenoiserParams& p) {
  const auto h = static_cast<Eigen::Index>(p.hidden);
  const auto d = static_cast<Eigen::Index>(p.grid_size());
  if (p.w1.rows() != h || p.w1.cols() != p.input_size() || p.b1.size() != h || p.w2.rows() != d ||
      p.w2.cols() != h || p.b2.size() != d ||
      p.cond_embed.rows() != static_cast<Eigen::Index>(p.conditions.size()) || p.cond_embed.cols() != p.cond_dim) {
    throw std::invalid_argument("TinyDenoiserParams: inconsistent tensor shapes");
  }
}

}  // namespace

int TinyDenoiserParams::row_of(const Condition& c) const {
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    if (conditions[i] == c) return static_cast<int>(i);
  }
  return -1;
}

bool TinyDenoiserParams::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() && cond_embed.allFinite();
}

std::size_t TinyDenoiserParams::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size() + cond_embed.size());
}

std::vector<Condition> default_conditions(const LabelRegistry& registry) {
  std::vector<Condition> out;
  for (const auto& l : registry.labels()) out.push_back(Condition::label(l.id));
  const auto& ls = registry.labels();
  for (std::size_t i = 0; i < ls.size(); ++i) {
    for (std::size_t j = i + 1; j < ls.size(); ++j) out.push_back(Condition::composite({ls[i].id, ls[j].id}));
  }
  return out;
}

double second_moment(const std::vector<LabeledGrid>& data) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& s : data) {
    acc += squared_norm(s.grid);
    n += s.grid.size();
  }
  return n ? acc / static_cast<double>(n) : 1.0;
}

TinyDenoiserParams init_tiny_params(const TinyDenoiserSpec& spec, GridDims dims, std::vector<Condition> conditions,
                                    double data_second_moment, std::uint64_t seed) {
  if (!dims.valid()) throw std::invalid_argument("init_tiny_params: bad dims");
  if (spec.hidden < 1 || spec.time_dim < 2 || spec.time_dim % 2 != 0 || spec.cond_dim < 1) {
    throw std::invalid_argument("init_tiny_params: need hidden >= 1, even time_dim >= 2, cond_dim >= 1");
  }
  if (!(spec.uncond_dropout >= 0.0 && spec.uncond_dropout <= 1.0)) {
    throw std::invalid_argument("init_tiny_params: dropout must lie in [0, 1]");
  }
  if (!(data_second_moment > 0.0) || !std::isfinite(data_second_moment)) {
    throw std::invalid_argument("init_tiny_params: data second moment must be positive");
  }

  TinyDenoiserParams p;
  p.dims = dims;
  p.hidden = spec.hidden;
  p.time_dim = spec.time_dim;
  p.cond_dim = spec.cond_dim;
  p.uncond_dropout = spec.uncond_dropout;
  p.data_second_moment = data_second_moment;
  p.conditions.push_back(Condition::null());
  for (auto& c : conditions) {
    if (c.is_null() || c.kind() == Condition::Kind::random) {
      throw std::invalid_argument("init_tiny_params: table conditions must be labels or composites");
    }
    if (p.row_of(c) >= 0) throw std::invalid_argument("init_tiny_params: duplicate condition " + c.to_string());
    p.conditions.push_back(std::move(c));
  }

  Rng rng(seed);
  const auto in = static_cast<Eigen::Index>(p.input_size());
  const auto d = static_cast<Eigen::Index>(p.grid_size());
  const auto h = static_cast<Eigen::Index>(p.hidden);
  const double b_in = 1.0 / std::sqrt(static_cast<double>(in));
  const double b_h = 1.0 / std::sqrt(static_cast<double>(h));
  p.w1.resize(h, in);
  p.b1.resize(h);
  p.w2.resize(d, h);
  p.b2.resize(d);
  p.cond_embed.resize(static_cast<Eigen::Index>(p.conditions.size()), p.cond_dim);
  fill_uniform(rng, p.w1, b_in);
  fill_uniform(rng, p.b1, b_in);
  fill_uniform(rng, p.w2, b_h);
  fill_uniform(rng, p.b2, b_h);
  for (Eigen::Index j = 0; j < p.cond_embed.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.cond_embed.rows(); ++i) p.cond_embed(i, j) = 0.1 * rng.normal();
  }
  return p;
}

Eigen::VectorXd time_embedding(int t, int dim) {
  const int half = dim / 2;
  Eigen::VectorXd e(dim);
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(1000.0) * static_cast<double>(k) / half);
    e(k) = std::sin(t * freq);
    e(k + half) = std::cos(t * freq);
  }
  return e;
}

double skip_scale(const NoiseSchedule& sched, double data_second_moment, int t) {
  const double ab = sched.alpha_bar(t);
  return std::sqrt(1.0 - ab) / (ab * data_second_moment + 1.0 - ab);
}

Eigen::VectorXd condition_embedding(const TinyDenoiserParams& params, const Condition& c) {
  if (c.kind() == Condition::Kind::random) {
    double norm = 0.0;
    const auto rows = params.cond_embed.rows();
    for (Eigen::Index r = 1; r < rows; ++r) norm += params.cond_embed.row(r).norm();
    norm = rows > 1 ? norm / static_cast<double>(rows - 1) : 1.0;
    Rng rng(c.seed());
    Eigen::VectorXd e(params.cond_dim);
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = rng.normal();
    const double n = e.norm();
    return n > 0.0 ? Eigen::VectorXd(e * (norm / n)) : e;
  }
  const int row = params.row_of(c);
  if (row < 0) throw std::invalid_argument("tiny denoiser: unknown condition " + c.to_string());
  return params.cond_embed.row(row).transpose();
}

FeatureGrid tiny_forward(const TinyDenoiserParams& params, const NoiseSchedule& sched, const FeatureGrid& x_t,
                         const Condition& c, int t) {
  if (x_t.dims() != params.dims) {
    throw std::invalid_argument("tiny_forward: grid " + x_t.dims().to_string() + " vs model " +
                                params.dims.to_string());
  }
  if (t < 1 || t > sched.steps()) throw std::invalid_argument("tiny_forward: t outside schedule");
  const Eigen::Index d = params.grid_size();

  Eigen::VectorXd z(params.input_size());
  z.head(d) = Eigen::Map<const Eigen::VectorXd>(x_t.data(), d);
  z.segment(d, params.time_dim) = time_embedding(t, params.time_dim);
  z.tail(params.cond_dim) = condition_embedding(params, c);

  Eigen::VectorXd hidden = params.w1 * z + params.b1;
  hidden = hidden.unaryExpr([](double v) { return silu(v); });
  Eigen::VectorXd out = params.w2 * hidden + params.b2;
  out += skip_scale(sched, params.data_second_moment, t) * z.head(d);

  FeatureGrid eps(params.dims);
  Eigen::Map<Eigen::VectorXd>(eps.data(), d) = out;
  return eps;
}

double denoising_loss(const TinyDenoiserParams& params, const NoiseSchedule& sched,
                      std::span<const TrainingExample> batch, TinyGradients* grads) {
  check_shapes(params);
  if (batch.empty()) throw std::invalid_argument("denoising_loss: empty batch");
  const Eigen::Index d = params.grid_size();
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index td = params.time_dim;

  Eigen::MatrixXd z(params.input_size(), n);
  Eigen::MatrixXd target(d, n);
  Eigen::VectorXd skip(n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto& ex = batch[static_cast<std::size_t>(b)];
    if (ex.x0 == nullptr || ex.x0->dims() != params.dims || ex.noise.dims() != params.dims) {
      throw std::invalid_argument("denoising_loss: example dims mismatch");
    }
    if (ex.cond_row < 0 || ex.cond_row >= params.cond_embed.rows()) {
      throw std::invalid_argument("denoising_loss: condition row out of range");
    }
    const double ab = sched.alpha_bar(ex.t);
    const double sa = std::sqrt(ab);
    const double sn = std::sqrt(1.0 - ab);
    for (Eigen::Index i = 0; i < d; ++i) {
      z(i, b) = sa * (*ex.x0)[static_cast<std::size_t>(i)] + sn * ex.noise[static_cast<std::size_t>(i)];
      target(i, b) = ex.noise[static_cast<std::size_t>(i)];
    }
    z.block(d, b, td, 1) = time_embedding(ex.t, params.time_dim);
    z.block(d + td, b, params.cond_dim, 1) = params.cond_embed.row(ex.cond_row).transpose();
    skip(b) = skip_scale(sched, params.data_second_moment, ex.t);
  }

  Eigen::MatrixXd pre = params.w1 * z;
  pre.colwise() += params.b1;
  const Eigen::MatrixXd act = pre.unaryExpr([](double v) { return silu(v); });
  Eigen::MatrixXd out = params.w2 * act;
  out.colwise() += params.b2;
  out += z.topRows(d) * skip.asDiagonal();

  const Eigen::MatrixXd diff = out - target;
  const double scale = 1.0 / static_cast<double>(d * n);
  const double loss = diff.squaredNorm() * scale;

  if (grads) {
    const Eigen::MatrixXd d_out = (2.0 * scale) * diff;
    grads->w2 = d_out * act.transpose();
    grads->b2 = d_out.rowwise().sum();
    const Eigen::MatrixXd d_act = params.w2.transpose() * d_out;
    const Eigen::MatrixXd d_pre = d_act.cwiseProduct(pre.unaryExpr([](double v) { return silu_grad(v); }));
    grads->w1 = d_pre * z.transpose();
    grads->b1 = d_pre.rowwise().sum();
    const Eigen::MatrixXd d_cond = params.w1.rightCols(params.cond_dim).transpose() * d_pre;
    grads->cond_embed = Eigen::MatrixXd::Zero(params.cond_embed.rows(), params.cond_embed.cols());
    for (Eigen::Index b = 0; b < n; ++b) {
      grads->cond_embed.row(batch[static_cast<std::size_t>(b)].cond_row) += d_cond.col(b).transpose();
    }
  }
  return loss;
}

namespace {

struct AdamMoments {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
};

template <typename Tensor>
void adam_update(Tensor& param, const Tensor& grad, AdamMoments& st, double lr, double bc1, double bc2) {
  constexpr double b1 = 0.9;
  constexpr double b2 = 0.999;
  constexpr double eps = 1e-8;
  if (st.m.size() == 0) {
    st.m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    st.v = Eigen::MatrixXd::Zero(param.rows(), param.cols());
  }
  st.m = b1 * st.m + (1.0 - b1) * grad;
  st.v = b2 * st.v + (1.0 - b2) * grad.cwiseProduct(grad);
  const Eigen::MatrixXd step =
      (st.m.array() / bc1) / ((st.v.array() / bc2).sqrt() + eps);
  param -= lr * step;
}

}  // namespace

TrainResult train(TinyDenoiserParams init, const std::vector<LabeledGrid>& data, const NoiseSchedule& sched,
                  const TrainOptions& options) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (options.epochs < 0 || options.batch_size < 1) throw std::invalid_argument("train: bad epochs/batch size");
  if (!(options.learning_rate >= 0.0)) throw std::invalid_argument("train: learning rate must be >= 0");
  check_shapes(init);

  std::vector<int> rows(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].grid.dims() != init.dims) throw std::invalid_argument("train: sample dims mismatch");
    rows[i] = init.row_of(data[i].condition);
    if (rows[i] < 0) throw std::invalid_argument("train: condition " + data[i].condition.to_string() + " not in table");
  }

  TrainResult result{std::move(init), {}};
  TinyDenoiserParams& p = result.params;
  Rng rng(derive_seed(options.seed, 1));
  AdamMoments s_w1, s_b1, s_w2, s_b2, s_emb;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainingExample> batch;
  TinyGradients g;
  long step = 0;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        TrainingExample ex;
        ex.x0 = &data[idx].grid;
        ex.cond_row = rng.uniform() < p.uncond_dropout ? 0 : rows[idx];
        ex.t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.steps())));
        ex.noise = FeatureGrid(p.dims);
        fill_normal(rng, ex.noise);
        batch.push_back(std::move(ex));
      }
      const double loss = denoising_loss(p, sched, batch, &g);
      if (!std::isfinite(loss)) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(step));
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      ++step;
      const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(step));
      const double lr = options.learning_rate;
      adam_update(p.w1, g.w1, s_w1, lr, bc1, bc2);
      adam_update(p.b1, g.b1, s_b1, lr, bc1, bc2);
      adam_update(p.w2, g.w2, s_w2, lr, bc1, bc2);
      adam_update(p.b2, g.b2, s_b2, lr, bc1, bc2);
      adam_update(p.cond_embed, g.cond_embed, s_emb, lr, bc1, bc2);
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  if (!p.all_finite()) throw NumericalError("train: parameters became non-finite");
  return result;
}

double evaluation_loss(const TinyDenoiserParams& params, const NoiseSchedule& sched,
                       const std::vector<LabeledGrid>& data, std::uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("evaluation_loss: empty dataset");
  std::vector<TrainingExample> batch;
  batch.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    TrainingExample ex;
    ex.x0 = &data[i].grid;
    ex.cond_row = params.row_of(data[i].condition);
    if (ex.cond_row < 0) throw std::invalid_argument("evaluation_loss: unknown condition");
    ex.t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.steps())));
    ex.noise = FeatureGrid(params.dims);
    fill_normal(rng, ex.noise);
    batch.push_back(std::move(ex));
  }
  return denoising_loss(params, sched, batch);
}

void quantize_to_float(TinyDenoiserParams& params) {
  auto q = [](auto& m) { m = m.template cast<float>().template cast<double>(); };
  q(params.w1);
  q(params.b1);
  q(params.w2);
  q(params.b2);
  q(params.cond_embed);
  params.data_second_moment = static_cast<double>(static_cast<float>(params.data_second_moment));
  params.uncond_dropout = static_cast<double>(static_cast<float>(params.uncond_dropout));
}

TinyDenoiser::TinyDenoiser(TinyDenoiserParams params, NoiseSchedule sched)
    : params_(std::move(params)), sched_(std::move(sched)) {
  check_shapes(params_);
  if (!params_.all_finite()) throw std::invalid_argument("TinyDenoiser: non-finite parameters");
}

bool TinyDenoiser::supports(const Condition& c) const {
  return c.kind() == Condition::Kind::random || params_.row_of(c) >= 0;
}

}  // namespace zsep
