#include "zsep/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "zsep/error.hpp"

namespace zsep {

void Checkpoint::add(Record r) {
  if (find(r.name)) throw std::invalid_argument("checkpoint: duplicate record " + r.name);
  if (r.name.size() > 0xFFFF || r.dims.size() > 0xFF) throw std::invalid_argument("checkpoint: record header too large");
  records_.push_back(std::move(r));
}

const Record* Checkpoint::find(std::string_view name) const {
  for (const auto& r : records_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const Record& Checkpoint::get(std::string_view name) const {
  const Record* r = find(name);
  if (!r) throw FormatError("checkpoint: missing record '" + std::string(name) + "'");
  return *r;
}

namespace {

template <typename T>
void put(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: truncated data");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::vector<float> to_floats(const double* v, std::size_t n) {
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

std::vector<float> text_values(const std::string& s) {
  std::vector<float> out;
  for (unsigned char c : s) out.push_back(static_cast<float>(c));
  return out;
}

std::string values_text(const Record& r) {
  std::string s;
  for (float f : r.values) {
    if (!(f >= 0.0f && f < 256.0f) || f != std::floor(f)) throw FormatError("checkpoint: bad text record " + r.name);
    s.push_back(static_cast<char>(static_cast<unsigned char>(f)));
  }
  return s;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

int as_int(float f, const char* what) {
  if (f != std::floor(f) || std::abs(f) > 16777216.0f) throw FormatError(std::string("checkpoint: bad integer ") + what);
  return static_cast<int>(f);
}

Eigen::MatrixXd read_matrix(const Checkpoint& ckpt, std::string_view name, Eigen::Index rows, Eigen::Index cols) {
  const Record& r = ckpt.get(name);
  if (r.dims.size() != 2 || r.dims[0] != rows || r.dims[1] != cols) {
    throw FormatError("checkpoint: record '" + std::string(name) + "' has unexpected shape");
  }
  Eigen::MatrixXd m(rows, cols);
  // row-major payload
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.values[static_cast<std::size_t>(i * cols + j)];
  }
  return m;
}

Record matrix_record(const std::string& name, const Eigen::MatrixXd& m) {
  Record r{RecordKind::params, name, {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, {}};
  r.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.values.push_back(static_cast<float>(m(i, j)));
  }
  return r;
}

}  // namespace

std::string serialize(const Checkpoint& ckpt) {
  std::string out = "ZSEP";
  put<std::uint16_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.records().size()));
  for (const auto& r : ckpt.records()) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(r.kind));
    put<std::uint16_t>(out, static_cast<std::uint16_t>(r.name.size()));
    out += r.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(r.dims.size()));
    for (auto d : r.dims) put<std::uint32_t>(out, d);
    put<std::uint64_t>(out, r.values.size());
    for (float f : r.values) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

Checkpoint deserialize(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4) != "ZSEP") throw FormatError("checkpoint: bad magic");
  const auto version = in.get<std::uint16_t>();
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>();
  Checkpoint ckpt;
  for (std::uint32_t k = 0; k < count; ++k) {
    Record r;
    const auto kind = in.get<std::uint8_t>();
    if (kind < 1 || kind > 4) throw FormatError("checkpoint: unknown record kind " + std::to_string(kind));
    r.kind = static_cast<RecordKind>(kind);
    r.name = std::string(in.take(in.get<std::uint16_t>()));
    const auto ndims = in.get<std::uint8_t>();
    std::uint64_t product = 1;
    for (int d = 0; d < ndims; ++d) {
      r.dims.push_back(in.get<std::uint32_t>());
      product *= r.dims.back();
    }
    const auto n = in.get<std::uint64_t>();
    if (ndims > 0 && n != product) throw FormatError("checkpoint: record '" + r.name + "' count does not match dims");
    if (n > in.remaining() / 4) throw FormatError("checkpoint: truncated data");
    r.values.resize(n);
    for (auto& f : r.values) f = std::bit_cast<float>(in.get<std::uint32_t>());
    try {
      ckpt.add(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what());
    }
  }
  if (!in.done()) throw FormatError("checkpoint: trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::string bytes = serialize(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void add_grid(Checkpoint& ckpt, const std::string& name, const FeatureGrid& g) {
  const auto& d = g.dims();
  ckpt.add({RecordKind::grid, name,
            {static_cast<std::uint32_t>(d.channels), static_cast<std::uint32_t>(d.frames),
             static_cast<std::uint32_t>(d.bins)},
            to_floats(g.data(), g.size())});
}

FeatureGrid read_grid(const Checkpoint& ckpt, std::string_view name) {
  const Record& r = ckpt.get(name);
  if (r.dims.size() != 3) throw FormatError("checkpoint: record '" + r.name + "' is not a grid");
  std::vector<double> v(r.values.begin(), r.values.end());
  try {
    return FeatureGrid(GridDims{r.dims[0], r.dims[1], r.dims[2]}, std::move(v));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void add_tiny_params(Checkpoint& ckpt, const TinyDenoiserParams& p) {
  ckpt.add({RecordKind::params, "tiny/meta", {8},
            {static_cast<float>(p.dims.channels), static_cast<float>(p.dims.frames), static_cast<float>(p.dims.bins),
             static_cast<float>(p.hidden), static_cast<float>(p.time_dim), static_cast<float>(p.cond_dim),
             static_cast<float>(p.uncond_dropout), static_cast<float>(p.data_second_moment)}});
  std::string conds;
  for (const auto& c : p.conditions) conds += c.to_string() + "\n";
  ckpt.add({RecordKind::params, "tiny/conditions", {}, text_values(conds)});
  ckpt.add(matrix_record("tiny/w1", p.w1));
  ckpt.add(matrix_record("tiny/b1", p.b1));
  ckpt.add(matrix_record("tiny/w2", p.w2));
  ckpt.add(matrix_record("tiny/b2", p.b2));
  ckpt.add(matrix_record("tiny/cond_embed", p.cond_embed));
}

TinyDenoiserParams read_tiny_params(const Checkpoint& ckpt) {
  const Record& meta = ckpt.get("tiny/meta");
  if (meta.values.size() != 8) throw FormatError("checkpoint: bad tiny/meta");
  TinyDenoiserParams p;
  p.dims = GridDims{static_cast<std::size_t>(as_int(meta.values[0], "channels")),
                    static_cast<std::size_t>(as_int(meta.values[1], "frames")),
                    static_cast<std::size_t>(as_int(meta.values[2], "bins"))};
  p.hidden = as_int(meta.values[3], "hidden");
  p.time_dim = as_int(meta.values[4], "time_dim");
  p.cond_dim = as_int(meta.values[5], "cond_dim");
  p.uncond_dropout = meta.values[6];
  p.data_second_moment = meta.values[7];
  if (!p.dims.valid() || p.hidden < 1 || p.time_dim < 2 || p.cond_dim < 1) throw FormatError("checkpoint: bad tiny/meta");
  try {
    for (const auto& line : split_lines(values_text(ckpt.get("tiny/conditions")))) {
      p.conditions.push_back(Condition::parse(line));
    }
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  const auto h = static_cast<Eigen::Index>(p.hidden);
  const auto d = static_cast<Eigen::Index>(p.grid_size());
  p.w1 = read_matrix(ckpt, "tiny/w1", h, p.input_size());
  p.b1 = read_matrix(ckpt, "tiny/b1", h, 1);
  p.w2 = read_matrix(ckpt, "tiny/w2", d, h);
  p.b2 = read_matrix(ckpt, "tiny/b2", d, 1);
  p.cond_embed = read_matrix(ckpt, "tiny/cond_embed", static_cast<Eigen::Index>(p.conditions.size()), p.cond_dim);
  return p;
}

void add_gaussian_model(Checkpoint& ckpt, const GaussianSourceModel& m) {
  std::string ids;
  for (const auto& l : m.labels()) ids += std::to_string(l.id) + "\n";
  ckpt.add({RecordKind::gaussian_model, "gauss/labels", {}, text_values(ids)});
  std::string comps;
  for (const auto& c : m.composites()) {
    std::vector<int> v(c.begin(), c.end());
    comps += Condition::composite(v).to_string() + "\n";
  }
  ckpt.add({RecordKind::gaussian_model, "gauss/composites", {}, text_values(comps)});
  std::vector<float> priors;
  for (const auto& comp : m.components()) priors.push_back(static_cast<float>(comp.prior));
  ckpt.add({RecordKind::gaussian_model, "gauss/priors", {static_cast<std::uint32_t>(priors.size())}, priors});
  for (const auto& l : m.labels()) {
    Checkpoint tmp;
    add_grid(tmp, "m", l.mean);
    add_grid(tmp, "s", l.stddev);
    Record mean = tmp.get("m");
    Record sd = tmp.get("s");
    mean.kind = sd.kind = RecordKind::gaussian_model;
    mean.name = "gauss/" + std::to_string(l.id) + "/mean";
    sd.name = "gauss/" + std::to_string(l.id) + "/std";
    ckpt.add(std::move(mean));
    ckpt.add(std::move(sd));
  }
}

GaussianSourceModel read_gaussian_model(const Checkpoint& ckpt) {
  try {
    std::vector<LabelGaussian> labels;
    for (const auto& line : split_lines(values_text(ckpt.get("gauss/labels")))) {
      const int id = std::stoi(line);
      labels.push_back({id, read_grid(ckpt, "gauss/" + line + "/mean"), read_grid(ckpt, "gauss/" + line + "/std")});
    }
    std::vector<std::vector<int>> comps;
    for (const auto& line : split_lines(values_text(ckpt.get("gauss/composites")))) {
      const Condition c = Condition::parse(line);
      comps.emplace_back(c.ids().begin(), c.ids().end());
    }
    const Record& pr = ckpt.get("gauss/priors");
    std::vector<double> priors(pr.values.begin(), pr.values.end());
    return GaussianSourceModel(std::move(labels), std::move(comps), std::move(priors));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: bad gaussian model: ") + e.what());
  }
}

void add_trace(Checkpoint& ckpt, const std::string& prefix, const InversionTrace& trace) {
  ckpt.add({RecordKind::trace_metadata, prefix + "/meta", {2},
            {trace.kind == SamplerKind::ddim ? 1.0f : 2.0f, static_cast<float>(trace.zs.size())}});
  std::vector<float> plan;
  for (int t : trace.plan.timesteps()) plan.push_back(static_cast<float>(t));
  ckpt.add({RecordKind::trace_metadata, prefix + "/plan", {static_cast<std::uint32_t>(plan.size())}, plan});
  ckpt.add({RecordKind::trace_metadata, prefix + "/c_inv", {}, text_values(trace.c_inv.to_string())});
  add_grid(ckpt, prefix + "/x_T", trace.x_T);
  for (std::size_t k = 0; k < trace.zs.size(); ++k) add_grid(ckpt, prefix + "/z/" + std::to_string(k), trace.zs[k]);
}

InversionTrace read_trace(const Checkpoint& ckpt, const std::string& prefix) {
  const Record& meta = ckpt.get(prefix + "/meta");
  if (meta.values.size() != 2) throw FormatError("checkpoint: bad trace meta");
  const int kind = as_int(meta.values[0], "trace kind");
  const int nz = as_int(meta.values[1], "trace z count");
  if ((kind != 1 && kind != 2) || nz < 0) throw FormatError("checkpoint: bad trace meta");
  std::vector<int> ts;
  for (float f : ckpt.get(prefix + "/plan").values) ts.push_back(as_int(f, "timestep"));
  InversionTrace tr;
  tr.kind = kind == 1 ? SamplerKind::ddim : SamplerKind::ddpm;
  try {
    const int top = ts.empty() ? 1 : ts.front();
    tr.plan = StepPlan::from_list(ts, top);
    tr.c_inv = Condition::parse(values_text(ckpt.get(prefix + "/c_inv")));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  tr.x_T = read_grid(ckpt, prefix + "/x_T");
  for (int k = 0; k < nz; ++k) tr.zs.push_back(read_grid(ckpt, prefix + "/z/" + std::to_string(k)));
  return tr;
}

}  // namespace zsep
