#include "bfscl/models.hpp"

#include <algorithm>
#include <set>

#include "bfscl/error.hpp"

namespace bfscl {

Dense::Dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight(name + ".weight", kaiming_uniform({out, in}, in, rng)), bias(name + ".bias", Tensor({out})) {}

// ---------------------------------------------------------------------------

StudentModel::StudentModel(StudentConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.channels.empty()) throw ConfigError("student: at least one conv stage is required");
  if (cfg_.kernel % 2 == 0) throw ConfigError("student: conv kernel size must be odd");
  const std::size_t factor = std::size_t{1} << cfg_.channels.size();
  if (cfg_.height % factor != 0 || cfg_.width % factor != 0) {
    throw ConfigError("student: input " + std::to_string(cfg_.height) + "x" + std::to_string(cfg_.width) +
                      " is not divisible by 2^" + std::to_string(cfg_.channels.size()));
  }
  Rng rng(cfg_.seed);
  std::size_t in = cfg_.in_channels;
  for (std::size_t l = 0; l < cfg_.channels.size(); ++l) {
    const std::size_t out = cfg_.channels[l];
    const std::string name = "student.conv" + std::to_string(l + 1);
    const std::size_t k = cfg_.kernel;
    conv_w_.emplace_back(name + ".weight", kaiming_uniform({k, k, in, out}, k * k * in, rng));
    conv_b_.emplace_back(name + ".bias", Tensor({out}));
    in = out;
  }
  embed_ = Dense("student.embed", in, cfg_.embed_dim, rng);
}

Shape StudentModel::feature_shape(std::size_t l) const {
  const std::size_t div = std::size_t{1} << l;
  return {cfg_.height / div, cfg_.width / div, cfg_.channels.at(l)};
}

StudentOutput StudentModel::forward(const Var& x) const {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[1] != cfg_.height || s[2] != cfg_.width || s[3] != cfg_.in_channels) {
    throw DimensionError("student_forward: expected input [B," + std::to_string(cfg_.height) + "," +
                         std::to_string(cfg_.width) + "," + std::to_string(cfg_.in_channels) + "], got " +
                         shape_to_string(s));
  }
  if (class_ids_.empty()) throw UsageError("student_forward: no classes registered");
  StudentOutput out;
  Var h = x;
  for (std::size_t l = 0; l < conv_w_.size(); ++l) {
    h = ops::relu(ops::conv2d(h, conv_w_[l].var(), conv_b_[l].var()));
    out.features.push_back(h);
    h = ops::avg_pool2(h);
  }
  out.embedding = embed_.forward(ops::global_average_pool(h));
  out.logits = ops::linear(out.embedding, cls_w_.var(), cls_b_.var());
  return out;
}

void StudentModel::expand_classifier(std::span<const std::uint32_t> new_classes) {
  if (new_classes.empty()) return;
  std::set<std::uint32_t> seen(class_ids_.begin(), class_ids_.end());
  for (std::uint32_t c : new_classes) {
    if (!seen.insert(c).second) {
      throw ProtocolError("classifier_expand: class " + std::to_string(c) + " is already registered");
    }
  }
  Rng rng(derive_seed(cfg_.seed, 0xc1a55, class_ids_.size()));
  const std::size_t n = new_classes.size();
  Tensor rows = kaiming_uniform({n, cfg_.embed_dim}, cfg_.embed_dim, rng);
  if (class_ids_.empty()) {
    cls_w_ = Parameter("student.classifier.weight", std::move(rows));
    cls_b_ = Parameter("student.classifier.bias", Tensor({n}));
  } else {
    cls_w_.append_rows(rows);
    cls_b_.append_rows(Tensor({n}));
  }
  class_ids_.insert(class_ids_.end(), new_classes.begin(), new_classes.end());
}

std::vector<Parameter*> StudentModel::conv_parameters() {
  std::vector<Parameter*> out;
  for (std::size_t l = 0; l < conv_w_.size(); ++l) {
    out.push_back(&conv_w_[l]);
    out.push_back(&conv_b_[l]);
  }
  return out;
}

std::vector<Parameter*> StudentModel::parameters() {
  std::vector<Parameter*> out = conv_parameters();
  out.push_back(&embed_.weight);
  out.push_back(&embed_.bias);
  if (!class_ids_.empty()) {
    out.push_back(&cls_w_);
    out.push_back(&cls_b_);
  }
  return out;
}

std::vector<const Parameter*> StudentModel::parameters() const {
  auto mut = const_cast<StudentModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

// ---------------------------------------------------------------------------

MineDiscriminator::MineDiscriminator(MineConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.student_dims.size() != cfg_.teacher_dims.size()) {
    throw ConfigError("mine: student and teacher scale counts differ (" + std::to_string(cfg_.student_dims.size()) +
                      " vs " + std::to_string(cfg_.teacher_dims.size()) + ")");
  }
  if (cfg_.d_common == 0 || cfg_.channels == 0) throw ConfigError("mine: d_common and channels must be positive");
  if (!(cfg_.clamp > 0.0)) throw ConfigError("mine: clamp must be positive");
  Rng rng(cfg_.seed);
  constexpr std::size_t kernels[] = {1, 3, 5};
  for (std::size_t l = 0; l < cfg_.student_dims.size(); ++l) {
    const std::string name = "mine.scale" + std::to_string(l + 1);
    ScaleCritic c;
    c.proj_student = Dense(name + ".proj_student", cfg_.student_dims[l], cfg_.d_common, rng);
    c.proj_teacher = Dense(name + ".proj_teacher", cfg_.teacher_dims[l], cfg_.d_common, rng);
    std::size_t in = 1;
    for (std::size_t i = 0; i < 3; ++i) {
      const std::size_t k = kernels[i];
      const std::string cname = name + ".conv" + std::to_string(k);
      c.conv_w.emplace_back(cname + ".weight", kaiming_uniform({k, in, cfg_.channels}, k * in, rng));
      c.conv_b.emplace_back(cname + ".bias", Tensor({cfg_.channels}));
      in = cfg_.channels;
    }
    c.head = Dense(name + ".head", cfg_.channels, 1, rng);
    scales_.push_back(std::move(c));
  }
}

Var MineDiscriminator::score(std::size_t scale, const Var& student, const Var& teacher) const {
  if (scale >= scales_.size()) {
    throw ConfigError("mine_score: scale " + std::to_string(scale + 1) + " is not registered (have " +
                      std::to_string(scales_.size()) + ")");
  }
  const ScaleCritic& c = scales_[scale];
  const Shape& ss = student.shape();
  const Shape& ts = teacher.shape();
  if (ss.size() != 2 || ts.size() != 2 || ss[0] != ts[0] || ss[1] != c.proj_student.in() ||
      ts[1] != c.proj_teacher.in()) {
    throw DimensionError("mine_score: shape mismatch " + shape_to_string(ss) + " vs " + shape_to_string(ts) +
                         " for scale " + std::to_string(scale + 1));
  }
  const std::size_t batch = ss[0];
  const Var parts[] = {c.proj_student.forward(student), c.proj_teacher.forward(teacher)};
  Var h = ops::reshape(ops::concat(parts), {batch, 2 * cfg_.d_common, 1});
  for (std::size_t i = 0; i < c.conv_w.size(); ++i) h = ops::relu(ops::conv1d(h, c.conv_w[i].var(), c.conv_b[i].var()));
  Var s = c.head.forward(ops::global_average_pool(h));
  return ops::reshape(ops::clamp(s, -cfg_.clamp, cfg_.clamp), {batch});
}

double MineDiscriminator::score_pair(std::size_t scale, std::span<const double> student,
                                     std::span<const double> teacher) const {
  NoGradGuard guard;
  Var s = constant(Tensor({1, student.size()}, {student.begin(), student.end()}));
  Var t = constant(Tensor({1, teacher.size()}, {teacher.begin(), teacher.end()}));
  return score(scale, s, t).item();
}

void MineDiscriminator::zero_head() {
  for (auto& c : scales_) {
    std::fill(c.head.weight.tensor().data.begin(), c.head.weight.tensor().data.end(), 0.0);
    std::fill(c.head.bias.tensor().data.begin(), c.head.bias.tensor().data.end(), 0.0);
  }
}

std::vector<Parameter*> MineDiscriminator::parameters() {
  std::vector<Parameter*> out;
  for (auto& c : scales_) {
    out.push_back(&c.proj_student.weight);
    out.push_back(&c.proj_student.bias);
    out.push_back(&c.proj_teacher.weight);
    out.push_back(&c.proj_teacher.bias);
    for (std::size_t i = 0; i < c.conv_w.size(); ++i) {
      out.push_back(&c.conv_w[i]);
      out.push_back(&c.conv_b[i]);
    }
    out.push_back(&c.head.weight);
    out.push_back(&c.head.bias);
  }
  return out;
}

std::vector<const Parameter*> MineDiscriminator::parameters() const {
  auto mut = const_cast<MineDiscriminator*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

// ---------------------------------------------------------------------------

AlphaNet::AlphaNet(AlphaConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.hidden.size() != 2) throw ConfigError("alpha_net: exactly two hidden widths are required");
  Rng rng(cfg_.seed);
  std::size_t in = cfg_.student_dim + cfg_.teacher_dim;
  for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
    layers_.emplace_back("alpha.fc" + std::to_string(i + 1), in, cfg_.hidden[i], rng);
    in = cfg_.hidden[i];
  }
  layers_.emplace_back("alpha.fc3", in, 1, rng);
}

Var AlphaNet::forward(const Var& student_embed, const Var& teacher_embed) const {
  const Shape& ss = student_embed.shape();
  const Shape& ts = teacher_embed.shape();
  if (ss.size() != 2 || ts.size() != 2 || ss[0] != ts[0] || ss[1] != cfg_.student_dim || ts[1] != cfg_.teacher_dim) {
    throw DimensionError("alpha_forward: expected [B," + std::to_string(cfg_.student_dim) + "] and [B," +
                         std::to_string(cfg_.teacher_dim) + "], got " + shape_to_string(ss) + " and " +
                         shape_to_string(ts));
  }
  const Var parts[] = {student_embed, teacher_embed};
  Var h = ops::concat(parts);
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) h = ops::relu(layers_[i].forward(h));
  Var logit = ops::clamp(layers_.back().forward(h), -kLogitBound, kLogitBound);
  return ops::sigmoid(logit);
}

double AlphaNet::alpha(std::span<const double> student_embed, std::span<const double> teacher_embed) const {
  NoGradGuard guard;
  Var s = constant(Tensor({1, student_embed.size()}, {student_embed.begin(), student_embed.end()}));
  Var t = constant(Tensor({1, teacher_embed.size()}, {teacher_embed.begin(), teacher_embed.end()}));
  return forward(s, t).item();
}

void AlphaNet::zero() {
  for (Parameter* p : parameters()) std::fill(p->tensor().data.begin(), p->tensor().data.end(), 0.0);
}

std::vector<Parameter*> AlphaNet::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Parameter*> AlphaNet::parameters() const {
  auto mut = const_cast<AlphaNet*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

}  // namespace bfscl
