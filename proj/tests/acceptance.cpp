// Acceptance suite: one PASS/FAIL line per primary criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "bfscl/binary_io.hpp"
#include "bfscl/cli.hpp"
#include "bfscl/error.hpp"
#include "bfscl/kernels.hpp"
#include "fixtures.hpp"
#include "mine_gaussian.hpp"

using namespace bfscl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Tensor randn(Shape s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Tensor t(std::move(s));
  for (auto& x : t.data) x = d(rng);
  return t;
}

void jitter_biases(std::vector<Parameter*> params, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 0.1);
  for (Parameter* p : params) {
    if (p->name().ends_with("bias")) {
      for (double& b : p->tensor().data) b = d(rng);
    }
  }
}

std::vector<Var> leaves_of(const std::vector<Parameter*>& params) {
  std::vector<Var> out;
  for (Parameter* p : params) out.push_back(p->var());
  return out;
}

// ---------------------------------------------------------------------------

void gradient_integrity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::map<std::string, double> errs;
  const double eps = 1e-6;

  {
    Var x(randn({3, 5}, rng), true), w(randn({4, 5}, rng), true), b(randn({4}, rng), true);
    Var l[] = {x, w, b};
    errs["linear"] = grad_check([&] { auto y = ops::linear(x, w, b); return ops::sum(ops::mul(y, y)); }, l, eps);
  }
  {
    Var a(randn({3, 4}, rng), true), b(randn({4, 2}, rng), true);
    Var l[] = {a, b};
    errs["matmul"] = grad_check([&] { auto y = ops::matmul(a, b); return ops::sum(ops::mul(y, y)); }, l, eps);
  }
  {
    Var x(randn({2, 4, 4, 2}, rng), true), w(randn({3, 3, 2, 3}, rng), true), b(randn({3}, rng), true);
    Var l[] = {x, w, b};
    errs["conv2d+relu"] = grad_check(
        [&] { auto y = ops::relu(ops::conv2d(x, w, b)); return ops::sum(ops::mul(y, y)); }, l, eps);
  }
  {
    Var x(randn({2, 7, 2}, rng), true), w(randn({5, 2, 3}, rng), true), b(randn({3}, rng), true);
    Var l[] = {x, w, b};
    errs["conv1d"] = grad_check([&] { auto y = ops::conv1d(x, w, b); return ops::sum(ops::mul(y, y)); }, l, eps);
  }
  {
    Var x(randn({3, 4}, rng, 2.0), true), c(randn({3, 4}, rng), true);
    Var l[] = {x, c};
    errs["sigmoid"] = grad_check([&] { return ops::sum(ops::mul(ops::sigmoid(x), c)); }, l, eps);
    errs["stable_softmax"] = grad_check([&] { return ops::sum(ops::mul(ops::stable_softmax(x), c)); }, l, eps);
    errs["log_sum_exp"] = grad_check([&] { return ops::sum(ops::mul(ops::log_sum_exp(x), ops::log_sum_exp(c))); }, l, eps);
    errs["log"] = grad_check([&] { return ops::sum(ops::log(ops::add_scalar(ops::mul(x, x), 0.1))); }, l, eps);
    Var parts[] = {x, c};
    errs["concat"] = grad_check([&] { auto y = ops::concat(parts); return ops::sum(ops::mul(y, y)); }, l, eps);
    errs["clamp"] = grad_check([&] { return ops::sum(ops::mul(ops::clamp(x, -1.0, 1.0), c)); }, l, eps);
  }
  {
    Var x(randn({2, 4, 4, 3}, rng), true);
    Var l[] = {x};
    errs["global_average_pool"] = grad_check(
        [&] { auto y = ops::global_average_pool(ops::mul(x, x)); return ops::sum(ops::mul(y, y)); }, l, eps);
    errs["avg_pool2"] = grad_check([&] { auto y = ops::avg_pool2(x); return ops::sum(ops::mul(y, y)); }, l, eps);
  }

  // Composed losses on a tiny full state.
  StudentConfig sc{.height = 8, .width = 8, .in_channels = 1, .channels = {2, 3, 3}, .kernel = 3, .embed_dim = 4, .seed = 1};
  StudentModel student(sc);
  const std::uint32_t classes[] = {0, 1, 2};
  student.expand_classifier(classes);
  MineDiscriminator mine(MineConfig{.student_dims = {2, 3, 3}, .teacher_dims = {2, 2, 2}, .d_common = 3, .channels = 2, .clamp = 20, .seed = 2});
  AlphaNet alpha(AlphaConfig{.student_dim = 4, .teacher_dim = 3, .hidden = {4, 4}, .seed = 3});
  jitter_biases(student.parameters(), rng);
  jitter_biases(mine.parameters(), rng);
  jitter_biases(alpha.parameters(), rng);

  const std::size_t batch = 4;
  const Tensor x = randn({batch, 8, 8, 1}, rng);
  const std::vector<Tensor> teacher{randn({batch, 2}, rng), randn({batch, 2}, rng), randn({batch, 2}, rng)};
  const Tensor t_embed = randn({batch, 3}, rng);
  Tensor p_bg({batch, 3});
  {
    NoGradGuard g;
    p_bg = ops::stable_softmax(constant(randn({batch, 3}, rng))).value();
  }
  const std::size_t targets[] = {0, 2, 1, 2};

  std::vector<Parameter*> all = student.parameters();
  for (auto* p : mine.parameters()) all.push_back(p);
  for (auto* p : alpha.parameters()) all.push_back(p);
  const auto leaves = leaves_of(all);
  auto bet = [&] { return bet_loss(student.forward(constant(x)), teacher, mine, 5); };
  auto decision = [&] {
    const auto out = student.forward(constant(x));
    return decision_loss(fuse(alpha.forward(out.embedding, constant(t_embed)), out.probabilities(), constant(p_bg)), targets);
  };
  auto total = [&] {
    const auto out = student.forward(constant(x));
    Var d = decision_loss(fuse(alpha.forward(out.embedding, constant(t_embed)), out.probabilities(), constant(p_bg)), targets);
    return ops::add(d, ops::scale(bet_loss(out, teacher, mine, 5), 0.7));
  };
  // Composed losses use a wider finite-difference step.
  const double composed_eps = 1e-5;
  errs["bet_loss"] = grad_check(bet, leaves, composed_eps);
  errs["decision_loss"] = grad_check(decision, leaves, composed_eps);
  errs["L_total"] = grad_check(total, leaves, composed_eps);

  double worst = 0;
  std::string worst_name;
  for (const auto& [k, v] : errs) {
    if (v >= worst) worst = v, worst_name = k;
  }
  const double secs = seconds_since(t0);
  report("gradient-integrity", worst < 1e-4 && secs < 120,
         std::to_string(errs.size()) + " checks, max rel err " + fmt("%.2e", worst) + " (" + worst_name + "), " +
             fmt("%.1f s", secs));
}

void mi_oracle() {
  const auto t0 = Clock::now();
  const double rho = 0.9;
  const double analytic = -0.5 * std::log(1.0 - rho * rho);
  testing::GaussianMiRun run;
  run.rho = rho;
  run.steps = 3000;
  const double correlated = testing::train_gaussian_mi(run);
  run.rho = 0.0;
  const double independent = testing::train_gaussian_mi(run);
  const double secs = seconds_since(t0);
  report("mi-oracle", std::abs(correlated - analytic) <= 0.1 && independent < 0.05 && secs < 300,
         fmt("rho=0.9: %.4f vs analytic %.4f; independent: %.4f nats; %.1f s", correlated, analytic, independent, secs));
}

void fusion_contracts() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;

  std::mt19937_64 rng(77);
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto simplex = [&](std::size_t n) {
    std::vector<double> p(n);
    double s = 0;
    for (auto& v : p) s += (v = e(rng));
    for (auto& v : p) v /= s;
    return p;
  };
  std::size_t violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 2 + trial % 20;
    const auto a = simplex(n), b = simplex(n);
    const double alpha = u(rng);
    if (fuse(1.0, a, b) != a || fuse(0.0, a, b) != b) ++violations;
    const auto p = fuse(alpha, a, b);
    const auto f = fuse(alpha, a, a);
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] < std::min(a[i], b[i]) - 1e-16 || p[i] > std::max(a[i], b[i]) + 1e-16) ++violations;
      if (std::abs(f[i] - a[i]) > 1e-15) ++violations;
    }
  }
  ok &= violations == 0;
  detail += std::to_string(violations) + " violations in 10000 trials";

  // Endpoint accuracies on a trained desk state, against independent argmax oracles.
  auto desk = testing::make_desk(2, 2.0, 0.6);
  desk.cfg.train.epochs_base = 20;
  const auto stream = build_sessions(desk.dataset.index, desk.cfg.split);
  const TeacherView view{&desk.bundle, VocabularyMap(desk.dataset.index.class_names, desk.bundle.class_names)};
  TrainState s = make_state(desk.cfg, desk.dataset, &desk.bundle);
  s.student.expand_classifier(stream.sessions[0].classes);
  run_session(s, 1, stream.sessions[0], desk.dataset, view, desk.cfg.train);
  s.student.expand_classifier(stream.sessions[1].classes);
  const auto seen = s.student.class_ids();

  std::size_t teacher_hits = 0, student_hits = 0, n = 0;
  {
    NoGradGuard g;
    for (std::uint64_t id : stream.test) {
      const std::uint32_t label = desk.dataset.index.samples[id].label;
      if (std::find(seen.begin(), seen.end(), label) == seen.end()) continue;
      ++n;
      const TeacherRecord& r = desk.bundle.record(id);
      std::size_t best = 0;
      for (std::size_t i = 1; i < seen.size(); ++i) {
        if (r.vocab_scores[view.vocab.vocab_index(seen[i])] > r.vocab_scores[view.vocab.vocab_index(seen[best])]) best = i;
      }
      teacher_hits += seen[best] == label;
      const std::uint64_t one[] = {id};
      const Tensor logits = s.student.forward(constant(desk.dataset.batch(one))).logits.value();
      std::size_t sb = 0;
      for (std::size_t i = 1; i < seen.size(); ++i) {
        if (logits[i] > logits[sb]) sb = i;
      }
      student_hits += seen[sb] == label;
    }
  }
  const double teacher_acc = 100.0 * teacher_hits / n, student_acc = 100.0 * student_hits / n;
  const auto at0 = evaluate(s, desk.dataset, stream.test, seen, view, {.forced_alpha = 0.0});
  const auto at1 = evaluate(s, desk.dataset, stream.test, seen, view, {.forced_alpha = 1.0});
  ok &= at0.accuracy == teacher_acc && at1.accuracy == student_acc;
  detail += fmt("; alpha=0: %.2f vs teacher %.2f; alpha=1: %.2f vs student %.2f", at0.accuracy, teacher_acc,
                at1.accuracy, student_acc);
  detail += fmt("; %.1f s", seconds_since(t0));
  report("fusion-contracts", ok, detail);
}

void metric_arithmetic() {
  const double acc[] = {81.64, 79.45, 77.29, 72.85, 73.54, 71.86, 71.83, 70.16, 69.55, 68.93, 69.34};
  const auto m = compute_metrics(acc, 63.81);
  const std::string avg = format_fixed(m.avg, 2), kr = format_fixed(m.kr, 2), df = format_fixed(*m.delta_final, 2);
  report("metric-arithmetic", avg == "73.31" && kr == "84.93" && df == "5.53",
         "avg " + avg + ", kr " + kr + ", delta_final " + df);
}

void protocol_invariants() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4242);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  std::size_t bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t classes = pick(2, 60), train = pick(1, 10), test = pick(1, 3);
    const std::size_t base = pick(1, classes), way = pick(1, 6), shot = pick(1, train);
    const std::size_t inc = pick(0, (classes - base) / way);
    const DatasetIndex idx = testing::label_index(classes, train, test);
    const SessionStream s = build_sessions(idx, {base, way, shot, inc, rng()});
    std::set<std::uint32_t> all;
    for (std::size_t t = 0; t < s.num_sessions(); ++t) {
      const Session& ses = s.sessions[t];
      for (std::uint32_t c : ses.classes) bad += !all.insert(c).second;
      std::map<std::uint32_t, std::size_t> per;
      for (std::uint64_t id : ses.train) ++per[idx.samples[id].label];
      for (std::uint32_t c : ses.classes) bad += per[c] != (t == 0 ? train : shot);
      if (t > 0) bad += ses.train.size() != way * shot;

      // Seen-class-only evaluation: perfect predictions over the seen subset
      // count exactly the test samples whose label is seen.
      const auto seen = s.seen_classes(t + 1);
      std::vector<std::uint32_t> labels;
      std::vector<std::size_t> preds;
      std::map<std::uint32_t, std::size_t> pos;
      for (std::size_t i = 0; i < seen.size(); ++i) pos[seen[i]] = i;
      std::size_t eligible = 0;
      for (std::uint64_t id : s.test) {
        const std::uint32_t l = idx.samples[id].label;
        labels.push_back(l);
        preds.push_back(pos.count(l) ? pos[l] : 0);
        eligible += pos.count(l);
      }
      const auto r = score_predictions(labels, preds, seen);
      bad += r.total != eligible || r.total != seen.size() * test || r.accuracy != 100.0;
    }
    for (std::uint64_t id : s.test) bad += !all.count(idx.samples[id].label);
  }
  const auto wide = build_sessions(testing::label_index(200, 30, 5), {100, 10, 5, 10, 1});
  bool wide_ok = wide.num_sessions() == 11;
  for (std::size_t t = 1; t < wide.num_sessions(); ++t) wide_ok &= wide.sessions[t].train.size() == 50;
  report("protocol-invariants", bad == 0 && wide_ok,
         std::to_string(bad) + " violations over 1000 configs; 200-class 10-way T=" + std::to_string(wide.num_sessions()) +
             (wide_ok ? " with 50 samples per incremental session" : " (unexpected)") + fmt("; %.1f s", seconds_since(t0)));
}

// Writes a desk dataset, teacher and configs through the CLI.
struct DeskFiles {
  fs::path root;
  DeskFiles() : root(fs::absolute("acceptance_desk")) {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ostringstream sink;
    cli::Streams io{sink, sink, true};
    cli::GenBlobsOptions blobs;
    blobs.out = (root / "blobs").string();
    blobs.classes = 10;
    blobs.noise = 2.0;
    blobs.seed = 1;
    if (cli::cmd_gen_blobs(blobs, io) != 0) throw std::runtime_error("gen-blobs failed: " + sink.str());
    cli::GenTeacherOptions t;
    t.dataset = blobs.out;
    t.quality = 0.9;
    t.seed = 1;
    t.out = (root / "teacher.bftb").string();
    t.scale_dims = "8,8,8";
    t.embed_dim = 8;
    if (cli::cmd_gen_teacher(t, io) != 0) throw std::runtime_error("gen-teacher failed: " + sink.str());
  }
  std::string config(const std::string& name, bool bet, bool iad) const {
    const fs::path p = root / (name + ".cfg");
    std::string text = "dataset = " + (root / "blobs").string() + "\n" + "bundle = " + (root / "teacher.bftb").string() +
                       "\n" + "out = " + (root / name).string() + "\n" +
                       "seed = 11\n"
                       "base_classes = 4\nn_way = 2\nk_shot = 5\nn_incremental = 3\n"
                       "student.channels = 8,16,16\nstudent.embed_dim = 16\n"
                       "mine.d_common = 16\nmine.channels = 4\nalpha.hidden = 32,16\n"
                       "train.epochs_base = 60\ntrain.epochs_incremental = 10\n";
    text += std::string("enable_bet = ") + (bet ? "true" : "false") + "\n";
    text += std::string("enable_iad = ") + (iad ? "true" : "false") + "\n";
    io::write_file(p.string(), text);
    return p.string();
  }
  std::string run(const std::string& name, bool bet, bool iad) const {
    std::ostringstream sink;
    if (cli::cmd_run(config(name, bet, iad), {}, {sink, sink, true}) != 0) {
      throw std::runtime_error("run " + name + " failed: " + sink.str());
    }
    return io::read_file((root / name / "metrics.csv").string());
  }
};

double final_acc(const std::string& metrics_csv) {
  const auto last_line = metrics_csv.substr(metrics_csv.rfind('\n', metrics_csv.size() - 2) + 1);
  const auto a = last_line.find(','), b = last_line.find(',', a + 1);
  return std::stod(last_line.substr(a + 1, b - a - 1));
}

void end_to_end(const DeskFiles& desk) {
  const auto t0 = Clock::now();
  const std::string full = desk.run("full", true, true);
  const double full_secs = seconds_since(t0);
  const std::string repeat = desk.run("full_repeat", true, true);
  const std::string baseline = desk.run("baseline", false, false);
  const double f = final_acc(full), b = final_acc(baseline);
  report("end-to-end-desk", full_secs < 300 && f >= b && full == repeat,
         fmt("run %.1f s; final acc BET+IAD %.2f vs baseline %.2f; ", full_secs, f, b) +
             (full == repeat ? "metrics.csv byte-identical" : "metrics.csv differs between identical runs"));
}

void ablation_switches(const DeskFiles& desk) {
  bool ok = true;
  std::string detail;

  // enable_bet=false: logged bet term exactly 0 on every step.
  desk.run("no_bet", false, true);
  const std::string losses = io::read_file((desk.root / "no_bet" / "losses.csv").string());
  std::istringstream in(losses);
  std::string line;
  std::getline(in, line);
  std::size_t steps = 0, nonzero = 0;
  while (std::getline(in, line)) {
    ++steps;
    if (line.substr(line.rfind(',') + 1) != "0") ++nonzero;
  }
  ok &= steps > 0 && nonzero == 0;
  detail += std::to_string(steps) + " steps with bet=0 (" + std::to_string(nonzero) + " nonzero)";

  // enable_iad=false: decisions are the student's alone (alpha == 1) in training and evaluation.
  auto d = testing::make_desk(8);
  d.cfg.train.enable_iad = false;
  d.cfg.train.enable_bet = false;
  d.cfg.train.epochs_base = 1;
  d.cfg.train.batch_size = 1000;
  const auto stream = build_sessions(d.dataset.index, d.cfg.split);
  const TeacherView view{&d.bundle, VocabularyMap(d.dataset.index.class_names, d.bundle.class_names)};
  TrainState s = make_state(d.cfg, d.dataset, &d.bundle);
  s.student.expand_classifier(stream.sessions[0].classes);
  double student_ce = 0;
  {
    NoGradGuard g;
    const auto& ids = stream.sessions[0].train;
    const Tensor p = s.student.forward(constant(d.dataset.batch(ids))).probabilities().value();
    const auto& seen = s.student.class_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto row = std::find(seen.begin(), seen.end(), d.dataset.index.samples[ids[i]].label) - seen.begin();
      student_ce -= std::log(std::max(p[i * seen.size() + row], kProbabilityFloor));
    }
    student_ce /= static_cast<double>(ids.size());
  }
  std::vector<Tensor> alpha_before;
  for (auto* p : s.alpha.parameters()) alpha_before.push_back(p->tensor());
  const auto log = run_session(s, 1, stream.sessions[0], d.dataset, view, d.cfg.train);
  bool alpha_frozen = true;
  auto ap = s.alpha.parameters();
  for (std::size_t i = 0; i < ap.size(); ++i) alpha_frozen &= ap[i]->tensor().data == alpha_before[i].data;
  const auto seen = s.student.class_ids();
  const auto off = evaluate(s, d.dataset, stream.test, seen, view, {.enable_iad = false});
  const auto one = evaluate(s, d.dataset, stream.test, seen, view, {.forced_alpha = 1.0});
  const bool same_eval = off.confusion == one.confusion;
  const double rel = std::abs(log.at(0).decision - student_ce) / student_ce;
  ok &= rel < 1e-12 && alpha_frozen && same_eval;
  detail += fmt("; iad off: decision loss %.6f vs student CE %.6f", log.at(0).decision, student_ce);
  detail += std::string(", alpha-net ") + (alpha_frozen ? "untouched" : "changed") + ", eval " +
            (same_eval ? "== alpha 1" : "!= alpha 1");
  report("ablation-switches", ok, detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite (kernels: %s)\n", kernels::openmp_enabled() ? "openmp" : "serial");
  auto guarded = [](const char* name, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(name, false, std::string("exception: ") + e.what());
    }
  };
  guarded("gradient-integrity", gradient_integrity);
  guarded("mi-oracle", mi_oracle);
  guarded("fusion-contracts", fusion_contracts);
  guarded("metric-arithmetic", metric_arithmetic);
  guarded("protocol-invariants", protocol_invariants);
  try {
    const DeskFiles desk;
    guarded("end-to-end-desk", [&] { end_to_end(desk); });
    guarded("ablation-switches", [&] { ablation_switches(desk); });
  } catch (const std::exception& e) {
    report("end-to-end-desk", false, e.what());
    report("ablation-switches", false, e.what());
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
