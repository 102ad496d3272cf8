#ifndef VECDGP_TRACE_IO_HPP
#define VECDGP_TRACE_IO_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "vecdgp/mcmc.hpp"

namespace vecdgp {

// Versioned binary trace container (little-endian, arrays row-major).
// Layout: magic, model shape, sampler config, normalization, raw data,
// per-layer plans, acceptance stats, loglik history, retained samples,
// resume state, RNG state. Rewriting an unchanged trace is byte-identical.
inline constexpr char kTraceMagic[8] = {'V', 'D', 'G', 'P', 'T', 'R', '0', '1'};

namespace detail {

struct BinWriter {
  std::ofstream out;
  explicit BinWriter(const std::string& path) : out(path, std::ios::binary) {
    if (!out) throw DataError("cannot open trace file for writing: " + path);
  }
  void raw(const void* p, std::size_t bytes) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
    if (!out) throw DataError("trace write failed");
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void ints(const std::vector<int>& v) {
    i64(static_cast<std::int64_t>(v.size()));
    for (int x : v) { std::int32_t w = x; raw(&w, 4); }
  }
  void vec(const Eigen::VectorXd& v) {
    i64(v.size());
    raw(v.data(), static_cast<std::size_t>(v.size()) * 8);
  }
  void mat_rowmajor(const Eigen::MatrixXd& m) {
    i64(m.rows());
    i64(m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
};

struct BinReader {
  std::ifstream in;
  explicit BinReader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw DataError("cannot open trace file: " + path);
  }
  void raw(void* p, std::size_t bytes) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
    if (!in) throw DataError("trace file truncated or unreadable");
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  std::int64_t i64() { std::int64_t v; raw(&v, 8); return v; }
  double f64() { double v; raw(&v, 8); return v; }
  std::vector<int> ints() {
    const std::int64_t k = i64();
    std::vector<int> v(static_cast<std::size_t>(k));
    for (auto& x : v) { std::int32_t w; raw(&w, 4); x = w; }
    return v;
  }
  Eigen::VectorXd vec() {
    const std::int64_t k = i64();
    Eigen::VectorXd v(k);
    raw(v.data(), static_cast<std::size_t>(k) * 8);
    return v;
  }
  Eigen::MatrixXd mat_rowmajor() {
    const std::int64_t r = i64(), c = i64();
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = f64();
    return m;
  }
};

inline void write_sample(BinWriter& w, const RetainedSample& s) {
  w.f64(s.theta_w);
  w.f64(s.tau2_hat);
  w.f64(s.g);
  w.i64(static_cast<std::int64_t>(s.theta_x.size()));
  for (const auto& th : s.theta_x) w.vec(th);
  for (const auto& W : s.W) w.mat_rowmajor(W);
}

inline RetainedSample read_sample(BinReader& r) {
  RetainedSample s;
  s.theta_w = r.f64();
  s.tau2_hat = r.f64();
  s.g = r.f64();
  const std::int64_t layers = r.i64();
  s.theta_x.resize(static_cast<std::size_t>(layers));
  for (auto& th : s.theta_x) th = r.vec();
  s.W.resize(static_cast<std::size_t>(layers));
  for (auto& W : s.W) W = r.mat_rowmajor();
  return s;
}

}  // namespace detail

inline void write_trace(const DgpTrace& trace, const std::string& path) {
  detail::BinWriter w(path);
  w.raw(kTraceMagic, 8);
  w.u32(static_cast<std::uint32_t>(trace.family));
  w.u32(static_cast<std::uint32_t>(trace.backend));
  w.i64(trace.n);
  w.i64(trace.d);
  w.i64(trace.p);
  w.i64(trace.depth);
  w.i64(trace.m);
  w.u64(trace.seed);
  w.i64(trace.total_iterations);

  const SamplerConfig& c = trace.config;
  w.i64(c.n_mcmc);
  w.i64(c.burn_in);
  w.i64(c.thin);
  w.u64(c.seed);
  w.f64(c.theta_prior_shape);
  w.f64(c.theta_prior_rate);
  w.f64(c.theta_min);
  w.f64(c.prop_lower);
  w.f64(c.prop_upper);
  w.u8(c.sample_g ? 1 : 0);
  w.f64(c.g);
  w.f64(c.g_prior_mean);
  w.i64(c.p);
  w.i64(c.depth);
  w.i64(c.m);
  w.u32(static_cast<std::uint32_t>(c.family));
  w.u32(static_cast<std::uint32_t>(c.backend));
  w.f64(c.theta_init_outer);
  w.f64(c.theta_init_inner);
  w.u8(c.normalize_inputs ? 1 : 0);
  w.u8(c.standardize_response ? 1 : 0);
  w.i64(c.max_ess_shrink);

  w.vec(trace.norm.x_min);
  w.vec(trace.norm.x_range);
  w.f64(trace.norm.y_mean);
  w.f64(trace.norm.y_sd);
  w.mat_rowmajor(trace.X_raw);
  w.vec(trace.Y_raw);

  w.i64(static_cast<std::int64_t>(trace.plans.size()));
  for (const auto& plan : trace.plans) {
    w.i64(plan.m);
    w.ints(plan.ordering);
    w.ints(plan.set_ptr);
    w.ints(plan.set_idx);
  }

  const AcceptStats& a = trace.accept;
  w.i64(static_cast<std::int64_t>(a.theta_x_prop.size()));
  for (std::size_t l = 0; l < a.theta_x_prop.size(); ++l) {
    w.i64(static_cast<std::int64_t>(a.theta_x_prop[l].size()));
    for (std::size_t k = 0; k < a.theta_x_prop[l].size(); ++k) {
      w.i64(a.theta_x_prop[l][k]);
      w.i64(a.theta_x_acc[l][k]);
    }
  }
  w.i64(a.theta_w_prop);
  w.i64(a.theta_w_acc);
  w.i64(a.g_prop);
  w.i64(a.g_acc);
  w.i64(a.ess_moves);
  w.i64(a.ess_evals);

  w.i64(static_cast<std::int64_t>(trace.loglik_history.size()));
  for (double v : trace.loglik_history) w.f64(v);

  w.i64(static_cast<std::int64_t>(trace.samples.size()));
  for (const auto& s : trace.samples) detail::write_sample(w, s);
  detail::write_sample(w, trace.final_state);
  for (std::uint64_t word : trace.rng_state) w.u64(word);
}

inline DgpTrace read_trace(const std::string& path) {
  detail::BinReader r(path);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kTraceMagic, 8) != 0)
    throw DataError("not a trace file (bad magic): " + path);

  DgpTrace t;
  t.family = static_cast<KernelFamily>(r.u32());
  t.backend = static_cast<Backend>(r.u32());
  t.n = static_cast<int>(r.i64());
  t.d = static_cast<int>(r.i64());
  t.p = static_cast<int>(r.i64());
  t.depth = static_cast<int>(r.i64());
  t.m = static_cast<int>(r.i64());
  t.seed = r.u64();
  t.total_iterations = r.i64();

  SamplerConfig& c = t.config;
  c.n_mcmc = static_cast<int>(r.i64());
  c.burn_in = static_cast<int>(r.i64());
  c.thin = static_cast<int>(r.i64());
  c.seed = r.u64();
  c.theta_prior_shape = r.f64();
  c.theta_prior_rate = r.f64();
  c.theta_min = r.f64();
  c.prop_lower = r.f64();
  c.prop_upper = r.f64();
  c.sample_g = r.u8() != 0;
  c.g = r.f64();
  c.g_prior_mean = r.f64();
  c.p = static_cast<int>(r.i64());
  c.depth = static_cast<int>(r.i64());
  c.m = static_cast<int>(r.i64());
  c.family = static_cast<KernelFamily>(r.u32());
  c.backend = static_cast<Backend>(r.u32());
  c.theta_init_outer = r.f64();
  c.theta_init_inner = r.f64();
  c.normalize_inputs = r.u8() != 0;
  c.standardize_response = r.u8() != 0;
  c.max_ess_shrink = static_cast<int>(r.i64());

  t.norm.x_min = r.vec();
  t.norm.x_range = r.vec();
  t.norm.y_mean = r.f64();
  t.norm.y_sd = r.f64();
  t.X_raw = r.mat_rowmajor();
  t.Y_raw = r.vec();

  const std::int64_t n_plans = r.i64();
  t.plans.resize(static_cast<std::size_t>(n_plans));
  for (auto& plan : t.plans) {
    plan.m = static_cast<int>(r.i64());
    plan.ordering = r.ints();
    plan.set_ptr = r.ints();
    plan.set_idx = r.ints();
  }

  AcceptStats& a = t.accept;
  const std::int64_t layers = r.i64();
  a.theta_x_prop.resize(static_cast<std::size_t>(layers));
  a.theta_x_acc.resize(static_cast<std::size_t>(layers));
  for (std::int64_t l = 0; l < layers; ++l) {
    const std::int64_t nodes = r.i64();
    a.theta_x_prop[l].resize(static_cast<std::size_t>(nodes));
    a.theta_x_acc[l].resize(static_cast<std::size_t>(nodes));
    for (std::int64_t k = 0; k < nodes; ++k) {
      a.theta_x_prop[l][k] = r.i64();
      a.theta_x_acc[l][k] = r.i64();
    }
  }
  a.theta_w_prop = r.i64();
  a.theta_w_acc = r.i64();
  a.g_prop = r.i64();
  a.g_acc = r.i64();
  a.ess_moves = r.i64();
  a.ess_evals = r.i64();

  const std::int64_t hist = r.i64();
  t.loglik_history.resize(static_cast<std::size_t>(hist));
  for (auto& v : t.loglik_history) v = r.f64();

  const std::int64_t T = r.i64();
  t.samples.resize(static_cast<std::size_t>(T));
  for (auto& s : t.samples) s = detail::read_sample(r);
  t.final_state = detail::read_sample(r);
  for (auto& word : t.rng_state) word = r.u64();

  t.refresh_derived();
  return t;
}

}  // namespace vecdgp

#endif  // VECDGP_TRACE_IO_HPP
