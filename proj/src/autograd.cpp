#include "gmot/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "gmot/error.hpp"

namespace gmot {

namespace detail {

struct Node {
  int rows = 0, cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  std::uint64_t seq = 0;
  const char* op = "leaf";

  std::size_t size() const { return value.size(); }
  std::vector<double>& grad_ref() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

namespace {

std::atomic<std::uint64_t> g_seq{0};
thread_local bool g_grad_enabled = true;

std::shared_ptr<Node> make_node(int rows, int cols, const char* op) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  if (g_grad_enabled) n->grad.assign(n->value.size(), 0.0);
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  n->op = op;
  return n;
}

std::string shape_str(const Node& n) {
  return std::to_string(n.rows) + "x" + std::to_string(n.cols);
}

void require_same_shape(const char* op, const Node& a, const Node& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw Error(ErrorCode::InvalidArgument,
                std::string(op) + ": shape " + shape_str(a) + " vs " +
                    shape_str(b));
}

}  // namespace

}  // namespace detail

using detail::Node;

namespace {

Tensor wrap(std::shared_ptr<Node> n) {
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

Node& deref(const Tensor& t) {
  if (!t.node_)
    throw Error(ErrorCode::InvalidArgument, "operation on empty tensor");
  return *t.node_;
}

// Record parents and the reverse closure only while grad mode is on.
void attach(const std::shared_ptr<Node>& out,
            std::vector<std::shared_ptr<Node>> parents,
            std::function<void(Node&)> fn) {
  if (!detail::g_grad_enabled) return;
  out->parents = std::move(parents);
  out->backward_fn = std::move(fn);
}

}  // namespace

Tensor Tensor::constant(int rows, int cols, std::vector<double> values) {
  if (rows < 0 || cols < 0 ||
      values.size() != static_cast<std::size_t>(rows) * cols)
    throw Error(ErrorCode::InvalidArgument,
                "constant: value count does not match shape");
  auto n = detail::make_node(rows, cols, "constant");
  n->value = std::move(values);
  return wrap(n);
}

Tensor Tensor::zeros(int rows, int cols) {
  return wrap(detail::make_node(rows, cols, "zeros"));
}

Tensor Tensor::scalar(double v) { return constant(1, 1, {v}); }

Tensor Tensor::row(std::vector<double> values) {
  const int n = static_cast<int>(values.size());
  return constant(1, n, std::move(values));
}

int Tensor::rows() const { return deref(*this).rows; }
int Tensor::cols() const { return deref(*this).cols; }
std::size_t Tensor::size() const { return deref(*this).size(); }
const std::vector<double>& Tensor::values() const { return deref(*this).value; }
std::vector<double>& Tensor::values_mut() { return deref(*this).value; }
std::vector<double>& Tensor::grad() { return deref(*this).grad_ref(); }
const char* Tensor::op() const { return deref(*this).op; }

double Tensor::item() const {
  const Node& n = deref(*this);
  if (n.size() != 1)
    throw Error(ErrorCode::InvalidArgument,
                "item: tensor is " + detail::shape_str(n) + ", not 1x1");
  return n.value[0];
}

NoGradGuard::NoGradGuard() : prev_(detail::g_grad_enabled) {
  detail::g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { detail::g_grad_enabled = prev_; }

bool grad_enabled() { return detail::g_grad_enabled; }

Tensor add(const Tensor& a, const Tensor& b) {
  Node& na = deref(a);
  Node& nb = deref(b);
  detail::require_same_shape("add", na, nb);
  auto out = detail::make_node(na.rows, na.cols, "add");
  for (std::size_t i = 0; i < out->size(); ++i)
    out->value[i] = na.value[i] + nb.value[i];
  Node* pa = a.node_.get();
  Node* pb = b.node_.get();
  attach(out, {a.node_, b.node_}, [pa, pb](Node& self) {
    auto& ga = pa->grad_ref();
    auto& gb = pb->grad_ref();
    for (std::size_t i = 0; i < self.size(); ++i) {
      ga[i] += self.grad[i];
      gb[i] += self.grad[i];
    }
  });
  return wrap(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Node& na = deref(a);
  Node& nb = deref(b);
  detail::require_same_shape("sub", na, nb);
  auto out = detail::make_node(na.rows, na.cols, "sub");
  for (std::size_t i = 0; i < out->size(); ++i)
    out->value[i] = na.value[i] - nb.value[i];
  Node* pa = a.node_.get();
  Node* pb = b.node_.get();
  attach(out, {a.node_, b.node_}, [pa, pb](Node& self) {
    auto& ga = pa->grad_ref();
    auto& gb = pb->grad_ref();
    for (std::size_t i = 0; i < self.size(); ++i) {
      ga[i] += self.grad[i];
      gb[i] -= self.grad[i];
    }
  });
  return wrap(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Node& na = deref(a);
  Node& nb = deref(b);
  detail::require_same_shape("mul", na, nb);
  auto out = detail::make_node(na.rows, na.cols, "mul");
  for (std::size_t i = 0; i < out->size(); ++i)
    out->value[i] = na.value[i] * nb.value[i];
  Node* pa = a.node_.get();
  Node* pb = b.node_.get();
  attach(out, {a.node_, b.node_}, [pa, pb](Node& self) {
    auto& ga = pa->grad_ref();
    auto& gb = pb->grad_ref();
    for (std::size_t i = 0; i < self.size(); ++i) {
      ga[i] += self.grad[i] * pb->value[i];
      gb[i] += self.grad[i] * pa->value[i];
    }
  });
  return wrap(out);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  Node& na = deref(a);
  Node& nb = deref(b);
  if (na.cols != nb.rows)
    throw Error(ErrorCode::InvalidArgument,
                "matmul: shape " + detail::shape_str(na) + " vs " +
                    detail::shape_str(nb));
  const int m = na.rows, k = na.cols, n = nb.cols;
  auto out = detail::make_node(m, n, "matmul");
  for (int i = 0; i < m; ++i) {
    const double* arow = na.value.data() + static_cast<std::size_t>(i) * k;
    double* crow = out->value.data() + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = nb.value.data() + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  Node* pa = a.node_.get();
  Node* pb = b.node_.get();
  attach(out, {a.node_, b.node_}, [pa, pb, m, k, n](Node& self) {
    auto& ga = pa->grad_ref();
    auto& gb = pb->grad_ref();
    // dA += dC * B^T
    for (int i = 0; i < m; ++i) {
      const double* grow = self.grad.data() + static_cast<std::size_t>(i) * n;
      double* garow = ga.data() + static_cast<std::size_t>(i) * k;
      for (int p = 0; p < k; ++p) {
        const double* brow = pb->value.data() + static_cast<std::size_t>(p) * n;
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
        garow[p] += acc;
      }
    }
    // dB += A^T * dC
    for (int p = 0; p < k; ++p) {
      double* gbrow = gb.data() + static_cast<std::size_t>(p) * n;
      for (int i = 0; i < m; ++i) {
        const double av = pa->value[static_cast<std::size_t>(i) * k + p];
        if (av == 0.0) continue;
        const double* grow = self.grad.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
      }
    }
  });
  return wrap(out);
}

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& x, const char* name, Fwd fwd, Bwd bwd) {
  Node& nx = deref(x);
  auto out = detail::make_node(nx.rows, nx.cols, name);
  for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = fwd(nx.value[i]);
  Node* px = x.node_.get();
  attach(out, {x.node_}, [px, bwd](Node& self) {
    auto& gx = px->grad_ref();
    for (std::size_t i = 0; i < self.size(); ++i)
      gx[i] += self.grad[i] * bwd(px->value[i], self.value[i]);
  });
  return wrap(out);
}

}  // namespace

Tensor relu(const Tensor& x) {
  return unary_op(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, "sigmoid",
      [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor log(const Tensor& x) {
  for (double v : deref(x).value)
    if (!(v > 0.0))
      throw Error(ErrorCode::Numeric, "log: non-positive input " + std::to_string(v));
  return unary_op(
      x, "log", [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
  for (double v : deref(x).value)
    if (!(v > 0.0))
      throw Error(ErrorCode::Numeric, "sqrt: non-positive input " + std::to_string(v));
  return unary_op(
      x, "sqrt", [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Tensor abs(const Tensor& x) {
  return unary_op(
      x, "abs", [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

namespace {

Tensor reduce_op(const Tensor& x, const char* name, bool divide) {
  Node& nx = deref(x);
  auto out = detail::make_node(1, 1, name);
  double acc = 0.0;
  for (double v : nx.value) acc += v;
  const double denom = divide ? static_cast<double>(nx.size()) : 1.0;
  out->value[0] = acc / denom;
  Node* px = x.node_.get();
  attach(out, {x.node_}, [px, denom](Node& self) {
    auto& gx = px->grad_ref();
    const double g = self.grad[0] / denom;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
  return wrap(out);
}

}  // namespace

Tensor mean(const Tensor& x) {
  if (deref(x).size() == 0)
    throw Error(ErrorCode::InvalidArgument, "mean: empty tensor");
  return reduce_op(x, "mean", true);
}

Tensor sum(const Tensor& x) { return reduce_op(x, "sum", false); }

Tensor scale(const Tensor& x, double k) {
  return unary_op(
      x, "scale", [k](double v) { return k * v; },
      [k](double, double) { return k; });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty())
    throw Error(ErrorCode::InvalidArgument, "concat: no operands");
  const int rows = deref(parts[0]).rows;
  int total = 0;
  for (const Tensor& p : parts) {
    Node& np = deref(p);
    if (np.rows != rows)
      throw Error(ErrorCode::InvalidArgument,
                  "concat: shape " + detail::shape_str(deref(parts[0])) +
                      " vs " + detail::shape_str(np));
    total += np.cols;
  }
  auto out = detail::make_node(rows, total, "concat");
  int off = 0;
  for (const Tensor& p : parts) {
    Node& np = deref(p);
    for (int r = 0; r < rows; ++r)
      std::copy(np.value.begin() + static_cast<std::size_t>(r) * np.cols,
                np.value.begin() + static_cast<std::size_t>(r + 1) * np.cols,
                out->value.begin() + static_cast<std::size_t>(r) * total + off);
    off += np.cols;
  }
  std::vector<std::shared_ptr<Node>> parents;
  std::vector<Node*> raw;
  for (const Tensor& p : parts) {
    parents.push_back(p.node_);
    raw.push_back(p.node_.get());
  }
  attach(out, std::move(parents), [raw, rows, total](Node& self) {
    int off2 = 0;
    for (Node* pn : raw) {
      auto& gp = pn->grad_ref();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < pn->cols; ++c)
          gp[static_cast<std::size_t>(r) * pn->cols + c] +=
              self.grad[static_cast<std::size_t>(r) * total + off2 + c];
      off2 += pn->cols;
    }
  });
  return wrap(out);
}

Tensor add_rowvec(const Tensor& x, const Tensor& bias) {
  Node& nx = deref(x);
  Node& nb = deref(bias);
  if (nb.rows != 1 || nb.cols != nx.cols)
    throw Error(ErrorCode::InvalidArgument,
                "add_rowvec: shape " + detail::shape_str(nx) + " vs " +
                    detail::shape_str(nb));
  auto out = detail::make_node(nx.rows, nx.cols, "add_rowvec");
  for (int r = 0; r < nx.rows; ++r)
    for (int c = 0; c < nx.cols; ++c)
      out->value[static_cast<std::size_t>(r) * nx.cols + c] =
          nx.value[static_cast<std::size_t>(r) * nx.cols + c] + nb.value[static_cast<std::size_t>(c)];
  Node* px = x.node_.get();
  Node* pb = bias.node_.get();
  attach(out, {x.node_, bias.node_}, [px, pb](Node& self) {
    auto& gx = px->grad_ref();
    auto& gb = pb->grad_ref();
    for (int r = 0; r < self.rows; ++r)
      for (int c = 0; c < self.cols; ++c) {
        const double g = self.grad[static_cast<std::size_t>(r) * self.cols + c];
        gx[static_cast<std::size_t>(r) * self.cols + c] += g;
        gb[static_cast<std::size_t>(c)] += g;
      }
  });
  return wrap(out);
}

Tensor reshape(const Tensor& x, int rows, int cols) {
  Node& nx = deref(x);
  if (rows < 0 || cols < 0 ||
      static_cast<std::size_t>(rows) * cols != nx.size())
    throw Error(ErrorCode::InvalidArgument,
                "reshape: " + detail::shape_str(nx) + " to " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  auto out = detail::make_node(rows, cols, "reshape");
  out->value = nx.value;
  Node* px = x.node_.get();
  attach(out, {x.node_}, [px](Node& self) {
    auto& gx = px->grad_ref();
    for (std::size_t i = 0; i < self.size(); ++i) gx[i] += self.grad[i];
  });
  return wrap(out);
}

void backward(const Tensor& output) {
  Node& root = deref(output);
  if (root.size() != 1)
    throw Error(ErrorCode::InvalidArgument,
                "backward: output is " + detail::shape_str(root) +
                    ", expected a scalar");
  // Collect the reachable subgraph; creation order is a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{&root};
  seen.insert(&root);
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents)
      if (seen.insert(p.get()).second) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->seq > b->seq; });
  root.grad_ref()[0] += 1.0;
  for (Node* n : order)
    if (n->backward_fn) n->backward_fn(*n);
}

Tensor& ParamStore::add(const std::string& name, int rows, int cols) {
  if (params_.count(name))
    throw Error(ErrorCode::InvalidArgument, "duplicate parameter " + name);
  Entry e;
  e.t = Tensor::zeros(rows, cols);
  e.t.node_->op = "param";
  e.m.assign(e.t.size(), 0.0);
  e.v.assign(e.t.size(), 0.0);
  return params_.emplace(name, std::move(e)).first->second.t;
}

Tensor& ParamStore::add_glorot(const std::string& name, int rows, int cols,
                               Rng& rng) {
  Tensor& t = add(name, rows, cols);
  const double limit = std::sqrt(6.0 / (rows + cols));
  for (double& v : t.values_mut()) v = rng.uniform(-limit, limit);
  return t;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw Error(ErrorCode::InvalidArgument, "unknown parameter " + name);
  return it->second.t;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw Error(ErrorCode::InvalidArgument, "unknown parameter " + name);
  return it->second.t;
}

bool ParamStore::has(const std::string& name) const {
  return params_.count(name) != 0;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [k, v] : params_) out.push_back(k);
  return out;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [k, e] : params_) n += e.t.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [k, e] : params_) {
    auto& g = e.t.grad();
    std::fill(g.begin(), g.end(), 0.0);
  }
}

void ParamStore::adam_step(const AdamConfig& cfg) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (auto& [k, e] : params_) {
    auto& val = e.t.values_mut();
    auto& g = e.t.grad();
    for (std::size_t i = 0; i < val.size(); ++i) {
      e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * g[i];
      e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = e.m[i] / bc1;
      const double vhat = e.v[i] / bc2;
      val[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    std::fill(g.begin(), g.end(), 0.0);
  }
}

namespace {

void put_u32_le(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32_le(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw Error(ErrorCode::Io, path + ": truncated checkpoint");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64_le(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

double get_f64_le(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw Error(ErrorCode::Io, path + ": truncated checkpoint");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint " + path);
  out.write("GNNW", 4);
  put_u32_le(out, 1);  // format version
  put_u32_le(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& [name, e] : params_) {
    put_u32_le(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32_le(out, static_cast<std::uint32_t>(e.t.rows()));
    put_u32_le(out, static_cast<std::uint32_t>(e.t.cols()));
    for (double v : e.t.values()) put_f64_le(out, v);
  }
}

void ParamStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open checkpoint " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "GNNW", 4) != 0)
    throw Error(ErrorCode::Parse, path + ": bad magic, expected GNNW");
  const std::uint32_t version = get_u32_le(in, path);
  if (version != 1)
    throw Error(ErrorCode::Parse,
                path + ": unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = get_u32_le(in, path);
  params_.clear();
  step_ = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32_le(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len))
      throw Error(ErrorCode::Io, path + ": truncated checkpoint");
    const int rows = static_cast<int>(get_u32_le(in, path));
    const int cols = static_cast<int>(get_u32_le(in, path));
    Tensor& t = add(name, rows, cols);
    for (double& v : t.values_mut()) v = get_f64_le(in, path);
  }
}

GradCheckResult grad_check(ParamStore& store,
                           const std::function<Tensor()>& loss_fn,
                           double step) {
  store.zero_grads();
  Tensor loss = loss_fn();
  backward(loss);

  GradCheckResult res;
  for (const std::string& name : store.names()) {
    Tensor& p = store.get(name);
    const std::vector<double> analytic = p.grad();
    auto& vals = p.values_mut();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      double plus, minus;
      {
        NoGradGuard ng;
        vals[i] = saved + step;
        plus = loss_fn().item();
        vals[i] = saved - step;
        minus = loss_fn().item();
      }
      vals[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[i];
      const double rel =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_param = name;
        res.worst_index = static_cast<int>(i);
      }
    }
  }
  store.zero_grads();
  return res;
}

}  // namespace gmot
