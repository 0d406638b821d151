#include "hermifp/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hermifp {

namespace {
constexpr double kPruneTol = 0.0;  // exact zero pruning only

long long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}
}  // namespace

Polynomial Polynomial::constant(int dims, double c) {
  Polynomial p(dims);
  p.add_term({0, 0, 0}, c);
  return p;
}

Polynomial Polynomial::monomial(int dims, int dim, int power, double c) {
  Polynomial p(dims);
  MultiIndex e = {0, 0, 0};
  e[dim] = power;
  p.add_term(e, c);
  return p;
}

Polynomial Polynomial::from_coeffs(int dims, int dim,
                                   std::span<const double> coeffs) {
  Polynomial p(dims);
  for (int k = 0; k < static_cast<int>(coeffs.size()); ++k) {
    MultiIndex e = {0, 0, 0};
    e[dim] = k;
    p.add_term(e, coeffs[k]);
  }
  return p;
}

void Polynomial::add_term(const MultiIndex& exponents, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(exponents, c);
  if (!inserted) {
    it->second += c;
    if (std::abs(it->second) <= kPruneTol) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  return *this;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  r += o;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  Polynomial r = *this;
  r -= o;
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r(dims_);
  for (const auto& [ea, ca] : terms_)
    for (const auto& [eb, cb] : o.terms_) {
      MultiIndex e = {ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]};
      r.add_term(e, ca * cb);
    }
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(dims_);
  if (s == 0.0) return r;
  for (const auto& [e, c] : terms_) r.add_term(e, c * s);
  return r;
}

Polynomial Polynomial::derivative(int dim) const {
  Polynomial r(dims_);
  for (const auto& [e, c] : terms_) {
    if (e[dim] == 0) continue;
    MultiIndex d = e;
    --d[dim];
    r.add_term(d, c * e[dim]);
  }
  return r;
}

double Polynomial::eval(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double t = c;
    for (int k = 0; k < dims_; ++k)
      for (int i = 0; i < e[k]; ++i) t *= x[k];
    sum += t;
  }
  return sum;
}

int Polynomial::degree(int dim) const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, e[dim]);
  return d;
}

int Polynomial::total_degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2]);
  return d;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  const char* names[] = {"x", "y", "z"};
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c;
    for (int k = 0; k < dims_; ++k)
      if (e[k] > 0) {
        os << "*" << names[k];
        if (e[k] > 1) os << "^" << e[k];
      }
  }
  return os.str();
}

double poly_eval(std::span<const double> coeffs, double x) {
  double v = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
  return v;
}

std::vector<double> poly_derivative(std::span<const double> coeffs) {
  std::vector<double> d;
  for (int k = 1; k < static_cast<int>(coeffs.size()); ++k)
    d.push_back(k * coeffs[k]);
  return d;
}

int poly_degree(std::span<const double> coeffs) {
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k)
    if (coeffs[k] != 0.0) return k;
  return 0;
}

// ---------------------------------------------------------------------------
// DiffOp

DiffOp DiffOp::multiply(const Polynomial& f) {
  DiffOp op(f.dims());
  op.add_term(f, {0, 0, 0});
  return op;
}

DiffOp DiffOp::partial(int dims, int dim, int order) {
  DiffOp op(dims);
  MultiIndex a = {0, 0, 0};
  a[dim] = order;
  op.add_term(Polynomial::constant(dims, 1.0), a);
  return op;
}

DiffOp DiffOp::divergence_of(int dims, int dim, const Polynomial& f) {
  DiffOp op(dims);
  MultiIndex a = {0, 0, 0};
  a[dim] = 1;
  op.add_term(f, a);
  op.add_term(f.derivative(dim), {0, 0, 0});
  return op;
}

void DiffOp::add_term(Polynomial coeff, const MultiIndex& order) {
  if (coeff.is_zero()) return;
  for (auto& t : terms_)
    if (t.order == order) {
      t.coeff += coeff;
      canonicalize();
      return;
    }
  terms_.push_back(Term{std::move(coeff), order});
}

void DiffOp::canonicalize() {
  terms_.erase(std::remove_if(terms_.begin(), terms_.end(),
                              [](const Term& t) { return t.coeff.is_zero(); }),
               terms_.end());
}

DiffOp& DiffOp::operator+=(const DiffOp& o) {
  for (const auto& t : o.terms_) add_term(t.coeff, t.order);
  return *this;
}

DiffOp DiffOp::operator+(const DiffOp& o) const {
  DiffOp r = *this;
  r += o;
  return r;
}

DiffOp DiffOp::operator*(double s) const {
  DiffOp r(dims_);
  if (s == 0.0) return r;
  for (const auto& t : terms_) r.add_term(t.coeff * s, t.order);
  return r;
}

DiffOp DiffOp::compose(const DiffOp& other) const {
  // (f d^a)(g d^b) u = f d^a (g d^b u)
  //   = sum_{c <= a} prod_k C(a_k, c_k) f (d^{a-c} g) d^{c+b} u  (Leibniz).
  DiffOp r(dims_);
  for (const auto& ta : terms_) {
    for (const auto& tb : other.terms_) {
      MultiIndex c = {0, 0, 0};
      // Enumerate c with 0 <= c_k <= a_k via an odometer.
      while (true) {
        Polynomial g = tb.coeff;
        long long mult = 1;
        for (int k = 0; k < dims_; ++k) {
          mult *= binom(ta.order[k], c[k]);
          for (int i = 0; i < ta.order[k] - c[k]; ++i) g = g.derivative(k);
        }
        if (mult != 0 && !g.is_zero()) {
          MultiIndex ord = {c[0] + tb.order[0], c[1] + tb.order[1],
                            c[2] + tb.order[2]};
          r.add_term(ta.coeff * g * static_cast<double>(mult), ord);
        }
        int k = 0;
        for (; k < dims_; ++k) {
          if (c[k] < ta.order[k]) {
            ++c[k];
            std::fill(c.begin(), c.begin() + k, 0);
            break;
          }
        }
        if (k == dims_) break;
      }
    }
  }
  return r;
}

DiffOp DiffOp::conjugate_by_exp(const Polynomial& phi) const {
  // exp(+phi) f d^a exp(-phi .) = f * prod_k (d_k - phi_k)^{a_k},
  // where phi_k = d phi / d x_k.  Factors for distinct k commute because
  // mixed partials of phi agree.
  std::array<DiffOp, kMaxDims> shifted;
  for (int k = 0; k < dims_; ++k) {
    shifted[k] = DiffOp::partial(dims_, k, 1);
    shifted[k].add_term(phi.derivative(k) * -1.0, {0, 0, 0});
  }
  DiffOp r(dims_);
  for (const auto& t : terms_) {
    DiffOp acc = DiffOp::multiply(t.coeff);
    for (int k = 0; k < dims_; ++k)
      for (int i = 0; i < t.order[k]; ++i) acc = acc.compose(shifted[k]);
    r += acc;
  }
  return r;
}

Polynomial DiffOp::apply(const Polynomial& p) const {
  Polynomial out(dims_);
  for (const auto& t : terms_) {
    Polynomial q = p;
    for (int k = 0; k < dims_; ++k)
      for (int i = 0; i < t.order[k]; ++i) q = q.derivative(k);
    out += t.coeff * q;
  }
  return out;
}

std::array<int, kMaxDims> DiffOp::reach() const {
  std::array<int, kMaxDims> r = {0, 0, 0};
  for (const auto& t : terms_)
    for (int k = 0; k < dims_; ++k)
      r[k] = std::max(r[k], t.coeff.degree(k) + t.order[k]);
  return r;
}

std::string DiffOp::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  const char* names[] = {"x", "y", "z"};
  bool first = true;
  for (const auto& t : terms_) {
    if (!first) os << "  +  ";
    first = false;
    os << "(" << t.coeff.to_string() << ")";
    for (int k = 0; k < dims_; ++k)
      if (t.order[k] > 0) {
        os << " d" << names[k];
        if (t.order[k] > 1) os << "^" << t.order[k];
      }
  }
  return os.str();
}

}  // namespace hermifp
