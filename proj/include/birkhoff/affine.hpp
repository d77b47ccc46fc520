#pragma once
// Affine maps p -> A p + b used as isometries of a chart, together with a
// tiny free-word algebra so group elements keep a human-readable provenance
// ("a^2 b^-1"). Composition and inversion are plain affine algebra; whether a
// given map actually preserves a metric is checked elsewhere (group.hpp).

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "chart.hpp"
#include "errors.hpp"

namespace birkhoff {

// Reduced word in named generators: list of (name, power), adjacent equal
// names merged, zero powers dropped. The empty word prints as "e".
class Word {
 public:
  Word() = default;
  static Word generator(std::string name, int power = 1) {
    Word w;
    if (power != 0) w.syllables_.push_back({std::move(name), power});
    return w;
  }

  Word operator*(const Word& rhs) const {
    Word out = *this;
    for (const auto& s : rhs.syllables_) out.push(s.first, s.second);
    return out;
  }

  Word inverse() const {
    Word out;
    for (auto it = syllables_.rbegin(); it != syllables_.rend(); ++it)
      out.push(it->first, -it->second);
    return out;
  }

  bool empty() const { return syllables_.empty(); }

  std::string str() const {
    if (syllables_.empty()) return "e";
    std::string out;
    for (const auto& [name, pow] : syllables_) {
      if (!out.empty()) out += ' ';
      out += name;
      if (pow != 1) out += '^' + std::to_string(pow);
    }
    return out;
  }

 private:
  void push(const std::string& name, int power) {
    if (power == 0) return;
    if (!syllables_.empty() && syllables_.back().first == name) {
      syllables_.back().second += power;
      if (syllables_.back().second == 0) syllables_.pop_back();
      return;
    }
    syllables_.push_back({name, power});
  }

  std::vector<std::pair<std::string, int>> syllables_;
};

struct AffineIsometry {
  Mat A;
  Vec b;
  Word word;

  static AffineIsometry identity(int dim) {
    return {Mat::Identity(dim, dim), Vec::Zero(dim), Word()};
  }

  static AffineIsometry translation(Vec shift, Word w = {}) {
    const int n = static_cast<int>(shift.size());
    return {Mat::Identity(n, n), std::move(shift), std::move(w)};
  }

  static AffineIsometry linear(Mat map, Word w = {}) {
    Vec zero = Vec::Zero(map.rows());
    return {std::move(map), std::move(zero), std::move(w)};
  }

  int dim() const { return static_cast<int>(b.size()); }

  bool is_identity(double tol = 1e-12) const {
    return (A - Mat::Identity(dim(), dim())).cwiseAbs().maxCoeff() <= tol &&
           b.cwiseAbs().maxCoeff() <= tol;
  }

  Vec apply(const Vec& p) const { return A * p + b; }
  ChartPoint apply(const ChartPoint& p) const { return {A * p.coords + b}; }

  // Pushforward: base moves by the map, components by its linear part.
  Tangent apply(const Tangent& t) const {
    return {{A * t.base.coords + b}, A * t.components};
  }

  // this o rhs : first rhs, then this.
  AffineIsometry compose(const AffineIsometry& rhs) const {
    return {A * rhs.A, A * rhs.b + b, word * rhs.word};
  }

  AffineIsometry inverse() const {
    Mat Ainv = A.inverse();
    return {Ainv, -(Ainv * b), word.inverse()};
  }

  AffineIsometry power(int k) const {
    AffineIsometry acc = identity(dim());
    AffineIsometry base = k >= 0 ? *this : inverse();
    for (int i = 0; i < std::abs(k); ++i) acc = acc.compose(base);
    return acc;
  }

  // Entrywise closeness of the maps (words are bookkeeping, not identity).
  bool approx_equal(const AffineIsometry& o, double tol) const {
    return (A - o.A).cwiseAbs().maxCoeff() <= tol &&
           (b - o.b).cwiseAbs().maxCoeff() <= tol;
  }
};

}  // namespace birkhoff
