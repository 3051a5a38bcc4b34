#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace reconet {

template <typename Scalar>
using VectorX = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;

// Extents of a dense C x H x W tensor.
struct Shape3 {
  int channels = 1;
  int height = 1;
  int width = 1;

  Shape3() = default;
  Shape3(int c, int h, int w) : channels(c), height(h), width(w) { validate(); }

  void validate() const {
    if (channels < 1 || height < 1 || width < 1)
      throw std::invalid_argument("Shape3: all extents must be >= 1, got " + to_string());
    const auto max_elems =
        static_cast<std::uint64_t>(std::numeric_limits<std::ptrdiff_t>::max() / sizeof(double));
    const std::uint64_t n = static_cast<std::uint64_t>(channels) *
                            static_cast<std::uint64_t>(height) *
                            static_cast<std::uint64_t>(width);
    if (n > max_elems)
      throw std::invalid_argument("Shape3: element count overflows addressable size");
  }

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(channels) * height * width;
  }

  Eigen::Index plane() const { return static_cast<Eigen::Index>(height) * width; }

  bool operator==(const Shape3& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  bool operator!=(const Shape3& o) const { return !(*this == o); }

  std::string to_string() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
  }
};

// Dense rank-3 tensor of 64-bit reals (or any scalar), flat layout
// index(c,h,w) = (c*H + h)*W + w.
template <typename Scalar>
class Tensor3 {
 public:
  Tensor3() = default;

  explicit Tensor3(const Shape3& shape) : shape_(shape) {
    shape_.validate();
    data_ = ArrayX<Scalar>::Zero(shape_.size());
  }

  static Tensor3 zero(const Shape3& shape) { return Tensor3(shape); }

  static Tensor3 constant(const Shape3& shape, Scalar value) {
    Tensor3 t(shape);
    t.data_.setConstant(value);
    return t;
  }

  const Shape3& shape() const { return shape_; }
  Eigen::Index size() const { return data_.size(); }

  Eigen::Index index(int c, int h, int w) const {
    return (static_cast<Eigen::Index>(c) * shape_.height + h) * shape_.width + w;
  }

  Scalar& operator()(int c, int h, int w) { return data_[index(c, h, w)]; }
  Scalar operator()(int c, int h, int w) const { return data_[index(c, h, w)]; }

  ArrayX<Scalar>& data() { return data_; }
  const ArrayX<Scalar>& data() const { return data_; }

  bool all_finite() const { return data_.isFinite().all(); }

  template <typename Other>
  Tensor3<Other> cast() const {
    Tensor3<Other> out(shape_);
    out.data() = data_.template cast<Other>();
    return out;
  }

 private:
  Shape3 shape_{};
  ArrayX<Scalar> data_ = ArrayX<Scalar>::Zero(1);
};

using Tensor3d = Tensor3<double>;
using Tensor3f = Tensor3<float>;

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline VectorXd affine_matvec(const MatrixXd& w, const VectorXd& v, const VectorXd& b) {
  return w * v + b;
}

// out[n] = sum_c w[c] * m(c,n) + b
inline VectorXd collapse_affine(const MatrixXd& m, const VectorXd& w, double b) {
  VectorXd out = m.transpose() * w;
  out.array() += b;
  return out;
}

}  // namespace detail

// T[c,h,w] = vc[c] * (vh[h] * vw[w]). The spatial plane vh[h]*vw[w] is formed
// first and then scaled per channel; every consumer that needs bit-exact
// agreement (separable spatial maps, the triple-loop oracle) uses the same
// association.
template <typename Scalar>
Tensor3<Scalar> outer3(const VectorX<Scalar>& vc, const VectorX<Scalar>& vh,
                       const VectorX<Scalar>& vw) {
  detail::require(vc.size() > 0 && vh.size() > 0 && vw.size() > 0,
                  "outer3: vectors must be non-empty");
  Shape3 shape(static_cast<int>(vc.size()), static_cast<int>(vh.size()),
               static_cast<int>(vw.size()));
  Tensor3<Scalar> t(shape);
  ArrayX<Scalar> plane(shape.plane());
  Eigen::Index p = 0;
  for (int h = 0; h < shape.height; ++h) {
    const Scalar fh = vh[h];
    for (int w = 0; w < shape.width; ++w) plane[p++] = fh * vw[w];
  }
  Eigen::Index out = 0;
  for (int c = 0; c < shape.channels; ++c) {
    const Scalar fc = vc[c];
    for (Eigen::Index i = 0; i < plane.size(); ++i) t.data()[out++] = fc * plane[i];
  }
  return t;
}

template <typename Scalar>
Tensor3<Scalar> hadamard(const Tensor3<Scalar>& a, const Tensor3<Scalar>& x) {
  detail::require(a.shape() == x.shape(), "hadamard: shape mismatch " + a.shape().to_string() +
                                              " vs " + x.shape().to_string());
  Tensor3<Scalar> out(a.shape());
  out.data() = a.data() * x.data();
  return out;
}

// acc' = acc + lambda * t in a single pass; lambda * t is never materialized.
template <typename Scalar>
Tensor3<Scalar> scaled_accumulate(Tensor3<Scalar> acc, Scalar lambda, const Tensor3<Scalar>& t) {
  detail::require(acc.shape() == t.shape(), "scaled_accumulate: shape mismatch " +
                                                acc.shape().to_string() + " vs " +
                                                t.shape().to_string());
  detail::require(std::isfinite(static_cast<double>(lambda)),
                  "scaled_accumulate: lambda must be finite");
  acc.data() += lambda * t.data();
  return acc;
}

// out[c] = mean over (h,w). Sums run sequentially in flat index order so a
// naive loop oracle reproduces them bit for bit.
template <typename Scalar>
VectorX<Scalar> pool_spatial(const Tensor3<Scalar>& x) {
  const Shape3& s = x.shape();
  VectorX<Scalar> out(s.channels);
  const Scalar count = static_cast<Scalar>(s.plane());
  Eigen::Index i = 0;
  for (int c = 0; c < s.channels; ++c) {
    Scalar sum = 0;
    for (Eigen::Index p = 0; p < s.plane(); ++p) sum += x.data()[i++];
    out[c] = sum / count;
  }
  return out;
}

// C x H matrix of means along the width axis.
template <typename Scalar>
MatrixX<Scalar> pool_over_width(const Tensor3<Scalar>& x) {
  const Shape3& s = x.shape();
  MatrixX<Scalar> out(s.channels, s.height);
  const Scalar count = static_cast<Scalar>(s.width);
  for (int c = 0; c < s.channels; ++c) {
    for (int h = 0; h < s.height; ++h) {
      Scalar sum = 0;
      for (int w = 0; w < s.width; ++w) sum += x(c, h, w);
      out(c, h) = sum / count;
    }
  }
  return out;
}

// C x W matrix of means along the height axis.
template <typename Scalar>
MatrixX<Scalar> pool_over_height(const Tensor3<Scalar>& x) {
  const Shape3& s = x.shape();
  MatrixX<Scalar> out(s.channels, s.width);
  const Scalar count = static_cast<Scalar>(s.height);
  for (int c = 0; c < s.channels; ++c) {
    for (int w = 0; w < s.width; ++w) {
      Scalar sum = 0;
      for (int h = 0; h < s.height; ++h) sum += x(c, h, w);
      out(c, w) = sum / count;
    }
  }
  return out;
}

// 1/(1+exp(-x)) kept strictly inside (0,1): exp underflow would otherwise
// land exactly on the interval ends for |x| beyond ~745.
template <typename Scalar>
Scalar sigmoid(Scalar x) {
  Scalar s;
  if (x >= Scalar(0)) {
    s = Scalar(1) / (Scalar(1) + std::exp(-x));
  } else {
    const Scalar e = std::exp(x);
    s = e / (Scalar(1) + e);
  }
  if (s <= Scalar(0)) s = std::numeric_limits<Scalar>::denorm_min();
  if (s >= Scalar(1)) s = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / Scalar(2);
  return s;
}

template <typename Scalar>
Scalar sigmoid_derivative(Scalar x) {
  const Scalar s = sigmoid(x);
  return s * (Scalar(1) - s);
}

template <typename Scalar>
VectorX<Scalar> sigmoid_map(const VectorX<Scalar>& v) {
  VectorX<Scalar> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

template <typename Scalar>
Tensor3<Scalar> sigmoid_map(const Tensor3<Scalar>& t) {
  Tensor3<Scalar> out(t.shape());
  for (Eigen::Index i = 0; i < t.size(); ++i) out.data()[i] = sigmoid(t.data()[i]);
  return out;
}

// Mode-n unfolding. Rows index the mode-n axis; columns run over the two
// remaining axes in their original order, earlier axis slower.
//   mode 1: C x (H*W), column h*W + w
//   mode 2: H x (C*W), column c*W + w
//   mode 3: W x (C*H), column c*H + h
template <typename Scalar>
MatrixX<Scalar> matricize(const Tensor3<Scalar>& t, int mode) {
  const Shape3& s = t.shape();
  switch (mode) {
    case 1: {
      MatrixX<Scalar> m(s.channels, static_cast<Eigen::Index>(s.height) * s.width);
      for (int c = 0; c < s.channels; ++c)
        for (int h = 0; h < s.height; ++h)
          for (int w = 0; w < s.width; ++w)
            m(c, static_cast<Eigen::Index>(h) * s.width + w) = t(c, h, w);
      return m;
    }
    case 2: {
      MatrixX<Scalar> m(s.height, static_cast<Eigen::Index>(s.channels) * s.width);
      for (int c = 0; c < s.channels; ++c)
        for (int h = 0; h < s.height; ++h)
          for (int w = 0; w < s.width; ++w)
            m(h, static_cast<Eigen::Index>(c) * s.width + w) = t(c, h, w);
      return m;
    }
    case 3: {
      MatrixX<Scalar> m(s.width, static_cast<Eigen::Index>(s.channels) * s.height);
      for (int c = 0; c < s.channels; ++c)
        for (int h = 0; h < s.height; ++h)
          for (int w = 0; w < s.width; ++w)
            m(w, static_cast<Eigen::Index>(c) * s.height + h) = t(c, h, w);
      return m;
    }
    default:
      throw std::invalid_argument("matricize: mode must be 1, 2 or 3, got " +
                                  std::to_string(mode));
  }
}

// Largest |2x2 minor| of m, relative to the square of its largest entry.
// Zero for matrices of rank <= 1.
template <typename Scalar>
Scalar rank_one_defect(const MatrixX<Scalar>& m) {
  const Scalar max_entry = m.cwiseAbs().maxCoeff();
  if (max_entry == Scalar(0)) return Scalar(0);
  const Scalar denom = max_entry * max_entry;
  Scalar worst = 0;
  for (Eigen::Index r0 = 0; r0 < m.rows(); ++r0)
    for (Eigen::Index r1 = r0 + 1; r1 < m.rows(); ++r1)
      for (Eigen::Index c0 = 0; c0 < m.cols(); ++c0)
        for (Eigen::Index c1 = c0 + 1; c1 < m.cols(); ++c1) {
          const Scalar minor = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
          worst = std::max(worst, std::abs(minor));
        }
  return worst / denom;
}

// Max rank-one defect over all three matricizations.
template <typename Scalar>
Scalar rank_one_defect(const Tensor3<Scalar>& t) {
  Scalar worst = 0;
  for (int mode = 1; mode <= 3; ++mode)
    worst = std::max(worst, rank_one_defect(matricize(t, mode)));
  return worst;
}

}  // namespace reconet
