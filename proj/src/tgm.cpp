#include "reconet/tgm.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "reconet/rng.hpp"

namespace reconet {

namespace {

void check_channels(const Tensor3d& x, const TgmRepetitionParams& p, const char* where) {
  detail::require(x.shape().channels == p.channels(),
                  std::string(where) + ": tensor has " + std::to_string(x.shape().channels) +
                      " channels, parameters expect " + std::to_string(p.channels()));
}

void put_f64le(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

double get_f64le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

void put_u32le(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

TgmParams init_tgm(int channels, int rank, std::uint64_t seed) {
  detail::require(channels >= 1, "init_tgm: channels must be >= 1");
  detail::require(rank >= 1, "init_tgm: rank must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  Rng rng(seed);
  TgmParams params;
  params.rank = rank;
  params.reps.resize(static_cast<std::size_t>(rank));
  for (auto& rep : params.reps) {
    rep.channel_weight = random_matrix(channels, channels, rng, -bound, bound);
    rep.channel_bias = VectorXd::Zero(channels);
    rep.height_weight = random_vector(channels, rng, -bound, bound);
    rep.height_bias = 0.0;
    rep.width_weight = random_vector(channels, rng, -bound, bound);
    rep.width_bias = 0.0;
  }
  params.lambda_raw = VectorXd::Zero(rank);
  return params;
}

std::size_t parameter_count(const TgmParams& p) {
  std::size_t n = static_cast<std::size_t>(p.lambda_raw.size());
  for (const auto& rep : p.reps) {
    const std::size_t c = static_cast<std::size_t>(rep.channels());
    n += c * c + c + (c + 1) + (c + 1);
  }
  return n;
}

VectorXd channel_fragment(const Tensor3d& x, const TgmRepetitionParams& p) {
  check_channels(x, p, "channel_fragment");
  return sigmoid_map(detail::affine_matvec(p.channel_weight, pool_spatial(x), p.channel_bias));
}

VectorXd height_fragment(const Tensor3d& x, const TgmRepetitionParams& p) {
  check_channels(x, p, "height_fragment");
  return sigmoid_map(detail::collapse_affine(pool_over_width(x), p.height_weight, p.height_bias));
}

VectorXd width_fragment(const Tensor3d& x, const TgmRepetitionParams& p) {
  check_channels(x, p, "width_fragment");
  return sigmoid_map(detail::collapse_affine(pool_over_height(x), p.width_weight, p.width_bias));
}

FragmentSet generate_fragments(const Tensor3d& x, const TgmParams& params) {
  detail::require(params.rank >= 1 &&
                      params.reps.size() == static_cast<std::size_t>(params.rank) &&
                      params.lambda_raw.size() == params.rank,
                  "generate_fragments: inconsistent TgmParams");
  FragmentSet set;
  set.triplets.reserve(params.reps.size());
  for (const auto& rep : params.reps) {
    FragmentTriplet t;
    t.vc = channel_fragment(x, rep);
    t.vh = height_fragment(x, rep);
    t.vw = width_fragment(x, rep);
    set.triplets.push_back(std::move(t));
  }
  set.lambdas = sigmoid_map(params.lambda_raw);
  return set;
}

void save_tgm(const std::string& path, const TgmParams& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_tgm: cannot open " + path);
  os.write("RCP1", 4);
  const int channels = p.channels();
  put_u32le(os, static_cast<std::uint32_t>(channels));
  put_u32le(os, static_cast<std::uint32_t>(p.rank));
  for (const auto& rep : p.reps) {
    for (int r = 0; r < channels; ++r)
      for (int c = 0; c < channels; ++c) put_f64le(os, rep.channel_weight(r, c));
    for (int c = 0; c < channels; ++c) put_f64le(os, rep.channel_bias[c]);
    for (int c = 0; c < channels; ++c) put_f64le(os, rep.height_weight[c]);
    put_f64le(os, rep.height_bias);
    for (int c = 0; c < channels; ++c) put_f64le(os, rep.width_weight[c]);
    put_f64le(os, rep.width_bias);
  }
  for (int i = 0; i < p.rank; ++i) put_f64le(os, p.lambda_raw[i]);
  if (!os) throw std::runtime_error("save_tgm: write failed for " + path);
}

TgmParams load_tgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_tgm: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "RCP1", 4) != 0)
    throw std::runtime_error("load_tgm: bad magic in " + path);
  const int channels = static_cast<int>(get_u32le(is));
  const int rank = static_cast<int>(get_u32le(is));
  if (!is || channels < 1 || rank < 1)
    throw std::runtime_error("load_tgm: bad header in " + path);
  TgmParams p;
  p.rank = rank;
  p.reps.resize(static_cast<std::size_t>(rank));
  for (auto& rep : p.reps) {
    rep.channel_weight = MatrixXd(channels, channels);
    for (int r = 0; r < channels; ++r)
      for (int c = 0; c < channels; ++c) rep.channel_weight(r, c) = get_f64le(is);
    rep.channel_bias = VectorXd(channels);
    for (int c = 0; c < channels; ++c) rep.channel_bias[c] = get_f64le(is);
    rep.height_weight = VectorXd(channels);
    for (int c = 0; c < channels; ++c) rep.height_weight[c] = get_f64le(is);
    rep.height_bias = get_f64le(is);
    rep.width_weight = VectorXd(channels);
    for (int c = 0; c < channels; ++c) rep.width_weight[c] = get_f64le(is);
    rep.width_bias = get_f64le(is);
  }
  p.lambda_raw = VectorXd(rank);
  for (int i = 0; i < rank; ++i) p.lambda_raw[i] = get_f64le(is);
  if (!is) throw std::runtime_error("load_tgm: truncated payload in " + path);
  return p;
}

}  // namespace reconet
