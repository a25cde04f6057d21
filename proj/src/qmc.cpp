#include "svol/qmc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "sobol_table_text.hpp"

namespace svol::qmc {

// ---------------------------------------------------------------------------
// Direction numbers

DirectionTable DirectionTable::parse(std::istream& in) {
  DirectionTable table;
  // Dimension 1: v_k = 2^(31-k), the van der Corput radical inverse.
  table.words_.resize(32);
  for (int k = 0; k < 32; ++k) table.words_[k] = 1u << (31 - k);

  std::string line;
  int expected_d = 2;
  std::vector<uint32_t> m;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long long d = 0, s = 0, a = 0;
    if (!(ls >> d >> s >> a) || d != expected_d || s < 1 || s > 31 || a < 0)
      throw ValidationError("direction table: malformed line: " + line);
    m.assign(static_cast<size_t>(s), 0);
    for (long long k = 0; k < s; ++k) {
      long long mk = 0;
      if (!(ls >> mk) || mk < 1 || (mk & 1) == 0 || mk >= (1ll << (k + 1)))
        throw ValidationError("direction table: bad m values in line: " + line);
      m[static_cast<size_t>(k)] = static_cast<uint32_t>(mk);
    }
    long long extra = 0;
    if (ls >> extra) throw ValidationError("direction table: trailing tokens: " + line);

    const size_t base = table.words_.size();
    table.words_.resize(base + 32);
    uint32_t* v = table.words_.data() + base;
    const int ss = static_cast<int>(s);
    for (int k = 0; k < 32; ++k) {
      if (k < ss) {
        v[k] = m[static_cast<size_t>(k)] << (31 - k);
      } else {
        uint32_t w = v[k - ss] ^ (v[k - ss] >> ss);
        for (int t = 1; t < ss; ++t)
          if ((a >> (ss - 1 - t)) & 1) w ^= v[k - t];
        v[k] = w;
      }
    }
    ++expected_d;
  }
  if (expected_d == 2) throw ValidationError("direction table: no dimension lines found");
  return table;
}

DirectionTable DirectionTable::parse_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

DirectionTable DirectionTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("direction table: cannot open " + path);
  return parse(in);
}

const DirectionTable& DirectionTable::builtin() {
  static const DirectionTable table = parse_text(detail::kSobolTableText);
  return table;
}

// ---------------------------------------------------------------------------
// Sobol sequence

SobolSequence::SobolSequence(int dim, const DirectionTable& table) : dim_(dim) {
  if (dim < 1) throw ValidationError("sobol: dimension must be >= 1");
  if (dim > table.dims())
    throw ValidationError("sobol: dimension " + std::to_string(dim) +
                          " exceeds direction table (" + std::to_string(table.dims()) + ")");
  // Bit-major transpose so that one Gray-code update touches a contiguous row.
  vt_.resize(32 * static_cast<size_t>(dim));
  for (int j = 0; j < dim; ++j) {
    const uint32_t* v = table.words(j);
    for (int k = 0; k < 32; ++k) vt_[static_cast<size_t>(k) * dim + j] = v[k];
  }
}

namespace {
constexpr double kInv32 = 0x1p-32;

void compose_gray(const uint32_t* vt, int dim, uint64_t index, uint32_t* y) {
  std::fill(y, y + dim, 0u);
  uint64_t g = index ^ (index >> 1);
  while (g) {
    const int b = std::countr_zero(g);
    g &= g - 1;
    const uint32_t* row = vt + static_cast<size_t>(b) * dim;
    for (int j = 0; j < dim; ++j) y[j] ^= row[j];
  }
}
}  // namespace

void SobolSequence::point(uint64_t index, double* u) const {
  if (index >> 32) throw ValidationError("sobol: index exceeds 2^32 - 1");
  std::vector<uint32_t> y(static_cast<size_t>(dim_));
  compose_gray(vt_.data(), dim_, index, y.data());
  for (int j = 0; j < dim_; ++j) u[j] = static_cast<double>(y[static_cast<size_t>(j)]) * kInv32;
}

void SobolSequence::Stream::seek(uint64_t index) {
  if (index >> 32) throw ValidationError("sobol: index exceeds 2^32 - 1");
  index_ = index;
  compose_gray(seq_->vt_.data(), seq_->dim_, index, state_.data());
}

void SobolSequence::Stream::next(double* u) {
  const int n = seq_->dim_;
  for (int j = 0; j < n; ++j) u[j] = static_cast<double>(state_[static_cast<size_t>(j)]) * kInv32;
  ++index_;
  if (index_ >> 32) throw RangeError("sobol: stream ran past 2^32 points");
  const uint32_t* row = seq_->vt_.data() + static_cast<size_t>(std::countr_zero(index_)) * n;
  for (int j = 0; j < n; ++j) state_[static_cast<size_t>(j)] ^= row[j];
}

// ---------------------------------------------------------------------------
// Inverse normal CDF

namespace {
// Acklam's rational approximation for the lower half p in (0, 1/2].
double acklam_lower(double p) {
  static constexpr double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
           ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
         (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
}
}  // namespace

double inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("inverse_normal_cdf: u must lie in (0,1)");
  // Work on the lower half; 1-u is exact for u >= 1/2, so the reflection
  // costs no accuracy.
  const bool flip = u > 0.5;
  const double p = flip ? 1.0 - u : u;
  double x = acklam_lower(p);  // x <= 0 here

  // One Halley refinement through erfc. Phi(x) = erfc(-x/sqrt(2))/2 is fully
  // accurate for x <= 0, which is why the reduction above matters.
  constexpr double kSqrt2Pi = 2.506628274631000502415765284811;
  constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
  const double err = 0.5 * std::erfc(-x * kInvSqrt2) - p;
  const double dx = err * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= dx / (1.0 + 0.5 * x * dx);

  return flip ? -x : x;
}

// ---------------------------------------------------------------------------
// Counter-based fallback

namespace {
constexpr uint64_t kGamma = 0x9e3779b97f4a7c15ull;

uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace

CounterRng::CounterRng(uint64_t seed) : base_(mix64(seed + kGamma)) {}

double CounterRng::uniform(uint64_t flat_index) const {
  const uint64_t h = mix64(base_ + flat_index * kGamma);
  return (static_cast<double>(h >> 11) + 0.5) * 0x1p-53;
}

// ---------------------------------------------------------------------------
// Layout and trajectory transform

DimensionLayout DimensionLayout::make(SchemeKind scheme, int n_steps, int n_brownian) {
  if (n_steps < 1 || n_brownian < 1)
    throw ValidationError("layout: n_steps and n_brownian must be >= 1");
  DimensionLayout layout;
  layout.n_steps = n_steps;
  layout.n_brownian = n_brownian;
  layout.has_lambda = scheme != SchemeKind::Euler;
  return layout;
}

void draw_trajectory(const DimensionLayout& layout, const double* u, double* z,
                     double* lambda) {
  const int d = layout.n_brownian;
  const int per = layout.per_step();
  for (int k = 0; k < layout.n_steps; ++k) {
    const double* slice = u + static_cast<size_t>(k) * per;
    for (int j = 0; j < d; ++j) z[static_cast<size_t>(k) * d + j] = inverse_normal_cdf(slice[j]);
    if (layout.has_lambda) lambda[k] = slice[d] < 0.5 ? -1.0 : 1.0;
  }
}

// ---------------------------------------------------------------------------
// Point sources

namespace {
class SobolCursor final : public PointSource::Cursor {
 public:
  explicit SobolCursor(const SobolSequence& seq) : stream_(seq) {}
  void seek(uint64_t traj) override { stream_.seek(traj + 1); }
  void next(double* u) override { stream_.next(u); }

 private:
  SobolSequence::Stream stream_;
};

class PseudoCursor final : public PointSource::Cursor {
 public:
  explicit PseudoCursor(const PseudoSource& src) : src_(&src) {}
  void seek(uint64_t traj) override { traj_ = traj; }
  void next(double* u) override { src_->fill(traj_++, u); }

 private:
  const PseudoSource* src_;
  uint64_t traj_ = 0;
};
}  // namespace

std::unique_ptr<PointSource::Cursor> SobolSource::make_cursor() const {
  return std::make_unique<SobolCursor>(seq_);
}

void PseudoSource::fill(uint64_t traj, double* u) const {
  const uint64_t base = traj * static_cast<uint64_t>(dim_);
  for (int j = 0; j < dim_; ++j) u[j] = rng_.uniform(base + j);
}

std::unique_ptr<PointSource::Cursor> PseudoSource::make_cursor() const {
  return std::make_unique<PseudoCursor>(*this);
}

std::unique_ptr<PointSource> make_point_source(const std::string& kind, int dim,
                                               uint64_t seed) {
  if (kind == "sobol") return std::make_unique<SobolSource>(dim);
  if (kind == "mc") return std::make_unique<PseudoSource>(dim, seed);
  throw ValidationError("sequence kind must be 'sobol' or 'mc', got '" + kind + "'");
}

}  // namespace svol::qmc
