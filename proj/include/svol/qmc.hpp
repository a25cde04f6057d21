#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "svol/types.hpp"

namespace svol::qmc {

// Direction numbers for a digital Sobol sequence, 32 bits per dimension.
// The canonical table shipped in data/sobol_directions.txt (Joe-Kuo, see
// tools/make_direction_table.py for provenance) is also compiled into the
// library, so the binary needs no runtime data files.
class DirectionTable {
 public:
  int dims() const { return static_cast<int>(words_.size() / 32); }
  const uint32_t* words(int dim_index) const { return words_.data() + 32 * dim_index; }

  // Parses the text format: one line per dimension, "d s a m_1 ... m_s",
  // '#' comments and blank lines ignored. Dimension 1 is implicit.
  static DirectionTable parse(std::istream& in);
  static DirectionTable parse_text(std::string_view text);
  static DirectionTable load(const std::string& path);

  // The embedded copy of data/sobol_directions.txt, parsed once on first use.
  static const DirectionTable& builtin();

 private:
  std::vector<uint32_t> words_;  // 32 per dimension, dimension 0 first
};

// Plain (unscrambled) Sobol points in (0,1)^dim. Index 0 is the origin and is
// never handed out by the sources below; callers of point() own that policy.
class SobolSequence {
 public:
  explicit SobolSequence(int dim) : SobolSequence(dim, DirectionTable::builtin()) {}
  SobolSequence(int dim, const DirectionTable& table);

  int dim() const { return dim_; }

  // Random access via the Gray-code representation of `index` (< 2^32).
  void point(uint64_t index, double* u) const;

  // Sequential cursor: seek anywhere, then step in Gray-code order with one
  // XOR per dimension per point. next() emits the point at the current index
  // and advances.
  class Stream {
   public:
    explicit Stream(const SobolSequence& seq) : seq_(&seq), state_(seq.dim()) { seek(0); }
    void seek(uint64_t index);
    void next(double* u);
    uint64_t index() const { return index_; }

   private:
    const SobolSequence* seq_;
    std::vector<uint32_t> state_;
    uint64_t index_ = 0;
  };

 private:
  int dim_;
  std::vector<uint32_t> vt_;  // direction words, bit-major: vt_[k*dim + j]
};

// Quantile of the standard normal distribution on (0,1). Rational
// approximation (Acklam) refined by one Halley step through std::erfc;
// absolute error is far below the 1e-9 contract. Throws DomainError
// outside the open interval.
double inverse_normal_cdf(double u);

// Counter-based pseudo-random fallback: a splitmix64 hash of (seed, index)
// gives random access with the same layout semantics as the Sobol source.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed);
  double uniform(uint64_t flat_index) const;

 private:
  uint64_t base_;
};

// Coordinate layout of one trajectory: K steps of d Gaussian increments,
// plus one trailing flip coordinate per step for the NV-family schemes.
struct DimensionLayout {
  int n_steps = 0;
  int n_brownian = 0;
  bool has_lambda = false;

  int per_step() const { return n_brownian + (has_lambda ? 1 : 0); }
  int total() const { return n_steps * per_step(); }

  static DimensionLayout make(SchemeKind scheme, int n_steps, int n_brownian);
};

// Maps one uniform point onto standard-normal increments z (n_steps x
// n_brownian, step-major) and, when the layout carries it, the per-step sign
// lambda[k] in {-1,+1}. The flip coordinate is the last one of each step's
// slice and maps to -1 iff u < 1/2.
void draw_trajectory(const DimensionLayout& layout, const double* u, double* z,
                     double* lambda);

// Uniform point source addressed by trajectory index (0-based). fill() is
// pure; cursors are cheap sequential readers confined to one worker. Both
// views of the same index yield identical bits, so chunked consumers can
// seek once per chunk and stream inside it.
class PointSource {
 public:
  virtual ~PointSource() = default;
  virtual int dim() const = 0;
  virtual void fill(uint64_t traj, double* u) const = 0;

  class Cursor {
   public:
    virtual ~Cursor() = default;
    virtual void seek(uint64_t traj) = 0;
    virtual void next(double* u) = 0;
  };
  virtual std::unique_ptr<Cursor> make_cursor() const = 0;
};

// Sobol source: trajectory t reads sequence index t+1 (the origin is skipped
// so every coordinate lies strictly inside (0,1)).
class SobolSource : public PointSource {
 public:
  explicit SobolSource(int dim) : seq_(dim) {}
  int dim() const override { return seq_.dim(); }
  void fill(uint64_t traj, double* u) const override { seq_.point(traj + 1, u); }
  std::unique_ptr<Cursor> make_cursor() const override;

 private:
  SobolSequence seq_;
};

// Pseudo-random source for variance-estimation runs.
class PseudoSource : public PointSource {
 public:
  PseudoSource(int dim, uint64_t seed) : dim_(dim), rng_(seed) {}
  int dim() const override { return dim_; }
  void fill(uint64_t traj, double* u) const override;
  std::unique_ptr<Cursor> make_cursor() const override;

 private:
  int dim_;
  CounterRng rng_;
};

// kind: "sobol" (seed unused) or "mc".
std::unique_ptr<PointSource> make_point_source(const std::string& kind, int dim,
                                               uint64_t seed);

}  // namespace svol::qmc
