#pragma once

#include <array>
#include <cstdint>

namespace msbound {

/// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// 128-bit Philox counter for draw block `block` of step `t` in run `run`.
/// Layout (low word first): block, t, run low 32 bits, run high 32 bits.
/// Distinct (run, t) pairs therefore own disjoint counter ranges.
std::array<std::uint32_t, 4> counter_for(std::uint64_t run, std::uint32_t t,
                                         std::uint32_t block);

class DrawCursor;

/// Value-like handle on the random numbers of one Monte Carlo run. Every
/// draw is a pure function of (master_seed, run, t, position within step).
class RngStream {
 public:
  /// Run indices at or above this value are reserved for auxiliary
  /// estimates (moment estimation) so they never collide with simulation runs.
  static constexpr std::uint64_t kAuxiliaryRunBase = std::uint64_t{1} << 63;

  RngStream() = default;
  RngStream(std::uint64_t master_seed, std::uint64_t run)
      : master_seed_(master_seed), run_(run) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t run() const { return run_; }

  RngStream fork(std::uint64_t run) const { return RngStream(master_seed_, run); }

  /// Fresh cursor positioned at the first draw of step t.
  DrawCursor at(std::uint64_t t) const;

 private:
  std::uint64_t master_seed_ = 0;
  std::uint64_t run_ = 0;
};

/// Sequential draws within one step.
class DrawCursor {
 public:
  DrawCursor(const RngStream& stream, std::uint32_t t);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();

  std::uint32_t blocks_used() const { return block_; }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t run_;
  std::uint32_t t_;
  std::uint32_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace msbound
