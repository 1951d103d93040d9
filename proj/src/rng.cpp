#include "msbound/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace msbound {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c,
                                           std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::array<std::uint32_t, 4> counter_for(std::uint64_t run, std::uint32_t t,
                                         std::uint32_t block) {
  return {block, t, static_cast<std::uint32_t>(run),
          static_cast<std::uint32_t>(run >> 32)};
}

DrawCursor RngStream::at(std::uint64_t t) const {
  if (t > 0xFFFFFFFFull) throw std::out_of_range("time index exceeds 32 bits");
  return DrawCursor(*this, static_cast<std::uint32_t>(t));
}

DrawCursor::DrawCursor(const RngStream& stream, std::uint32_t t)
    : key_{static_cast<std::uint32_t>(stream.master_seed()),
           static_cast<std::uint32_t>(stream.master_seed() >> 32)},
      run_(stream.run()),
      t_(t) {}

std::uint64_t DrawCursor::next_u64() {
  if (buffered_ == 0) {
    if (block_ == 0xFFFFFFFFu) throw std::overflow_error("draw counter exhausted");
    const auto out = philox4x32_10(counter_for(run_, t_, block_++), key_);
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
  }
  return buffer_[2 - buffered_--];
}

double DrawCursor::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double DrawCursor::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace msbound
