#pragma once

#include <array>
#include <cstdint>

namespace phom {

/// Master seed of an experiment.
struct Seed {
  std::uint64_t value = 0;
};

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is identified by a 64-bit key; `split(id)` derives an independent
/// child stream from the key alone, so the child does not depend on how many
/// draws the parent has already produced. Estimators split one child per
/// sample path, which gives common random numbers whenever the same base
/// stream is reused with perturbed inputs.
class RngStream {
 public:
  RngStream() : RngStream(Seed{0}) {}
  explicit RngStream(Seed seed);

  RngStream split(std::uint64_t id) const;
  std::uint64_t key() const { return key_; }

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential(double rate);

 private:
  void refill();

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace phom
