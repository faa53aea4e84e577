#include "swarmloc/rng.hpp"

namespace swarmloc {

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t state = splitmix64(base);
  for (std::uint64_t key : keys) {
    state = splitmix64(state ^ splitmix64(key + 0x632BE59BD9B4E019ULL));
  }
  return state;
}

}  // namespace swarmloc
