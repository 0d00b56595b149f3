#include "signcast/capture/debounce.hpp"

#include <stdexcept>

namespace signcast::capture {

void DebounceConfig::validate() const {
  if (!(min_confidence > 0.0 && min_confidence < 1.0)) {
    throw std::invalid_argument("minimum confidence must be in (0, 1)");
  }
  if (repeat_gap < 1) throw std::invalid_argument("repeat gap must be at least 1");
}

std::optional<std::uint64_t> debounce(const std::string& word, double confidence, EmissionState& state,
                                      const DebounceConfig& config) {
  ++state.windows_since_emission;
  if (confidence < config.min_confidence) return std::nullopt;
  const bool new_word = !state.last_word || *state.last_word != word;
  if (!new_word && state.windows_since_emission < config.repeat_gap) return std::nullopt;
  state.last_word = word;
  state.windows_since_emission = 0;
  return state.next_seq++;
}

}  // namespace signcast::capture
