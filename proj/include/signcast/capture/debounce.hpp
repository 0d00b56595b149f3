#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace signcast::capture {

struct DebounceConfig {
  double min_confidence = 0.6;  // tau, in (0, 1)
  std::size_t repeat_gap = 3;   // G, windows

  void validate() const;
};

struct EmissionState {
  std::optional<std::string> last_word;
  std::size_t windows_since_emission = 0;
  std::uint64_t next_seq = 1;
};

/// Counts the window, then emits iff confidence >= tau and the word differs
/// from the last emission or at least G windows have passed since it.
/// Returns the seq assigned to the emission.
std::optional<std::uint64_t> debounce(const std::string& word, double confidence, EmissionState& state,
                                      const DebounceConfig& config);

}  // namespace signcast::capture
