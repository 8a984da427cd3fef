#pragma once

#include <string>
#include <vector>

namespace depshap {

// Collects non-fatal notes (regularizations, fallbacks). Not thread-safe;
// give each worker its own instance.
struct Diagnostics {
  std::vector<std::string> messages;

  void note(std::string message) { messages.push_back(std::move(message)); }
  bool empty() const { return messages.empty(); }
};

inline void note(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->note(std::move(message));
}

}  // namespace depshap
