// Scripted external model for protocol tests.
//
//   protocol_model row-mean          predictions are row means
//   protocol_model constant C        every prediction is C
//   protocol_model reorder           answers pending requests newest first
//   protocol_model short-by-one      drops the last prediction of each response
//   protocol_model garbage           answers with random bytes
//   protocol_model exit              exits on the first real request
//   protocol_model silent            never answers a real request
//   protocol_model bad-handshake     answers the handshake with invalid JSON

#include <poll.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace {

nlohmann::json respond(const nlohmann::json& request, const std::string& mode, double constant) {
  std::vector<double> predictions;
  for (const auto& row : request["rows"]) {
    if (mode == "constant") {
      predictions.push_back(constant);
      continue;
    }
    double sum = 0.0;
    for (const auto& v : row) sum += v.get<double>();
    predictions.push_back(row.empty() ? 0.0 : sum / static_cast<double>(row.size()));
  }
  if (mode == "short-by-one" && !predictions.empty()) predictions.pop_back();
  return {{"id", request["id"]}, {"predictions", predictions}};
}

bool input_pending(int wait_ms) {
  pollfd fd{STDIN_FILENO, POLLIN, 0};
  return poll(&fd, 1, wait_ms) > 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: protocol_model MODE [ARG]\n";
    return 64;
  }
  std::ios::sync_with_stdio(false);
  const std::string mode = argv[1];
  const double constant = argc > 2 ? std::atof(argv[2]) : 0.0;
  std::mt19937 rng(7);
  std::vector<nlohmann::json> held;
  std::string line;
  while (std::getline(std::cin, line)) {
    const nlohmann::json request = nlohmann::json::parse(line);
    const bool handshake = request["id"].get<std::uint64_t>() == 0;
    if (handshake) {
      if (mode == "bad-handshake") {
        std::cout << "{not json" << std::endl;
        continue;
      }
      std::cout << respond(request, "row-mean", 0.0).dump() << std::endl;
      continue;
    }
    if (mode == "exit") return 0;
    if (mode == "silent") continue;
    if (mode == "garbage") {
      std::string noise;
      for (int i = 0; i < 64; ++i) {
        const auto c = static_cast<char>(rng() % 256);
        noise.push_back(c == '\n' ? 'x' : c);
      }
      std::cout << noise << std::endl;
      continue;
    }
    if (mode == "reorder") {
      held.push_back(request);
      // std::getline may have buffered more lines already; only flush once
      // neither the stream buffer nor the pipe has anything left.
      if (std::cin.rdbuf()->in_avail() > 0 || input_pending(100)) continue;
      for (auto it = held.rbegin(); it != held.rend(); ++it) std::cout << respond(*it, "row-mean", 0.0).dump() << "\n";
      std::cout.flush();
      held.clear();
      continue;
    }
    std::cout << respond(request, mode, constant).dump() << std::endl;
  }
  return 0;
}
