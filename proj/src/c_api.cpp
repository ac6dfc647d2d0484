#include "vsort/c_api.h"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "vsort/sortition.hpp"

namespace {

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" int vsort_verify_transcript(const char* transcript_json, int strict, char** report_json) {
  using namespace vsort;
  if (report_json) *report_json = nullptr;
  Transcript t;
  try {
    t = transcript_from_json(nlohmann::json::parse(transcript_json ? transcript_json : ""));
  } catch (const std::exception& e) {
    if (report_json) *report_json = dup(ordered_json{{"error", e.what()}}.dump());
    return -1;
  }
  const auto start = std::chrono::steady_clock::now();
  const auto report = sortition::verify_transcript(t, strict != 0);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (report_json) {
    ordered_json j;
    j["valid"] = report.valid();
    j["checks"] = ordered_json::array();
    for (const auto& c : report.checks)
      j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"reason", c.reason}});
    j["elapsed_ms"] = ms;
    *report_json = dup(j.dump());
  }
  return report.valid() ? 1 : 0;
}

extern "C" int vsort_hprime_sample(uint32_t index, unsigned bits, uint64_t hint, uint64_t* iterations,
                                   uint64_t* primality_tests) {
  using namespace vsort;
  try {
    const hashprime::Params params{.bits = bits, .congruence = hashprime::Congruence{7, 8}, .mr_rounds = 50};
    params.validate();
    char name[32];
    std::snprintf(name, sizeof name, "sample-%08u", index);
    const Bytes seed = to_bytes(name);
    hashprime::Stats stats;
    std::uint64_t i = hint;
    if (hint == 0) i = hashprime::hash_to_prime(seed, params, &stats).iterations;
    else hashprime::hash_to_prime_with_hint(seed, params, hint, &stats);
    if (iterations) *iterations = i;
    if (primality_tests) *primality_tests = stats.primality_tests;
    return 0;
  } catch (const std::exception&) {
    return -1;
  }
}

extern "C" void vsort_free(char* p) { std::free(p); }
