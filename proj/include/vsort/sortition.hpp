#pragma once

// Registration, result generation and verification of a verifiable sortition.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsort/classgroup.hpp"
#include "vsort/merkle.hpp"
#include "vsort/signing.hpp"
#include "vsort/transcript.hpp"
#include "vsort/vdf.hpp"

namespace vsort::sortition {

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct Config {
  std::string sortition_id;
  std::int64_t opens_at = 0;   // UTC seconds, inclusive
  std::int64_t closes_at = 0;  // UTC seconds, exclusive
  std::uint64_t T = 0;
  unsigned discriminant_bits = vdf::kDefaultDiscriminantBits;
  std::uint64_t k = 1;

  void validate() const;
};

ordered_json to_json(const Config& c);
Config config_from_json(const nlohmann::json& j);

struct Entry {
  std::uint64_t index = 0;
  Bytes x_u;
  std::int64_t received_at = 0;
};

/// SHA-256("seed" || enc(y)).
Hash32 winner_seed(const classgroup::QuadraticForm& y);
/// k distinct indices below n, drawn by partial Fisher-Yates from the
/// SHA-256(seed || LE64(counter)) stream with rejection sampling; sorted.
std::vector<std::uint64_t> select_winners_from_seed(const Hash32& seed, std::uint64_t n,
                                                    std::uint64_t k);
std::vector<std::uint64_t> select_winners(const classgroup::QuadraticForm& y, std::uint64_t n,
                                          std::uint64_t k);

/// Result generation as a pure function of the ordered entries, config and key.
Transcript build_transcript(const Config& config, std::span<const Entry> entries,
                            const signing::SigningKey& key,
                            const vdf::EvalOptions& options = {});

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string reason;
};

struct VerificationReport {
  std::vector<CheckResult> checks;  // signature, discriminant, vdf, winners

  bool valid() const;
  const CheckResult* find(std::string_view name) const;
};

VerificationReport verify_transcript(const Transcript& t, bool strict = false);

struct InclusionReport {
  bool included = false;
  std::string reason;

  explicit operator bool() const { return included; }
};

InclusionReport verify_receipt_inclusion(const Receipt& receipt, std::span<const std::uint8_t> x_u,
                                         const merkle::AuditPath& path, const Transcript& t);

struct Calibration {
  std::uint64_t T = 0;
  double steps_per_second = 0;
};

/// Measures evaluation throughput (T units per second, output chain plus
/// proof) and recommends T = ceil(rate * target * 1.1).
Calibration calibrate(double target_seconds, unsigned bits);
std::uint64_t recommended_T(double steps_per_second, double target_seconds);

enum class Phase { pending, registration, closed, evaluating, published };
std::string_view to_string(Phase p);

/// Protocol state. Registrations are serialized through one mutex so the
/// index order is the arrival order; evaluation runs without the lock.
class Sortition {
 public:
  /// With a data directory, replays entries.jsonl and loads transcript.json.
  Sortition(Config config, signing::SigningKey key,
            std::optional<std::filesystem::path> data_dir = std::nullopt);
  ~Sortition();

  Sortition(const Sortition&) = delete;
  Sortition& operator=(const Sortition&) = delete;

  const Config& config() const { return config_; }
  const signing::PublicKey& public_key() const { return key_.public_key(); }

  Receipt register_entry(std::span<const std::uint8_t> x_u, std::int64_t now);
  /// Idempotent: once published, returns the stored transcript.
  Transcript finalize(std::int64_t now, const vdf::EvalOptions& options = {});

  Phase phase(std::int64_t now) const;
  std::uint64_t size() const;
  std::vector<Entry> entries() const;
  std::optional<Transcript> transcript() const;
  /// Requires a published transcript.
  merkle::AuditPath audit_path(std::uint64_t index) const;
  /// Adopts a transcript written to the data directory by another process.
  bool reload_transcript();

 private:
  void load_log();
  void append_log(const Entry& e);
  void adopt(Transcript t);

  Config config_;
  signing::SigningKey key_;
  std::optional<std::filesystem::path> data_dir_;
  int log_fd_ = -1;

  mutable std::mutex mu_;
  std::vector<Entry> entries_;
  std::optional<Transcript> transcript_;
  std::optional<merkle::Tree> tree_;
  std::atomic<bool> evaluating_{false};
};

}  // namespace vsort::sortition
