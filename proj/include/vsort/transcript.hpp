#pragma once

// Wire formats: receipts, audit paths and the published transcript. Field
// order is fixed; signatures cover the compact serialization with the
// "signature" member omitted.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "vsort/bytes.hpp"
#include "vsort/merkle.hpp"
#include "vsort/signing.hpp"

namespace vsort {

using ordered_json = nlohmann::ordered_json;

/// Structurally invalid JSON document (missing member, wrong type, bad hex).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Receipt {
  std::string sortition_id;
  std::uint64_t leaf_index = 0;
  Hash32 entry_hash{};
  std::int64_t received_at = 0;
  signing::Signature signature{};

  friend bool operator==(const Receipt&, const Receipt&) = default;
};

struct Transcript {
  std::uint32_t version = 1;
  std::string sortition_id;
  std::uint64_t T = 0;
  unsigned discriminant_bits = 0;
  std::uint64_t k = 0;
  std::uint64_t n = 0;
  Hash32 x_root{};
  mpz_class d_magnitude;
  std::uint64_t d_iterations = 0;
  Bytes y;      // encoded form
  Bytes proof;  // encoded form
  std::uint64_t challenge_iterations = 0;
  std::vector<std::uint64_t> winners;
  signing::Signature signature{};
  signing::PublicKey server_pubkey{};
};

ordered_json to_json(const Receipt& r, bool with_signature = true);
Receipt receipt_from_json(const nlohmann::json& j);
std::string canonical_bytes(const Receipt& r);
void sign(Receipt& r, const signing::SigningKey& key);
bool verify_signature(const Receipt& r, const signing::PublicKey& key);

ordered_json to_json(const Transcript& t, bool with_signature = true);
Transcript transcript_from_json(const nlohmann::json& j);
std::string canonical_bytes(const Transcript& t);
/// The published document: canonical bytes with the signature included.
std::string serialize(const Transcript& t);
void sign(Transcript& t, const signing::SigningKey& key);
bool verify_signature(const Transcript& t);

ordered_json to_json(const merkle::AuditPath& p);
merkle::AuditPath audit_path_from_json(const nlohmann::json& j);

}  // namespace vsort
