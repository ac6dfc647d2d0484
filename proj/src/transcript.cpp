#include "vsort/transcript.hpp"

#include <algorithm>

namespace vsort {
namespace {

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(const std::string& hex, const char* what) {
  Bytes b;
  try {
    b = from_hex(hex);
  } catch (const std::invalid_argument&) {
    throw FormatError(std::string(what) + ": invalid hex");
  }
  if (b.size() != N) throw FormatError(std::string(what) + ": wrong length");
  std::array<std::uint8_t, N> out;
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

Bytes bytes_from_hex(const std::string& hex, const char* what) {
  try {
    return from_hex(hex);
  } catch (const std::invalid_argument&) {
    throw FormatError(std::string(what) + ": invalid hex");
  }
}

template <typename T>
T field(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw FormatError(std::string("missing field ") + name);
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("field ") + name + " has the wrong type");
  }
}

std::uint64_t uint_field(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw FormatError(std::string("missing field ") + name);
  if (!j.at(name).is_number_unsigned())
    throw FormatError(std::string("field ") + name + " must be a nonnegative integer");
  return j.at(name).get<std::uint64_t>();
}

}  // namespace

ordered_json to_json(const Receipt& r, bool with_signature) {
  ordered_json j;
  j["sortition_id"] = r.sortition_id;
  j["leaf_index"] = r.leaf_index;
  j["entry_hash"] = to_hex(r.entry_hash);
  j["received_at"] = r.received_at;
  if (with_signature) j["signature"] = to_hex(r.signature);
  return j;
}

Receipt receipt_from_json(const nlohmann::json& j) {
  Receipt r;
  r.sortition_id = field<std::string>(j, "sortition_id");
  r.leaf_index = uint_field(j, "leaf_index");
  r.entry_hash = fixed_from_hex<32>(field<std::string>(j, "entry_hash"), "entry_hash");
  r.received_at = field<std::int64_t>(j, "received_at");
  r.signature = fixed_from_hex<64>(field<std::string>(j, "signature"), "signature");
  return r;
}

std::string canonical_bytes(const Receipt& r) { return to_json(r, false).dump(); }

void sign(Receipt& r, const signing::SigningKey& key) {
  const std::string msg = canonical_bytes(r);
  r.signature = key.sign(to_bytes(msg));
}

bool verify_signature(const Receipt& r, const signing::PublicKey& key) {
  return signing::verify(key, to_bytes(canonical_bytes(r)), r.signature);
}

ordered_json to_json(const Transcript& t, bool with_signature) {
  ordered_json j;
  j["version"] = t.version;
  j["sortition_id"] = t.sortition_id;
  j["T"] = t.T;
  j["discriminant_bits"] = t.discriminant_bits;
  j["k"] = t.k;
  j["n"] = t.n;
  j["x_root"] = to_hex(t.x_root);
  j["d_magnitude"] = to_hex(magnitude_bytes(t.d_magnitude));
  j["d_iterations"] = t.d_iterations;
  j["y"] = to_hex(t.y);
  j["proof"] = to_hex(t.proof);
  j["challenge_iterations"] = t.challenge_iterations;
  j["winners"] = t.winners;
  if (with_signature) j["signature"] = to_hex(t.signature);
  j["server_pubkey"] = to_hex(t.server_pubkey);
  return j;
}

Transcript transcript_from_json(const nlohmann::json& j) {
  Transcript t;
  t.version = static_cast<std::uint32_t>(uint_field(j, "version"));
  if (t.version != 1) throw FormatError("unsupported transcript version");
  t.sortition_id = field<std::string>(j, "sortition_id");
  t.T = uint_field(j, "T");
  const auto bits = uint_field(j, "discriminant_bits");
  if (bits > 1u << 16) throw FormatError("discriminant_bits out of range");
  t.discriminant_bits = static_cast<unsigned>(bits);
  t.k = uint_field(j, "k");
  t.n = uint_field(j, "n");
  t.x_root = fixed_from_hex<32>(field<std::string>(j, "x_root"), "x_root");
  t.d_magnitude =
      from_magnitude_bytes(bytes_from_hex(field<std::string>(j, "d_magnitude"), "d_magnitude"));
  t.d_iterations = uint_field(j, "d_iterations");
  t.y = bytes_from_hex(field<std::string>(j, "y"), "y");
  t.proof = bytes_from_hex(field<std::string>(j, "proof"), "proof");
  t.challenge_iterations = uint_field(j, "challenge_iterations");
  if (!j.contains("winners") || !j.at("winners").is_array())
    throw FormatError("winners must be an array");
  for (const auto& w : j.at("winners")) {
    if (!w.is_number_unsigned()) throw FormatError("winner indices must be nonnegative integers");
    t.winners.push_back(w.get<std::uint64_t>());
  }
  t.signature = fixed_from_hex<64>(field<std::string>(j, "signature"), "signature");
  t.server_pubkey = fixed_from_hex<32>(field<std::string>(j, "server_pubkey"), "server_pubkey");
  return t;
}

std::string canonical_bytes(const Transcript& t) { return to_json(t, false).dump(); }

std::string serialize(const Transcript& t) { return to_json(t, true).dump(); }

void sign(Transcript& t, const signing::SigningKey& key) {
  t.server_pubkey = key.public_key();
  t.signature = key.sign(to_bytes(canonical_bytes(t)));
}

bool verify_signature(const Transcript& t) {
  return signing::verify(t.server_pubkey, to_bytes(canonical_bytes(t)), t.signature);
}

ordered_json to_json(const merkle::AuditPath& p) {
  ordered_json j;
  j["leaf_index"] = p.leaf_index;
  j["tree_size"] = p.tree_size;
  auto siblings = ordered_json::array();
  for (const auto& s : p.siblings) siblings.push_back(to_hex(s));
  j["siblings"] = std::move(siblings);
  return j;
}

merkle::AuditPath audit_path_from_json(const nlohmann::json& j) {
  merkle::AuditPath p;
  p.leaf_index = uint_field(j, "leaf_index");
  p.tree_size = uint_field(j, "tree_size");
  if (!j.contains("siblings") || !j.at("siblings").is_array())
    throw FormatError("siblings must be an array");
  for (const auto& s : j.at("siblings")) {
    if (!s.is_string()) throw FormatError("sibling must be a hex string");
    p.siblings.push_back(fixed_from_hex<32>(s.get<std::string>(), "sibling"));
  }
  return p;
}

}  // namespace vsort
