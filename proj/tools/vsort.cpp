// vsort: operator and verifier command line.
//
// Exit codes: 0 success / valid, 1 invalid result, 2 usage or I/O error.

#include <CLI11.hpp>
#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vsort/c_api.h"
#include "vsort/hashprime.hpp"
#include "vsort/service.hpp"
#include "vsort/sortition.hpp"
#include "vsort/vdf.hpp"

namespace fs = std::filesystem;
using namespace vsort;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + p.string());
  out << contents;
}

nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(p.string() + ": " + e.what());
  }
}

Transcript load_transcript(const fs::path& p) {
  try {
    return transcript_from_json(read_json(p));
  } catch (const FormatError& e) {
    throw UsageError(p.string() + ": " + e.what());
  }
}

/// An existing file is read verbatim; anything else must be hex.
Bytes load_entry(const std::string& arg) {
  if (fs::is_regular_file(arg)) {
    const std::string s = read_file(arg);
    return Bytes(s.begin(), s.end());
  }
  try {
    return from_hex(arg);
  } catch (const std::invalid_argument&) {
    throw UsageError("--entry is neither a readable file nor hex: " + arg);
  }
}

httplib::Client make_client(const std::string& url) {
  httplib::Client cli(url);
  cli.set_connection_timeout(10);
  cli.set_read_timeout(60);
  return cli;
}

// --- subcommands -------------------------------------------------------------

int cmd_serve(const fs::path& config, const service::Overrides& overrides) {
  auto cfg = service::load_config(config, overrides);
  service::Server server(cfg);
  std::cerr << "serving " << cfg.sortition.sortition_id << " on " << cfg.host << ":" << cfg.port
            << " (data " << cfg.data_dir << ")\n";
  if (!server.listen()) {
    std::cerr << "error: cannot bind " << cfg.host << ":" << cfg.port << "\n";
    return kUsage;
  }
  return kOk;
}

int cmd_register(const std::string& url, const std::string& entry, const fs::path& out) {
  const Bytes x = load_entry(entry);
  nlohmann::json body;
  body["x"] = to_base64(x);
  auto cli = make_client(url);
  auto res = cli.Post("/api/v1/register", body.dump(), "application/json");
  if (!res) throw UsageError("request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    std::cerr << "registration rejected (" << res->status << "): " << res->body << "\n";
    return kInvalid;
  }
  Receipt r = receipt_from_json(nlohmann::json::parse(res->body));
  write_file(out, to_json(r).dump(2) + "\n");
  std::cout << "registered as leaf " << r.leaf_index << "; receipt written to " << out << "\n";
  return kOk;
}

int cmd_finalize(const fs::path& config, const service::Overrides& overrides,
                 const std::optional<std::int64_t>& now_override, const std::optional<fs::path>& out) {
  auto cfg = service::load_config(config, overrides);
  auto key = signing::SigningKey::load_or_create(cfg.key_path);
  sortition::Sortition state(cfg.sortition, std::move(key), cfg.data_dir);
  const std::int64_t now = now_override.value_or(service::unix_now());

  vdf::EvalOptions options;
  int last_percent = -1;
  options.progress = [&](std::uint64_t done, std::uint64_t total) {
    const int percent = total ? static_cast<int>(100 * done / total) : 100;
    if (percent != last_percent) {
      last_percent = percent;
      std::cerr << "\revaluating: " << percent << "% (" << done << "/" << total << ")" << std::flush;
    }
  };
  const auto start = std::chrono::steady_clock::now();
  Transcript t;
  try {
    t = state.finalize(now, options);
  } catch (const sortition::Error& e) {
    std::cerr << "\nerror: " << e.code() << ": " << e.what() << "\n";
    return kUsage;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "\n";
  std::cout << "published transcript for " << t.n << " entries in " << secs << " s\n"
            << "winners:";
  for (auto w : t.winners) std::cout << ' ' << w;
  std::cout << "\n";
  if (out) write_file(*out, serialize(t));
  return kOk;
}

void print_report(const sortition::VerificationReport& report) {
  int i = 1;
  for (const auto& c : report.checks) {
    std::cout << "check " << i++ << " " << c.name << ": " << (c.passed ? "PASS" : "FAIL");
    if (!c.passed) std::cout << " (" << c.reason << ")";
    std::cout << "\n";
  }
  std::cout << "verdict: " << (report.valid() ? "VALID" : "INVALID") << "\n";
}

int cmd_verify(const fs::path& transcript, bool strict) {
  const Transcript t = load_transcript(transcript);
  const auto start = std::chrono::steady_clock::now();
  auto report = sortition::verify_transcript(t, strict);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  print_report(report);
  std::cout << "verification time: " << ms << " ms (" << (strict ? "strict" : "hinted") << ")\n";
  return report.valid() ? kOk : kInvalid;
}

int cmd_verify_inclusion(const fs::path& transcript, const fs::path& receipt,
                         const std::string& entry, const std::string& url,
                         const std::optional<fs::path>& path_file) {
  const Transcript t = load_transcript(transcript);
  Receipt r;
  try {
    r = receipt_from_json(read_json(receipt));
  } catch (const FormatError& e) {
    throw UsageError(receipt.string() + ": " + e.what());
  }
  const Bytes x = load_entry(entry);

  nlohmann::json path_json;
  if (path_file) {
    path_json = read_json(*path_file);
  } else {
    if (url.empty()) throw UsageError("either --url or --path is required");
    auto cli = make_client(url);
    auto res = cli.Get("/api/v1/proof/" + std::to_string(r.leaf_index));
    if (!res) throw UsageError("request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      std::cerr << "proof request failed (" << res->status << "): " << res->body << "\n";
      return kInvalid;
    }
    path_json = nlohmann::json::parse(res->body);
  }
  merkle::AuditPath path;
  try {
    path = audit_path_from_json(path_json);
  } catch (const FormatError& e) {
    std::cout << "inclusion: FAIL (malformed audit path: " << e.what() << ")\n";
    return kInvalid;
  }
  auto v = sortition::verify_receipt_inclusion(r, x, path, t);
  std::cout << "inclusion: " << (v ? "PASS" : "FAIL");
  if (!v) std::cout << " (" << v.reason << ")";
  std::cout << "\nleaf " << r.leaf_index << " of " << t.n << ", path length "
            << path.siblings.size() << "\n";
  return v ? kOk : kInvalid;
}

int cmd_calibrate(double duration, unsigned bits) {
  if (!(duration > 0)) throw UsageError("--duration must be positive");
  auto c = sortition::calibrate(duration, bits);
  std::cerr << "measured " << c.steps_per_second << " steps/s at " << bits << " bits\n";
  std::cout << c.T << "\n";
  return kOk;
}

int cmd_bench_hprime(unsigned samples, unsigned bits, bool hint, const std::optional<fs::path>& out) {
  hashprime::Params{.bits = bits, .congruence = hashprime::Congruence{7, 8}, .mr_rounds = 50}.validate();
  std::ostringstream csv;
  csv << "sample_index,iterations,elapsed_ms,primality_tests\n";
  using clock = std::chrono::steady_clock;
  for (unsigned i = 0; i < samples; ++i) {
    std::uint64_t iterations = 0, tests = 0;
    if (hint && vsort_hprime_sample(i, bits, 0, &iterations, nullptr) != 0)
      throw std::runtime_error("hash-to-prime failed for sample " + std::to_string(i));
    const auto start = clock::now();
    if (vsort_hprime_sample(i, bits, hint ? iterations : 0, &iterations, &tests) != 0)
      throw std::runtime_error("hash-to-prime failed for sample " + std::to_string(i));
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    csv << i << ',' << iterations << ',' << ms << ',' << tests << '\n';
  }
  if (out) write_file(*out, csv.str());
  else std::cout << csv.str();
  return kOk;
}

// Shared fixture set for other verifier builds: three honest transcripts and
// two tampered ones, with the expected verdicts in manifest.json.
int cmd_fixtures(const fs::path& dir, unsigned bits, std::uint64_t T) {
  fs::create_directories(dir);
  Hash32 seed = sha256(std::string_view("vsort fixture key"));
  const auto key = signing::SigningKey::from_seed(seed);
  auto honest = [&](const std::string& id, std::uint64_t n, std::uint64_t k) {
    std::vector<sortition::Entry> entries;
    for (std::uint64_t i = 0; i < n; ++i)
      entries.push_back({i, to_bytes(id + "/entry-" + std::to_string(i)), 1000 + static_cast<std::int64_t>(i)});
    return sortition::build_transcript({id, 1000, 2000, T, bits, k}, entries, key);
  };
  ordered_json manifest = ordered_json::array();
  auto emit = [&](const std::string& name, const Transcript& t) {
    write_file(dir / name, serialize(t));
    const auto report = sortition::verify_transcript(t);
    ordered_json entry{{"file", name}, {"valid", report.valid()}, {"checks", ordered_json::array()}};
    for (const auto& c : report.checks) entry["checks"].push_back({{"name", c.name}, {"passed", c.passed}});
    manifest.push_back(entry);
    std::cout << name << ": " << (report.valid() ? "VALID" : "INVALID") << "\n";
  };
  const auto a = honest("fixture-a", 1, 1);
  const auto b = honest("fixture-b", 10, 3);
  const auto c = honest("fixture-c", 50, 5);
  emit("honest-1.json", a);
  emit("honest-2.json", b);
  emit("honest-3.json", c);

  auto swapped = b;
  for (std::uint64_t i = 0; i < swapped.n; ++i) {
    if (std::find(swapped.winners.begin(), swapped.winners.end(), i) == swapped.winners.end()) {
      swapped.winners.front() = i;
      break;
    }
  }
  std::sort(swapped.winners.begin(), swapped.winners.end());
  sign(swapped, key);
  emit("tampered-winners.json", swapped);

  auto flipped = c;
  flipped.y[flipped.y.size() - 1] ^= 0x01;
  emit("tampered-y.json", flipped);

  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verifiable sortition: registration, VDF result generation and verification"};
  app.require_subcommand(1);

  fs::path config;
  service::Overrides overrides;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--bind", overrides.bind, "host:port (overrides VSORT_BIND)");
    sub->add_option("--data-dir", overrides.data_dir, "data directory (overrides VSORT_DATA_DIR)");
    sub->add_option("--key", overrides.key_path, "signing key path (overrides VSORT_KEY)");
  };

  auto* serve = app.add_subcommand("serve", "Run the registration / publication service");
  add_overrides(serve);

  std::string url, entry;
  fs::path receipt_out = "receipt.json";
  auto* reg = app.add_subcommand("register", "Submit an entry and store the signed receipt");
  reg->add_option("--url", url, "service base URL")->required();
  reg->add_option("--entry", entry, "entry file, or hex bytes")->required();
  reg->add_option("--out", receipt_out, "receipt output file");

  std::optional<std::int64_t> now;
  std::optional<fs::path> transcript_out;
  auto* fin = app.add_subcommand("finalize", "Close the window, evaluate the VDF, publish");
  add_overrides(fin);
  fin->add_option("--now", now, "override the current UNIX time");
  fin->add_option("--out", transcript_out, "also write the transcript here");

  fs::path transcript;
  bool strict = false;
  auto* ver = app.add_subcommand("verify", "Verify a published transcript");
  ver->add_option("--transcript", transcript, "transcript JSON")->required();
  ver->add_flag("--strict", strict, "recompute hash-to-prime searches instead of trusting hints");

  fs::path receipt;
  std::optional<fs::path> path_file;
  auto* inc = app.add_subcommand("verify-inclusion", "Check that a receipt's entry is in the tree");
  inc->add_option("--transcript", transcript, "transcript JSON")->required();
  inc->add_option("--receipt", receipt, "receipt JSON")->required();
  inc->add_option("--entry", entry, "entry file, or hex bytes")->required();
  inc->add_option("--url", url, "service base URL to fetch the audit path from");
  inc->add_option("--path", path_file, "audit path JSON file instead of --url");

  double duration = 0;
  unsigned bits = 1024;
  auto* cal = app.add_subcommand("calibrate", "Recommend T for a target evaluation time");
  cal->add_option("--duration", duration, "target seconds")->required();
  cal->add_option("--bits", bits, "discriminant bits");

  unsigned samples = 1024;
  bool hint = false;
  std::optional<fs::path> csv_out;
  auto* bench = app.add_subcommand("bench-hprime", "Time H_prime over sample-%08d strings (CSV)");
  bench->add_option("--samples", samples, "number of sample strings");
  bench->add_option("--bits", bits, "prime bit length");
  bench->add_flag("--hint", hint, "time the hinted path (one primality test)");
  bench->add_option("--out", csv_out, "CSV output file (default stdout)");

  fs::path fixtures_dir;
  std::uint64_t fixtures_T = 1 << 10;
  unsigned fixtures_bits = 256;
  auto* fix = app.add_subcommand("fixtures", "Write the shared verifier fixture set");
  fix->add_option("--out", fixtures_dir, "output directory")->required();
  fix->add_option("--T", fixtures_T, "VDF steps per transcript");
  fix->add_option("--bits", fixtures_bits, "discriminant bits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*serve) return cmd_serve(config, overrides);
    if (*reg) return cmd_register(url, entry, receipt_out);
    if (*fin) return cmd_finalize(config, overrides, now, transcript_out);
    if (*ver) return cmd_verify(transcript, strict);
    if (*inc) return cmd_verify_inclusion(transcript, receipt, entry, url, path_file);
    if (*cal) return cmd_calibrate(duration, bits);
    if (*bench) return cmd_bench_hprime(samples, bits, hint, csv_out);
    if (*fix) return cmd_fixtures(fixtures_dir, fixtures_bits, fixtures_T);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
