// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/session.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "vaelfa/errors.hpp"
#include "vaelfa/experiment.hpp"
#include "vaelfa/format.hpp"
#include "vaelfa/kv_config.hpp"
#include "vaelfa/npy.hpp"
#include "vaelfa/sha256.hpp"

namespace vaelfa {
namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigFile = "session.cfg";
constexpr const char* kManifestFile = "manifest.txt";
constexpr const char* kLockFile = "lock";

std::string numbered(const std::string& dir, const std::string& stem,
                     std::uint64_t k, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04llu", static_cast<unsigned long long>(k));
  return dir + "/" + stem + "_" + buf + ext;
}

std::string as_string(const std::vector<std::uint8_t>& bytes) {
  return std::string(bytes.begin(), bytes.end());
}

std::string read_text(const fs::path& path) {
  return as_string(read_file_bytes(path));
}

void write_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

std::string session_config_text(const SessionOptions& opts, const Shape& shape) {
  ConfigEntries e{{"id", opts.id},
                  {"latent.channels", std::to_string(shape.channels)},
                  {"latent.height", std::to_string(shape.height)},
                  {"latent.width", std::to_string(shape.width)}};
  for (auto& kv : alignment_config_entries(opts.lfa, "lfa.")) e.push_back(kv);
  e.emplace_back("report.r_split", format_double(opts.drift.r_split));
  e.emplace_back("report.bins", std::to_string(opts.drift.bins));
  e.emplace_back("report.window", std::to_string(opts.drift.pool.window));
  e.emplace_back("adapter.encode", opts.adapter.encode_cmd);
  e.emplace_back("adapter.decode", opts.adapter.decode_cmd);
  e.emplace_back("adapter.timeout", format_double(opts.adapter.timeout_seconds));
  e.emplace_back("adapter.workdir", opts.adapter.workdir.string());
  return serialize_key_values(e);
}

void parse_session_config(const std::string& text, SessionOptions& opts,
                          Shape& shape) {
  const KeyValueConfig kv = KeyValueConfig::parse(text);
  opts.id = kv.require_string("id");
  shape.channels = static_cast<std::size_t>(kv.get_int("latent.channels", 0));
  shape.height = static_cast<std::size_t>(kv.get_int("latent.height", 0));
  shape.width = static_cast<std::size_t>(kv.get_int("latent.width", 0));
  if (shape.size() == 0) throw FormatError("session.cfg: invalid latent shape");
  opts.lfa = parse_alignment_config(kv, "lfa.");
  opts.drift.r_split = kv.get_double("report.r_split", kDefaultRadiusSplit);
  opts.drift.bins =
      static_cast<std::size_t>(kv.get_int("report.bins", kDefaultRadialBins));
  opts.drift.pool.window = static_cast<int>(kv.get_int("report.window", 9));
  opts.adapter.encode_cmd = kv.get_string("adapter.encode", "");
  opts.adapter.decode_cmd = kv.get_string("adapter.decode", "");
  opts.adapter.timeout_seconds =
      kv.get_double("adapter.timeout", kDefaultAdapterTimeout);
  opts.adapter.workdir = kv.get_string("adapter.workdir", "");
  kv.check_all_used();
}

}  // namespace

std::string serialize_manifest(const std::vector<ManifestEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += std::to_string(e.turn) + ' ' + e.kind + ' ' + e.path + ' ' + e.sha256 + '\n';
  }
  return out;
}

std::vector<ManifestEntry> parse_manifest(std::string_view text) {
  std::vector<ManifestEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string k, extra;
    ManifestEntry e;
    if (!(ls >> k >> e.kind >> e.path >> e.sha256) || (ls >> extra)) {
      throw ChecksumError("manifest line " + std::to_string(lineno) + " is malformed");
    }
    long long turn = -1;
    try {
      turn = parse_int(k, "manifest turn");
    } catch (const FormatError&) {
    }
    if (turn < 0 || e.sha256.size() != 64) {
      throw ChecksumError("manifest line " + std::to_string(lineno) + " is malformed");
    }
    e.turn = static_cast<std::uint64_t>(turn);
    out.push_back(std::move(e));
  }
  if (!text.empty() && text.back() != '\n') {
    throw ChecksumError("manifest is truncated");
  }
  return out;
}

Session::Session(Session&& other) noexcept
    : dir_(std::move(other.dir_)),
      opts_(std::move(other.opts_)),
      shape_(other.shape_),
      state_(std::move(other.state_)),
      manifest_(std::move(other.manifest_)),
      lock_fd_(other.lock_fd_) {
  other.lock_fd_ = -1;
}

Session& Session::operator=(Session&& other) noexcept {
  if (this != &other) {
    if (lock_fd_ >= 0) ::close(lock_fd_);
    dir_ = std::move(other.dir_);
    opts_ = std::move(other.opts_);
    shape_ = other.shape_;
    state_ = std::move(other.state_);
    manifest_ = std::move(other.manifest_);
    lock_fd_ = other.lock_fd_;
    other.lock_fd_ = -1;
  }
  return *this;
}

Session::~Session() {
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

void Session::lock() {
  const fs::path p = dir_ / kLockFile;
  lock_fd_ = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) throw IoError("cannot open lock file '" + p.string() + "'");
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw IoError("session '" + dir_.string() + "' is in use by another process");
  }
}

std::string Session::write_artifact(const std::string& rel, const std::string& bytes) {
  write_atomic(dir_ / rel, bytes);
  return sha256_hex(bytes);
}

void Session::write_manifest(const std::vector<ManifestEntry>& entries) {
  write_atomic(dir_ / kManifestFile, serialize_manifest(entries));
}

Session Session::initialize(const fs::path& dir, const LatentTensor& z0,
                            SessionOptions opts, const std::vector<std::uint8_t>* png) {
  opts.lfa.validate();
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_empty(dir, ec)) {
    throw IoError("session directory '" + dir.string() + "' is not empty");
  }
  fs::create_directories(dir / "latents", ec);
  if (!ec) fs::create_directories(dir / "anchors", ec);
  if (!ec) fs::create_directories(dir / "images", ec);
  if (ec) throw IoError("cannot create session directory '" + dir.string() + "'");

  const std::vector<std::uint8_t> npy = encode_npy(z0);
  if (opts.id.empty()) opts.id = sha256_hex(npy).substr(0, 12);

  Session s;
  s.dir_ = dir;
  s.opts_ = std::move(opts);
  s.shape_ = z0.shape();
  s.lock();
  s.state_ = lfa_init(z0, s.opts_.lfa);

  std::vector<ManifestEntry> m;
  m.push_back({0, "config", kConfigFile,
               s.write_artifact(kConfigFile, session_config_text(s.opts_, s.shape_))});
  const std::string lat = numbered("latents", "turn", 0, ".npy");
  m.push_back({0, "latent", lat, s.write_artifact(lat, as_string(npy))});
  const std::string anc = numbered("anchors", "anchor", 0, ".txt");
  m.push_back({0, "anchor", anc, s.write_artifact(anc, serialize_anchor(s.state_.low))});
  if (s.state_.high) {
    const std::string hi = numbered("anchors", "high", 0, ".txt");
    m.push_back({0, "anchor_high", hi,
                 s.write_artifact(hi, serialize_anchor(*s.state_.high))});
  }
  if (png) {
    const std::string img = numbered("images", "turn", 0, ".png");
    m.push_back({0, "image", img, s.write_artifact(img, as_string(*png))});
  }
  s.write_manifest(m);
  s.manifest_ = std::move(m);
  return s;
}

Session Session::create(const fs::path& dir, const LatentTensor& z0,
                        const SessionOptions& opts) {
  return initialize(dir, z0, opts, nullptr);
}

Session Session::create_from_image(const fs::path& dir,
                                   const std::vector<std::uint8_t>& png,
                                   const SessionOptions& opts) {
  if (!opts.adapter.configured()) {
    throw AdapterError("an image input needs both encode and decode commands");
  }
  const LatentTensor z0 = adapter_encode(opts.adapter, png);
  return initialize(dir, z0, opts, &png);
}

Session Session::open(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("no session at '" + dir.string() + "'");
  }
  Session s;
  s.dir_ = dir;
  s.lock();
  s.manifest_ = parse_manifest(read_text(dir / kManifestFile));

  std::map<std::string, std::string> verified;  // path -> contents
  for (const auto& e : s.manifest_) {
    const fs::path p = dir / e.path;
    if (!fs::is_regular_file(p)) {
      throw ChecksumError("manifest entry '" + e.path + "' is missing");
    }
    std::string bytes = read_text(p);
    if (sha256_hex(bytes) != e.sha256) {
      throw ChecksumError("checksum mismatch for '" + e.path + "'");
    }
    verified[e.path] = std::move(bytes);
  }

  std::map<std::uint64_t, std::map<std::string, std::string>> by_turn;
  for (const auto& e : s.manifest_) {
    if (!by_turn[e.turn].emplace(e.kind, e.path).second) {
      throw ChecksumError("manifest lists '" + e.kind + "' twice for turn " +
                          std::to_string(e.turn));
    }
  }
  if (by_turn.empty() || !by_turn.begin()->second.count("config")) {
    throw ChecksumError("manifest has no session config");
  }
  parse_session_config(verified.at(by_turn.begin()->second.at("config")), s.opts_,
                       s.shape_);

  const std::uint64_t last = by_turn.rbegin()->first;
  const bool want_high = s.opts_.lfa.aligns_high();
  for (std::uint64_t k = 0; k <= last; ++k) {
    auto it = by_turn.find(k);
    if (it == by_turn.end() || !it->second.count("latent") ||
        !it->second.count("anchor") || want_high != it->second.count("anchor_high")) {
      throw ChecksumError("manifest is incomplete at turn " + std::to_string(k));
    }
  }
  const auto& tail = by_turn.at(last);
  s.state_.low = deserialize_anchor(verified.at(tail.at("anchor")), s.shape_.channels);
  if (want_high) {
    s.state_.high =
        deserialize_anchor(verified.at(tail.at("anchor_high")), s.shape_.channels);
  }
  if (s.state_.low.turn != last || (s.state_.high && s.state_.high->turn != last)) {
    throw ChecksumError("anchor turn does not match session turn " +
                        std::to_string(last));
  }
  return s;
}

void Session::commit(const LfaStepResult& step, const std::vector<std::uint8_t>* png) {
  const std::uint64_t k = step.state.turn();
  std::vector<ManifestEntry> m = manifest_;
  const std::string lat = numbered("latents", "turn", k, ".npy");
  m.push_back({k, "latent", lat, write_artifact(lat, as_string(encode_npy(step.z_hat)))});
  const std::string anc = numbered("anchors", "anchor", k, ".txt");
  m.push_back({k, "anchor", anc, write_artifact(anc, serialize_anchor(step.state.low))});
  if (step.state.high) {
    const std::string hi = numbered("anchors", "high", k, ".txt");
    m.push_back({k, "anchor_high", hi,
                 write_artifact(hi, serialize_anchor(*step.state.high))});
  }
  if (png) {
    const std::string img = numbered("images", "turn", k, ".png");
    m.push_back({k, "image", img, write_artifact(img, as_string(*png))});
  }
  write_manifest(m);
  manifest_ = std::move(m);
  state_ = step.state;
}

LfaStepResult Session::step_latent(const LatentTensor& z_tilde) {
  if (!(z_tilde.shape() == shape_)) {
    throw FormatError("latent shape " + to_string(z_tilde.shape()) +
                      " does not match session shape " + to_string(shape_));
  }
  LfaStepResult step = lfa_step(z_tilde, state_, opts_.lfa);
  commit(step, nullptr);
  return step;
}

std::vector<std::uint8_t> Session::step_image(const std::vector<std::uint8_t>& png) {
  if (!opts_.adapter.configured()) {
    throw AdapterError("an image input needs both encode and decode commands");
  }
  const LatentTensor z_tilde = adapter_encode(opts_.adapter, png);
  if (!(z_tilde.shape() == shape_)) {
    throw AdapterError("encoder produced shape " + to_string(z_tilde.shape()) +
                       ", session expects " + to_string(shape_));
  }
  const LfaStepResult step = lfa_step(z_tilde, state_, opts_.lfa);
  std::vector<std::uint8_t> out = adapter_decode(opts_.adapter, step.z_hat);
  commit(step, &out);
  return out;
}

LatentTensor Session::latent(std::uint64_t k) const {
  for (const auto& e : manifest_) {
    if (e.turn == k && e.kind == "latent") {
      const std::vector<std::uint8_t> bytes = read_file_bytes(dir_ / e.path);
      if (sha256_hex(bytes) != e.sha256) {
        throw ChecksumError("checksum mismatch for '" + e.path + "'");
      }
      return decode_npy(bytes, shape_);
    }
  }
  throw IoError("session has no latent for turn " + std::to_string(k));
}

std::string Session::anchor_digest() const {
  return sha256_hex(serialize_anchor(state_.low));
}

DriftReport Session::export_report() const {
  const LatentTensor z0 = latent(0);
  const DriftMeter meter(z0, opts_.drift);
  DriftReport report;
  report.header.emplace_back("session", opts_.id);
  report.header.emplace_back("latent_domain", "latent");
  for (auto& kv : alignment_config_entries(opts_.lfa, "lfa.")) {
    report.header.push_back(std::move(kv));
  }
  report.header.emplace_back("report.r_split", format_double(opts_.drift.r_split));
  report.header.emplace_back("report.bins", std::to_string(opts_.drift.bins));
  for (std::uint64_t k = 1; k <= turn(); ++k) {
    report.turns.push_back(meter.measure(latent(k), k));
  }
  return report;
}

}  // namespace vaelfa
