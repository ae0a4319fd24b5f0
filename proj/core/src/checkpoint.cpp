// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <map>

#include "mcod/errors.hpp"

namespace mcod {

namespace {

constexpr char kMagic[8] = {'M', 'C', 'O', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

enum class EntryType : std::uint8_t { f64 = 0, u64 = 1, bytes = 2 };

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw FormatError("truncated checkpoint: " + path);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

struct Entry {
  EntryType type;
  std::vector<double> f64s;
  std::vector<std::uint64_t> u64s;
  std::string bytes;
};

class Writer {
 public:
  Writer() {
    out_.append(kMagic, sizeof kMagic);
    put_u32(out_, kVersion);
  }

  void add_f64(const std::string& name, const std::vector<double>& v) {
    header(name, EntryType::f64, v.size());
    for (double d : v) put_f64(out_, d);
  }
  void add_u64(const std::string& name, const std::vector<std::uint64_t>& v) {
    header(name, EntryType::u64, v.size());
    for (std::uint64_t x : v) put_u64(out_, x);
  }
  void add_bytes(const std::string& name, const std::string& v) {
    header(name, EntryType::bytes, v.size());
    out_ += v;
  }

  std::string finish() {
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(out_.data()), static_cast<uInt>(out_.size())));
    put_u32(out_, crc);
    return std::move(out_);
  }

 private:
  void header(const std::string& name, EntryType t, std::size_t count) {
    put_u32(out_, static_cast<std::uint32_t>(name.size()));
    out_ += name;
    out_.push_back(static_cast<char>(t));
    put_u64(out_, count);
  }
  std::string out_;
};

std::map<std::string, Entry> parse_entries(const std::string& buf, const std::string& path) {
  if (buf.size() < sizeof kMagic + 8) throw FormatError("truncated checkpoint: " + path);
  if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a checkpoint file (bad magic): " + path);
  }
  const auto stored_crc_offset = buf.size() - 4;
  Reader crc_reader{buf, stored_crc_offset, path};
  const std::uint32_t stored_crc = crc_reader.u32();
  const auto computed = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(stored_crc_offset)));
  if (stored_crc != computed) throw FormatError("checkpoint CRC mismatch: " + path);

  Reader r{buf, sizeof kMagic, path};
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw CompatibilityError("checkpoint version " + std::to_string(version) + " unsupported (want " +
                             std::to_string(kVersion) + "): " + path);
  }
  std::map<std::string, Entry> entries;
  while (r.pos < stored_crc_offset) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.raw(name_len);
    r.need(1);
    const auto type = static_cast<EntryType>(static_cast<unsigned char>(buf[r.pos]));
    r.pos += 1;
    const std::uint64_t count = r.u64();
    Entry e;
    e.type = type;
    switch (type) {
      case EntryType::f64:
        e.f64s.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) e.f64s.push_back(r.f64());
        break;
      case EntryType::u64:
        e.u64s.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) e.u64s.push_back(r.u64());
        break;
      case EntryType::bytes:
        e.bytes = r.raw(count);
        break;
      default:
        throw FormatError("unknown checkpoint entry type in " + path);
    }
    entries.emplace(name, std::move(e));
  }
  return entries;
}

const Entry& get(const std::map<std::string, Entry>& entries, const std::string& name,
                 EntryType type, const std::string& path) {
  auto it = entries.find(name);
  if (it == entries.end()) throw FormatError("checkpoint missing entry '" + name + "': " + path);
  if (it->second.type != type) throw FormatError("checkpoint entry '" + name + "' has wrong type: " + path);
  return it->second;
}

}  // namespace

void save_checkpoint(const TrainerState& state, const MixSpec& mix, const std::string& path) {
  Writer w;
  w.add_bytes("config", config_to_text(RunConfig{state.config, mix}));
  w.add_u64("epoch", {static_cast<std::uint64_t>(state.epoch)});
  w.add_u64("adam.step", {static_cast<std::uint64_t>(state.adam.step)});
  const ParamSet& qp = state.q_tower.params;
  for (std::size_t i = 0; i < qp.size(); ++i) {
    w.add_f64("q." + qp.names()[i], qp.tensor(i).values());
    w.add_f64("k." + qp.names()[i], state.k_tower.params.tensor(i).values());
    w.add_f64("adam.m." + qp.names()[i], state.adam.m[i]);
    w.add_f64("adam.v." + qp.names()[i], state.adam.v[i]);
  }
  w.add_u64("bank.initialized", {state.bank.initialized() ? 1ull : 0ull});
  if (state.bank.initialized()) w.add_f64("bank.m", state.bank.prototypes().values());
  std::vector<std::uint64_t> support;
  for (auto v : state.bank.support()) support.push_back(static_cast<std::uint64_t>(v));
  w.add_u64("bank.n", support);
  w.add_u64("bank.rng", {state.bank.noise_rng_state()});
  const QueueSnapshot snap = state.queue.snapshot();
  w.add_f64("queue.f", snap.f.values());
  w.add_f64("queue.z", snap.z.values());
  w.add_f64("queue.c", snap.c.values());
  w.add_u64("queue.inserted", {state.queue.total_inserted()});

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const std::string blob = w.finish();
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto entries = parse_entries(buf, path);

  const RunConfig cfg = parse_config(get(entries, "config", EntryType::bytes, path).bytes);
  TrainerState state = make_initial_state(cfg.train);
  state.epoch = static_cast<int>(get(entries, "epoch", EntryType::u64, path).u64s.at(0));
  state.adam.step = static_cast<std::int64_t>(get(entries, "adam.step", EntryType::u64, path).u64s.at(0));

  auto load_values = [&](const std::string& name, std::vector<double>& dst) {
    const auto& e = get(entries, name, EntryType::f64, path);
    if (e.f64s.size() != dst.size()) {
      throw FormatError("checkpoint entry '" + name + "' has unexpected length: " + path);
    }
    dst = e.f64s;
  };
  ParamSet& qp = state.q_tower.params;
  for (std::size_t i = 0; i < qp.size(); ++i) {
    load_values("q." + qp.names()[i], qp.tensor(i).values());
    load_values("k." + qp.names()[i], state.k_tower.params.tensor(i).values());
    load_values("adam.m." + qp.names()[i], state.adam.m[i]);
    load_values("adam.v." + qp.names()[i], state.adam.v[i]);
  }

  const bool bank_init = get(entries, "bank.initialized", EntryType::u64, path).u64s.at(0) != 0;
  Tensor prototypes;
  if (bank_init) {
    const auto& m = get(entries, "bank.m", EntryType::f64, path);
    const int k = cfg.train.encoder.num_prototypes;
    const int df = cfg.train.encoder.feature_dim;
    if (m.f64s.size() != static_cast<std::size_t>(k) * static_cast<std::size_t>(df)) {
      throw FormatError("checkpoint entry 'bank.m' has unexpected length: " + path);
    }
    prototypes = Tensor({k, df}, m.f64s);
  }
  std::vector<std::int64_t> support;
  for (auto v : get(entries, "bank.n", EntryType::u64, path).u64s) {
    support.push_back(static_cast<std::int64_t>(v));
  }
  state.bank.restore(std::move(prototypes), std::move(support),
                     get(entries, "bank.rng", EntryType::u64, path).u64s.at(0), bank_init);

  const auto& qf = get(entries, "queue.f", EntryType::f64, path).f64s;
  const auto& qz = get(entries, "queue.z", EntryType::f64, path).f64s;
  const auto& qc = get(entries, "queue.c", EntryType::f64, path).f64s;
  const int df = cfg.train.encoder.feature_dim;
  const int dz = cfg.train.encoder.embedding_dim;
  const int k = cfg.train.encoder.num_prototypes;
  if (qf.size() % static_cast<std::size_t>(df) != 0) {
    throw FormatError("checkpoint entry 'queue.f' has unexpected length: " + path);
  }
  const int rows = static_cast<int>(qf.size() / static_cast<std::size_t>(df));
  if (qz.size() != static_cast<std::size_t>(rows) * dz || qc.size() != static_cast<std::size_t>(rows) * k) {
    throw FormatError("checkpoint queue entries disagree on row count: " + path);
  }
  QueueSnapshot snap;
  snap.f = Tensor({rows, df}, qf);
  snap.z = Tensor({rows, dz}, qz);
  snap.c = Tensor({rows, k}, qc);
  state.queue.restore(snap, get(entries, "queue.inserted", EntryType::u64, path).u64s.at(0));

  return LoadedCheckpoint{std::move(state), cfg.mix};
}

}  // namespace mcod
