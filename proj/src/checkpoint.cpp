#include "adavsr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace adavsr {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMagic = "ADAVSR-CHECKPOINT 1";

std::string shape_string(const std::vector<int>& shape) {
  std::string s;
  for (size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s;
}

std::vector<int> parse_shape(const std::string& s) {
  std::vector<int> shape;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) shape.push_back(std::stoi(part));
  return shape;
}

void put_floats(std::string& out, const std::vector<float>& values) {
  for (float f : values) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(f);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
    char b[4];
    std::memcpy(b, &u, 4);
    out.append(b, 4);
  }
}

std::vector<float> get_floats(const std::string& payload, size_t offset, size_t count) {
  if ((offset + count) * 4 > payload.size()) throw Error("checkpoint payload truncated");
  std::vector<float> out(count);
  for (size_t i = 0; i < count; ++i) {
    std::uint32_t u;
    std::memcpy(&u, payload.data() + (offset + i) * 4, 4);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

std::map<std::string, std::string> parse_fields(std::istringstream& in) {
  std::map<std::string, std::string> fields;
  std::string tok;
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error("checkpoint: malformed field '" + tok + "'");
    fields[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return fields;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  const ArchitectureSpec& a = ckpt.model.tsr.net->arch;
  std::ostringstream manifest;
  manifest << kMagic << "\n";
  manifest << "arch channels=" << a.channels << " tsr_features=" << a.tsr_features
           << " tsr_hidden_layers=" << a.tsr_hidden_layers << " ssr_features=" << a.ssr_features
           << " ssr_hidden_layers=" << a.ssr_hidden_layers << " activation=" << to_string(a.activation) << "\n";
  manifest << "config_hash " << (ckpt.config_hash.empty() ? "-" : ckpt.config_hash) << "\n";
  manifest << "state phase=" << ckpt.phase << " step=" << ckpt.step;
  if (ckpt.optimizer) manifest << " adam_t_tsr=" << ckpt.optimizer->tsr.t << " adam_t_ssr=" << ckpt.optimizer->ssr.t;
  manifest << "\n";

  std::string payload;
  size_t offset = 0;
  std::ostringstream entries;
  size_t n_entries = 0;
  auto emit = [&](const std::string& name, const std::vector<int>& shape, const float* data, size_t count) {
    entries << "entry " << name << " " << shape_string(shape) << " " << offset << " " << count << "\n";
    put_floats(payload, std::vector<float>(data, data + count));
    offset += count;
    ++n_entries;
  };
  for (const ParamSet* p : {&ckpt.model.tsr, &ckpt.model.ssr})
    for (const ParamEntry& e : p->net->entries) emit(e.name, e.shape, p->values.data() + e.offset, e.count);
  if (ckpt.optimizer) {
    auto emit_state = [&](const std::string& prefix, const AdamState& s, size_t n) {
      if (s.m.empty()) return;
      if (s.m.size() != n || s.v.size() != n) throw Error("checkpoint: optimizer state size mismatch");
      emit(prefix + ".m", {static_cast<int>(n)}, s.m.data(), n);
      emit(prefix + ".v", {static_cast<int>(n)}, s.v.data(), n);
    };
    emit_state("opt.tsr", ckpt.optimizer->tsr, ckpt.model.tsr.size());
    emit_state("opt.ssr", ckpt.optimizer->ssr, ckpt.model.ssr.size());
  }
  manifest << "entries " << n_entries << "\n" << entries.str() << "end\n";

  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    const std::string head = manifest.str();
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw Error("failed writing checkpoint " + path.string());
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw Error("not a checkpoint: " + path.string());

  ArchitectureSpec arch;
  Checkpoint ckpt;
  std::optional<std::int64_t> t_tsr, t_ssr;
  struct Entry {
    std::string name;
    std::vector<int> shape;
    size_t offset, count;
  };
  std::vector<Entry> entries;
  bool ended = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "arch") {
      auto f = parse_fields(ls);
      arch.channels = std::stoi(f.at("channels"));
      arch.tsr_features = std::stoi(f.at("tsr_features"));
      arch.tsr_hidden_layers = std::stoi(f.at("tsr_hidden_layers"));
      arch.ssr_features = std::stoi(f.at("ssr_features"));
      arch.ssr_hidden_layers = std::stoi(f.at("ssr_hidden_layers"));
      arch.activation = parse_activation(f.at("activation"));
    } else if (key == "config_hash") {
      ls >> ckpt.config_hash;
      if (ckpt.config_hash == "-") ckpt.config_hash.clear();
    } else if (key == "state") {
      auto f = parse_fields(ls);
      ckpt.phase = f.at("phase");
      ckpt.step = std::stoll(f.at("step"));
      if (f.count("adam_t_tsr")) t_tsr = std::stoll(f.at("adam_t_tsr"));
      if (f.count("adam_t_ssr")) t_ssr = std::stoll(f.at("adam_t_ssr"));
    } else if (key == "entries") {
      continue;
    } else if (key == "entry") {
      Entry e;
      std::string shape;
      ls >> e.name >> shape >> e.offset >> e.count;
      if (!ls) throw Error("checkpoint: malformed entry line '" + line + "'");
      e.shape = parse_shape(shape);
      entries.push_back(std::move(e));
    } else if (key == "end") {
      ended = true;
      break;
    } else {
      throw Error("checkpoint: unknown manifest line '" + line + "'");
    }
  }
  if (!ended) throw Error("checkpoint: manifest not terminated");
  std::ostringstream rest;
  rest << in.rdbuf();
  const std::string payload = rest.str();

  ckpt.model = init_params(arch, 0);
  std::map<std::string, std::vector<float>> extra;
  size_t placed_params = 0;
  for (const Entry& e : entries) {
    std::vector<float> data = get_floats(payload, e.offset, e.count);
    bool placed = false;
    for (ParamSet* p : {&ckpt.model.tsr, &ckpt.model.ssr}) {
      for (const ParamEntry& pe : p->net->entries) {
        if (pe.name != e.name) continue;
        if (pe.shape != e.shape || pe.count != e.count) throw Error("checkpoint: shape mismatch for " + e.name);
        std::copy(data.begin(), data.end(), p->values.begin() + static_cast<ptrdiff_t>(pe.offset));
        placed = true;
        placed_params += pe.count;
      }
    }
    if (!placed) extra[e.name] = std::move(data);
  }
  if (placed_params != ckpt.model.size()) throw Error("checkpoint: missing parameter entries in " + path.string());
  if (t_tsr || t_ssr) {
    OptimizerState opt;
    auto take = [&](const std::string& name) {
      auto it = extra.find(name);
      return it == extra.end() ? std::vector<float>{} : it->second;
    };
    opt.tsr = AdamState{take("opt.tsr.m"), take("opt.tsr.v"), t_tsr.value_or(0)};
    opt.ssr = AdamState{take("opt.ssr.m"), take("opt.ssr.v"), t_ssr.value_or(0)};
    ckpt.optimizer = std::move(opt);
  }
  return ckpt;
}

}  // namespace adavsr
