#include <cstring>
#include <map>
#include <sstream>

#include "sidnet/formats.hpp"
#include "sidnet/train.hpp"

namespace sidnet {

namespace {

const char kMagic[8] = {'S', 'I', 'D', 'N', 'E', 'T', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t get_u32(const std::string& bytes, std::size_t& pos) {
  if (pos + 4 > bytes.size()) throw FormatError("checkpoint: truncated u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos + static_cast<std::size_t>(i)]))
         << (8 * i);
  pos += 4;
  return v;
}

void append_record(std::string& payload, const std::string& name, const Shape& shape,
                   const float* data) {
  put_u32(payload, static_cast<std::uint32_t>(name.size()));
  payload += name;
  payload.push_back(static_cast<char>(shape.size()));
  std::int64_t n = 1;
  for (int d : shape) {
    put_u32(payload, static_cast<std::uint32_t>(d));
    n *= d;
  }
  const std::size_t at = payload.size();
  payload.resize(at + static_cast<std::size_t>(n) * 4);
  std::memcpy(payload.data() + at, data, static_cast<std::size_t>(n) * 4);
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t at = s.find(sep, start);
    if (at == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, at - start));
    start = at + 1;
  }
}

std::string arch_string(const ModelConfig& cfg) {
  std::ostringstream os;
  os << "on:";
  for (std::size_t i = 0; i < cfg.online_channels.size(); ++i)
    os << (i ? "/" : "") << cfg.online_channels[i];
  os << ";off:";
  for (std::size_t i = 0; i < cfg.offline_channels.size(); ++i)
    os << (i ? "/" : "") << cfg.offline_channels[i];
  os << ";h:" << cfg.hidden << ";cls:" << cfg.classes << ";fusion:" << fusion_name(cfg.fusion);
  return os.str();
}

ModelConfig parse_arch(const std::string& s) {
  ModelConfig cfg;
  for (const auto& field : split(s, ';')) {
    auto colon = field.find(':');
    if (colon == std::string::npos) throw FormatError("checkpoint: bad arch field '" + field + "'");
    std::string key = field.substr(0, colon), value = field.substr(colon + 1);
    if (key == "on" || key == "off") {
      auto dims = split(value, '/');
      if (key == "on") {
        if (dims.size() != cfg.online_channels.size())
          throw FormatError("checkpoint: bad online channel plan");
        for (std::size_t i = 0; i < dims.size(); ++i) cfg.online_channels[i] = std::stoi(dims[i]);
      } else {
        if (dims.size() != cfg.offline_channels.size())
          throw FormatError("checkpoint: bad offline channel plan");
        for (std::size_t i = 0; i < dims.size(); ++i) cfg.offline_channels[i] = std::stoi(dims[i]);
      }
    } else if (key == "h") {
      cfg.hidden = std::stoi(value);
    } else if (key == "cls") {
      cfg.classes = std::stoi(value);
    } else if (key == "fusion") {
      if (value == "conditional") {
        cfg.fusion = FusionKind::Conditional;
      } else if (value == "sum") {
        cfg.fusion = FusionKind::Sum;
      } else if (value == "concat") {
        cfg.fusion = FusionKind::Concat;
      } else if (value == "product") {
        cfg.fusion = FusionKind::Product;
      } else {
        throw FormatError("checkpoint: unknown fusion kind '" + value + "'");
      }
    } else {
      throw FormatError("checkpoint: unknown arch key '" + key + "'");
    }
  }
  return cfg;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, ScriptNetF& model,
                     const std::string& train_level) {
  std::string payload;
  const float zero = 0.0f;
  append_record(payload, "meta/arch=" + arch_string(model.cfg), {1}, &zero);
  append_record(payload, "meta/labels=" + join(model.labels, ','), {1}, &zero);
  append_record(payload, "meta/train_level=" + train_level, {1}, &zero);
  for (const auto& ref : model.named_state()) append_record(payload, ref.name, ref.shape, ref.data);

  std::string out(kMagic, sizeof(kMagic));
  out += payload;
  put_u32(out, crc32(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
  write_file(path, out);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::string bytes = read_file(path);
  if (bytes.size() < sizeof(kMagic) + 4 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError("checkpoint: bad magic in " + path.string());
  const std::size_t payload_end = bytes.size() - 4;
  {
    std::size_t pos = payload_end;
    std::uint32_t stored = get_u32(bytes, pos);
    std::uint32_t actual =
        crc32(reinterpret_cast<const std::uint8_t*>(bytes.data()) + sizeof(kMagic),
              payload_end - sizeof(kMagic));
    if (stored != actual) throw FormatError("checkpoint: CRC mismatch in " + path.string());
  }

  struct Record {
    Shape shape;
    std::size_t offset;  // into bytes
    std::int64_t count;
  };
  std::map<std::string, Record> records;
  std::string arch, labels_joined, train_level;
  std::size_t pos = sizeof(kMagic);
  while (pos < payload_end) {
    std::uint32_t name_len = get_u32(bytes, pos);
    if (pos + name_len > payload_end) throw FormatError("checkpoint: truncated name");
    std::string name = bytes.substr(pos, name_len);
    pos += name_len;
    if (pos >= payload_end) throw FormatError("checkpoint: truncated rank");
    int rank = static_cast<std::uint8_t>(bytes[pos++]);
    Record rec;
    rec.count = 1;
    for (int i = 0; i < rank; ++i) {
      int d = static_cast<int>(get_u32(bytes, pos));
      rec.shape.push_back(d);
      rec.count *= d;
    }
    if (pos + static_cast<std::size_t>(rec.count) * 4 > payload_end)
      throw FormatError("checkpoint: truncated values for '" + name + "'");
    rec.offset = pos;
    pos += static_cast<std::size_t>(rec.count) * 4;

    if (name.rfind("meta/arch=", 0) == 0) {
      arch = name.substr(10);
    } else if (name.rfind("meta/labels=", 0) == 0) {
      labels_joined = name.substr(12);
    } else if (name.rfind("meta/train_level=", 0) == 0) {
      train_level = name.substr(17);
    } else {
      records.emplace(std::move(name), rec);
    }
  }
  if (arch.empty() || labels_joined.empty())
    throw FormatError("checkpoint: missing meta records");

  LoadedCheckpoint loaded;
  loaded.train_level = train_level;
  loaded.model = ScriptNetF::make(parse_arch(arch), split(labels_joined, ','));
  for (auto& ref : loaded.model.named_state()) {
    auto it = records.find(ref.name);
    if (it == records.end())
      throw FormatError("checkpoint: missing record '" + ref.name + "'");
    if (it->second.shape != ref.shape)
      throw FormatError("checkpoint: shape mismatch for '" + ref.name + "': stored " +
                        shape_str(it->second.shape) + " vs expected " + shape_str(ref.shape));
    std::memcpy(ref.data, bytes.data() + it->second.offset,
                static_cast<std::size_t>(it->second.count) * 4);
    records.erase(it);
  }
  if (!records.empty())
    throw FormatError("checkpoint: unexpected record '" + records.begin()->first + "'");
  return loaded;
}

}  // namespace sidnet
