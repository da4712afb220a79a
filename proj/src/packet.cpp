#include "fuzzlab/packet.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "fuzzlab/error.hpp"

namespace fuzzlab {

namespace {

class LayerBuilder {
 public:
  explicit LayerBuilder(LayerKind kind) : schema_{kind, 0, {}} {}

  LayerBuilder& field(std::string name, std::uint32_t width, FieldKind kind, bool fuzzable) {
    schema_.fields.push_back(
        FieldSchema{std::move(name), schema_.kind, schema_.bit_length, width, std::move(kind), fuzzable});
    schema_.bit_length += width;
    return *this;
  }
  LayerBuilder& range(std::string name, std::uint32_t width, bool fuzzable = true) {
    const std::uint64_t hi = width >= 64 ? ~0ULL : (1ULL << width) - 1;
    return field(std::move(name), width, RangeKind{0, hi}, fuzzable);
  }
  LayerBuilder& fixed(std::string name, std::uint32_t width, std::vector<std::uint64_t> values,
                      bool fuzzable = false) {
    return field(std::move(name), width, EnumKind{std::move(values)}, fuzzable);
  }
  LayerBuilder& mac(std::string name) { return field(std::move(name), 48, AddressKind{AddressFamily::Mac}, true); }
  LayerBuilder& ip(std::string name) { return field(std::move(name), 32, AddressKind{AddressFamily::Ipv4}, true); }
  LayerBuilder& computed(std::string name, std::uint32_t width, ComputedRole role) {
    return field(std::move(name), width, ComputedKind{role}, false);
  }
  LayerBuilder& opaque(std::string name, std::size_t bytes) {
    return field(std::move(name), static_cast<std::uint32_t>(bytes * 8), OpaqueKind{bytes}, false);
  }
  LayerBuilder& tail(std::string name) {
    schema_.fields.push_back(FieldSchema{std::move(name), schema_.kind, schema_.bit_length, 0, OpaqueKind{0}, false});
    return *this;
  }
  LayerSchema build() { return schema_; }

 private:
  LayerSchema schema_;
};

std::vector<LayerSchema> build_schemas() {
  std::vector<LayerSchema> out;
  out.push_back(LayerBuilder(LayerKind::Eth).mac("dst").mac("src").fixed("ethertype", 16, {0x0800, 0x0806}).build());

  out.push_back(LayerBuilder(LayerKind::Arp)
                    .fixed("htype", 16, {1})
                    .fixed("ptype", 16, {0x0800})
                    .fixed("hlen", 8, {6})
                    .fixed("plen", 8, {4})
                    .fixed("oper", 16, {1, 2})
                    .mac("sha")
                    .ip("spa")
                    .mac("tha")
                    .ip("tpa")
                    .build());

  // flags: the three adjacent flag bits are one field; the reserved bit
  // must stay clear, which leaves {0, 2, 4, 6}.
  out.push_back(LayerBuilder(LayerKind::Ip)
                    .fixed("version", 4, {4})
                    .fixed("ihl", 4, {5})
                    .range("dscp", 6)
                    .range("ecn", 2)
                    .computed("total_length", 16, ComputedRole::Length)
                    .range("identification", 16)
                    .fixed("flags", 3, {0, 2, 4, 6}, true)
                    .fixed("frag_offset", 13, {0})
                    .range("ttl", 8)
                    .fixed("protocol", 8, {6, 17})
                    .computed("header_checksum", 16, ComputedRole::Checksum)
                    .ip("src")
                    .ip("dst")
                    .build());

  out.push_back(LayerBuilder(LayerKind::Udp)
                    .range("sport", 16)
                    .range("dport", 16)
                    .computed("length", 16, ComputedRole::Length)
                    .computed("checksum", 16, ComputedRole::Checksum)
                    .build());

  // control groups URG/ACK/PSH/RST/SYN/FIN; only combinations a TCP stack
  // actually emits are valid.
  out.push_back(LayerBuilder(LayerKind::Tcp)
                    .range("sport", 16)
                    .range("dport", 16)
                    .range("seq", 32)
                    .range("ack", 32)
                    .fixed("data_offset", 4, {5})
                    .fixed("reserved", 3, {0})
                    .range("ecn_bits", 3)
                    .fixed("control", 6, {0x02, 0x04, 0x10, 0x11, 0x12, 0x14, 0x18, 0x30, 0x38}, true)
                    .range("window", 16)
                    .computed("checksum", 16, ComputedRole::Checksum)
                    .range("urgent_ptr", 16)
                    .build());

  // Header, then a fixed 32-byte label-encoded name so the question section
  // always starts 12 bytes into the layer.
  out.push_back(LayerBuilder(LayerKind::Dns)
                    .range("id", 16)
                    .fixed("qr", 1, {0, 1})
                    .fixed("opcode", 4, {0})
                    .range("aa", 1)
                    .range("tc", 1)
                    .range("rd", 1)
                    .range("ra", 1)
                    .fixed("z", 1, {0})
                    .range("ad", 1)
                    .range("cd", 1)
                    .range("rcode", 4)
                    .computed("qdcount", 16, ComputedRole::Count)
                    .computed("ancount", 16, ComputedRole::Count)
                    .fixed("nscount", 16, {0})
                    .fixed("arcount", 16, {0})
                    .opaque("qname", 32)
                    .fixed("qtype", 16, {1})
                    .fixed("qclass", 16, {1})
                    .build());

  out.push_back(LayerBuilder(LayerKind::DnsRr)
                    .fixed("name", 16, {0xc00c})
                    .fixed("type", 16, {1})
                    .fixed("class", 16, {1})
                    .field("ttl", 32, RangeKind{0, 0x7fffffff}, true)
                    .computed("rdlength", 16, ComputedRole::Length)
                    .ip("rdata")
                    .build());

  out.push_back(LayerBuilder(LayerKind::Telnet).tail("data").build());

  LayerBuilder authp(LayerKind::Authp);
  authp.fixed("magic", 32, {0x41555448})
      .fixed("stage", 8, {0, 1, 2, 3, 4, 5})
      .fixed("direction", 8, {0, 1})
      .fixed("mechanism", 8, {0, 1, 2})
      .field("command_class", 8, RangeKind{0, 15}, false)
      .fixed("status", 8, {0, 1, 2, 3})
      .range("flags", 16)
      .range("capabilities", 16)
      .range("session_token", 32)
      .range("process_id", 16)
      .range("multiplex_id", 16);
  for (int i = 0; i < 12; ++i) authp.range("reserved" + std::to_string(i), 8);
  authp.computed("length", 16, ComputedRole::Length).computed("checksum", 16, ComputedRole::Checksum).tail("payload");
  out.push_back(authp.build());
  return out;
}

constexpr std::array<std::string_view, 9> kLayerNames = {"eth", "arp", "ip", "udp", "tcp",
                                                         "dns", "dnsrr", "telnet", "authp"};

void put_bits(Bytes& out, std::size_t bit_offset, std::uint32_t width, std::uint64_t value) {
  for (std::uint32_t i = 0; i < width; ++i) {
    const std::size_t bit = bit_offset + i;
    const bool on = (value >> (width - 1 - i)) & 1U;
    const auto mask = static_cast<std::uint8_t>(0x80U >> (bit % 8));
    if (on)
      out[bit / 8] |= mask;
    else
      out[bit / 8] &= static_cast<std::uint8_t>(~mask);
  }
}

std::uint64_t get_bits(std::span<const std::uint8_t> in, std::size_t bit_offset, std::uint32_t width) {
  std::uint64_t v = 0;
  for (std::uint32_t i = 0; i < width; ++i) {
    const std::size_t bit = bit_offset + i;
    v = (v << 1) | ((in[bit / 8] >> (7 - bit % 8)) & 1U);
  }
  return v;
}

const std::vector<std::vector<LayerKind>>& known_stacks() {
  using L = LayerKind;
  static const std::vector<std::vector<LayerKind>> stacks = {
      {L::Eth, L::Arp},
      {L::Eth, L::Ip, L::Udp},
      {L::Eth, L::Ip, L::Udp, L::Dns},
      {L::Eth, L::Ip, L::Udp, L::Dns, L::DnsRr},
      {L::Eth, L::Ip, L::Tcp},
      {L::Eth, L::Ip, L::Tcp, L::Telnet},
      {L::Eth, L::Ip, L::Tcp, L::Authp},
  };
  return stacks;
}

std::size_t tail_size(const LayerValues& layer, const LayerSchema& schema) {
  const FieldSchema* tail = schema.tail();
  if (tail == nullptr) return 0;
  auto it = layer.fields.find(tail->name);
  if (it == layer.fields.end()) return 0;
  return std::get<Bytes>(it->second).size();
}

std::uint16_t transport_checksum(const Bytes& raw, std::size_t ip_start, std::size_t seg_start, std::size_t seg_end,
                                 std::uint8_t protocol) {
  Bytes buf;
  buf.reserve(12 + seg_end - seg_start);
  buf.insert(buf.end(), raw.begin() + static_cast<std::ptrdiff_t>(ip_start + 12),
             raw.begin() + static_cast<std::ptrdiff_t>(ip_start + 20));
  const auto seg_len = static_cast<std::uint16_t>(seg_end - seg_start);
  buf.push_back(0);
  buf.push_back(protocol);
  buf.push_back(static_cast<std::uint8_t>(seg_len >> 8));
  buf.push_back(static_cast<std::uint8_t>(seg_len & 0xff));
  buf.insert(buf.end(), raw.begin() + static_cast<std::ptrdiff_t>(seg_start),
             raw.begin() + static_cast<std::ptrdiff_t>(seg_end));
  return internet_checksum(buf);
}

}  // namespace

std::string_view layer_name(LayerKind kind) { return kLayerNames[static_cast<std::size_t>(kind)]; }

std::optional<LayerKind> parse_layer(std::string_view name) {
  for (std::size_t i = 0; i < kLayerNames.size(); ++i)
    if (kLayerNames[i] == name) return static_cast<LayerKind>(i);
  return std::nullopt;
}

std::string FieldSchema::path() const { return std::string(layer_name(layer)) + "." + name; }

bool FieldSchema::is_variable() const {
  const auto* o = std::get_if<OpaqueKind>(&kind);
  return o != nullptr && o->length == 0;
}

const FieldSchema* LayerSchema::find(std::string_view name) const {
  for (const auto& f : fields)
    if (f.name == name) return &f;
  return nullptr;
}

const FieldSchema* LayerSchema::tail() const {
  if (!fields.empty() && fields.back().is_variable()) return &fields.back();
  return nullptr;
}

const std::vector<LayerSchema>& all_layer_schemas() {
  static const std::vector<LayerSchema> schemas = build_schemas();
  return schemas;
}

const LayerSchema& layer_schema(LayerKind kind) { return all_layer_schemas()[static_cast<std::size_t>(kind)]; }

std::pair<LayerKind, std::string_view> split_path(std::string_view path) {
  const auto dot = path.find('.');
  if (dot == std::string_view::npos) throw Error(ErrorCode::UnknownField, std::string(path));
  auto layer = parse_layer(path.substr(0, dot));
  if (!layer) throw Error(ErrorCode::UnknownField, std::string(path));
  return {*layer, path.substr(dot + 1)};
}

const FieldSchema& field_schema(std::string_view path) {
  auto [layer, name] = split_path(path);
  const FieldSchema* f = layer_schema(layer).find(name);
  if (f == nullptr) throw Error(ErrorCode::UnknownField, std::string(path));
  return *f;
}

bool value_fits(const FieldSchema& schema, const FieldValue& value) {
  if (const auto* o = std::get_if<OpaqueKind>(&schema.kind)) {
    const auto* b = std::get_if<Bytes>(&value);
    return b != nullptr && (o->length == 0 || b->size() == o->length);
  }
  const auto* v = std::get_if<std::uint64_t>(&value);
  if (v == nullptr) return false;
  if (schema.bit_width < 64 && (*v >> schema.bit_width) != 0) return false;
  if (const auto* r = std::get_if<RangeKind>(&schema.kind)) return *v >= r->lo && *v <= r->hi;
  if (const auto* e = std::get_if<EnumKind>(&schema.kind))
    return std::find(e->values.begin(), e->values.end(), *v) != e->values.end();
  return true;
}

void validate_value(const FieldSchema& schema, const FieldValue& value) {
  if (!value_fits(schema, value)) throw Error(ErrorCode::ValueOutOfRange, schema.path());
}

std::string to_hex(const Bytes& b) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(b.size() * 2);
  for (auto c : b) {
    s.push_back(digits[c >> 4]);
    s.push_back(digits[c & 15]);
  }
  return s;
}

Bytes from_hex(std::string_view s) {
  if (s.size() % 2 != 0) throw Error(ErrorCode::ParseError, "odd-length hex string");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorCode::ParseError, "bad hex digit");
  };
  Bytes out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
  return out;
}

nlohmann::json value_to_json(const FieldValue& value) {
  if (const auto* v = std::get_if<std::uint64_t>(&value)) return *v;
  return to_hex(std::get<Bytes>(value));
}

FieldValue value_from_json(const FieldSchema& schema, const nlohmann::json& j) {
  if (schema.is_opaque()) {
    if (!j.is_string()) throw Error(ErrorCode::ParseError, schema.path() + " expects hex string");
    return from_hex(j.get<std::string>());
  }
  if (!j.is_number_unsigned()) throw Error(ErrorCode::ParseError, schema.path() + " expects unsigned integer");
  return j.get<std::uint64_t>();
}

std::string mac_to_string(std::uint64_t mac) {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", unsigned(mac >> 40 & 0xff),
                unsigned(mac >> 32 & 0xff), unsigned(mac >> 24 & 0xff), unsigned(mac >> 16 & 0xff),
                unsigned(mac >> 8 & 0xff), unsigned(mac & 0xff));
  return buf;
}

std::string ipv4_to_string(std::uint32_t ip) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", ip >> 24 & 0xff, ip >> 16 & 0xff, ip >> 8 & 0xff, ip & 0xff);
  return buf;
}

std::uint32_t ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
  return std::uint32_t{a} << 24 | std::uint32_t{b} << 16 | std::uint32_t{c} << 8 | d;
}

Packet::Packet(std::vector<LayerKind> stack) {
  if (!is_known_stack(stack)) throw Error(ErrorCode::UnknownLayerStack, "unsupported layer stack");
  for (auto k : stack) layers_.push_back(LayerValues{k, {}});
}

std::vector<LayerKind> Packet::stack() const {
  std::vector<LayerKind> s;
  for (const auto& l : layers_) s.push_back(l.kind);
  return s;
}

LayerValues* Packet::find_layer(LayerKind kind) {
  for (auto& l : layers_)
    if (l.kind == kind) return &l;
  return nullptr;
}

const LayerValues* Packet::find_layer(LayerKind kind) const {
  for (const auto& l : layers_)
    if (l.kind == kind) return &l;
  return nullptr;
}

bool Packet::has_layer(LayerKind kind) const { return find_layer(kind) != nullptr; }

bool Packet::has_field(std::string_view path) const {
  const auto dot = path.find('.');
  if (dot == std::string_view::npos) return false;
  auto layer = parse_layer(path.substr(0, dot));
  return layer && has_layer(*layer) && layer_schema(*layer).find(path.substr(dot + 1)) != nullptr;
}

const FieldValue& Packet::get(std::string_view path) const {
  auto [kind, name] = split_path(path);
  const LayerValues* layer = find_layer(kind);
  if (layer == nullptr || layer_schema(kind).find(name) == nullptr)
    throw Error(ErrorCode::UnknownField, std::string(path));
  auto it = layer->fields.find(name);
  if (it == layer->fields.end()) throw Error(ErrorCode::MissingField, std::string(path));
  return it->second;
}

std::uint64_t Packet::get_uint(std::string_view path) const { return std::get<std::uint64_t>(get(path)); }

const Bytes& Packet::get_bytes(std::string_view path) const { return std::get<Bytes>(get(path)); }

Packet& Packet::assign(std::string_view path, FieldValue value) {
  auto [kind, name] = split_path(path);
  LayerValues* layer = find_layer(kind);
  const FieldSchema* schema = layer_schema(kind).find(name);
  if (layer == nullptr || schema == nullptr) throw Error(ErrorCode::UnknownField, std::string(path));
  if (schema->is_computed()) throw Error(ErrorCode::ComputedFieldWrite, std::string(path));
  validate_value(*schema, value);
  layer->fields.insert_or_assign(std::string(name), std::move(value));
  finalized_ = false;
  raw_.clear();
  return *this;
}

void Packet::set_trailer(Bytes trailer) {
  trailer_ = std::move(trailer);
  finalized_ = false;
  raw_.clear();
}

bool Packet::same_fields(const Packet& other) const { return layers_ == other.layers_ && trailer_ == other.trailer_; }

Packet set_field(Packet packet, std::string_view path, FieldValue value) {
  packet.assign(path, std::move(value));
  return packet;
}

Packet finalize(Packet p) {
  std::vector<std::size_t> sizes;
  for (const auto& layer : p.layers_) {
    const LayerSchema& schema = layer_schema(layer.kind);
    for (const auto& f : schema.fields)
      if (!f.is_computed() && !layer.fields.contains(f.name))
        throw Error(ErrorCode::MissingField, f.path());
    sizes.push_back(schema.fixed_bytes() + tail_size(layer, schema));
  }
  auto bytes_from = [&](std::size_t i) {
    std::size_t n = 0;
    for (std::size_t j = i; j < sizes.size(); ++j) n += sizes[j];
    return n;
  };

  const bool has_rr = p.has_layer(LayerKind::DnsRr);
  for (std::size_t i = 0; i < p.layers_.size(); ++i) {
    auto& layer = p.layers_[i];
    for (const auto& f : layer_schema(layer.kind).fields) {
      if (!f.is_computed()) continue;
      std::uint64_t v = 0;
      const auto role = std::get<ComputedKind>(f.kind).role;
      if (role == ComputedRole::Length) {
        if (layer.kind == LayerKind::Ip || layer.kind == LayerKind::Udp)
          v = bytes_from(i);
        else if (layer.kind == LayerKind::DnsRr)
          v = 4;
        else if (layer.kind == LayerKind::Authp)
          v = tail_size(layer, layer_schema(layer.kind));
      } else if (role == ComputedRole::Count) {
        v = f.name == "qdcount" ? 1 : (has_rr ? 1 : 0);
      }
      layer.fields.insert_or_assign(f.name, v);
    }
  }

  // Encode with zero checksums, then patch innermost first.
  Bytes raw(bytes_from(0), 0);
  std::vector<std::size_t> starts;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < p.layers_.size(); ++i) {
    starts.push_back(pos);
    const auto& layer = p.layers_[i];
    for (const auto& f : layer_schema(layer.kind).fields) {
      const FieldValue& v = layer.fields.at(f.name);
      const std::size_t bit = pos * 8 + f.bit_offset;
      if (const auto* b = std::get_if<Bytes>(&v))
        std::copy(b->begin(), b->end(), raw.begin() + static_cast<std::ptrdiff_t>(bit / 8));
      else
        put_bits(raw, bit, f.bit_width, std::get<std::uint64_t>(v));
    }
    pos += sizes[i];
  }

  auto patch = [&](std::size_t layer_index, std::string_view field, std::uint16_t value) {
    auto& layer = p.layers_[layer_index];
    const FieldSchema* f = layer_schema(layer.kind).find(field);
    layer.fields.insert_or_assign(std::string(field), std::uint64_t{value});
    put_bits(raw, starts[layer_index] * 8 + f->bit_offset, 16, value);
  };

  for (std::size_t i = p.layers_.size(); i-- > 0;) {
    const auto kind = p.layers_[i].kind;
    const std::size_t begin = starts[i];
    const std::size_t end = begin + bytes_from(i);
    if (kind == LayerKind::Authp) {
      std::uint32_t sum = 0;
      for (std::size_t j = begin; j < end; ++j) sum += raw[j];
      patch(i, "checksum", static_cast<std::uint16_t>(sum & 0xffff));
    } else if (kind == LayerKind::Tcp || kind == LayerKind::Udp) {
      const std::size_t ip_start = starts[i - 1];
      std::uint16_t c = transport_checksum(raw, ip_start, begin, end, kind == LayerKind::Tcp ? 6 : 17);
      if (kind == LayerKind::Udp && c == 0) c = 0xffff;
      patch(i, "checksum", c);
    } else if (kind == LayerKind::Ip) {
      patch(i, "header_checksum",
            internet_checksum(std::span<const std::uint8_t>(raw).subspan(begin, 20)));
    }
  }

  raw.insert(raw.end(), p.trailer_.begin(), p.trailer_.end());
  p.raw_ = std::move(raw);
  p.finalized_ = true;
  return p;
}

bool is_known_stack(std::span<const LayerKind> stack) {
  for (const auto& s : known_stacks())
    if (std::equal(s.begin(), s.end(), stack.begin(), stack.end())) return true;
  return false;
}

std::size_t min_stack_bytes(std::span<const LayerKind> stack) {
  std::size_t n = 0;
  for (auto k : stack) n += layer_schema(k).fixed_bytes();
  return n;
}

Packet decode(std::span<const std::uint8_t> bytes, std::span<const LayerKind> stack) {
  if (!is_known_stack(stack)) throw Error(ErrorCode::UnknownLayerStack, "unsupported layer stack");
  if (bytes.size() < min_stack_bytes(stack))
    throw Error(ErrorCode::TruncatedPacket,
                std::to_string(bytes.size()) + " bytes, need " + std::to_string(min_stack_bytes(stack)));

  Packet p;
  std::size_t pos = 0;
  std::size_t datagram_end = bytes.size();
  for (auto kind : stack) {
    const LayerSchema& schema = layer_schema(kind);
    if (pos + schema.fixed_bytes() > datagram_end) throw Error(ErrorCode::TruncatedPacket, std::string(layer_name(kind)));
    LayerValues layer{kind, {}};
    for (const auto& f : schema.fields) {
      if (f.is_variable()) continue;
      const std::size_t bit = pos * 8 + f.bit_offset;
      if (f.is_opaque()) {
        auto first = bytes.begin() + static_cast<std::ptrdiff_t>(bit / 8);
        layer.fields.emplace(f.name, Bytes(first, first + static_cast<std::ptrdiff_t>(f.bit_width / 8)));
      } else {
        layer.fields.emplace(f.name, get_bits(bytes, bit, f.bit_width));
      }
    }
    pos += schema.fixed_bytes();
    if (kind == LayerKind::Ip) {
      const std::size_t total = std::get<std::uint64_t>(layer.fields.at("total_length"));
      const std::size_t ip_start = pos - schema.fixed_bytes();
      if (ip_start + total > bytes.size() || total < min_stack_bytes(stack.subspan(1)))
        throw Error(ErrorCode::TruncatedPacket, "ip total_length exceeds frame");
      datagram_end = ip_start + total;
    }
    if (const FieldSchema* tail = schema.tail()) {
      std::size_t len = datagram_end - pos;
      if (kind == LayerKind::Authp) {
        len = std::get<std::uint64_t>(layer.fields.at("length"));
        if (pos + len > datagram_end) throw Error(ErrorCode::TruncatedPacket, "authp payload");
      }
      auto first = bytes.begin() + static_cast<std::ptrdiff_t>(pos);
      layer.fields.emplace(tail->name, Bytes(first, first + static_cast<std::ptrdiff_t>(len)));
      pos += len;
    }
    p.layers_.push_back(std::move(layer));
  }
  p.trailer_.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  p.raw_.assign(bytes.begin(), bytes.end());
  p.finalized_ = true;
  return p;
}

std::uint16_t internet_checksum(std::span<const std::uint8_t> data) {
  std::uint32_t sum = 0;
  std::size_t i = 0;
  for (; i + 1 < data.size(); i += 2) sum += std::uint32_t{data[i]} << 8 | data[i + 1];
  if (i < data.size()) sum += std::uint32_t{data[i]} << 8;
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum & 0xffff);
}

std::vector<FieldLocation> stack_layout(std::span<const LayerKind> stack) {
  std::vector<FieldLocation> out;
  std::size_t pos = 0;
  for (auto kind : stack) {
    const LayerSchema& schema = layer_schema(kind);
    for (const auto& f : schema.fields) {
      if (f.is_variable()) return out;
      out.push_back(FieldLocation{f.path(), pos * 8 + f.bit_offset, f.bit_width});
    }
    pos += schema.fixed_bytes();
  }
  return out;
}

nlohmann::json schemas_to_json() {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& layer : all_layer_schemas()) {
    for (const auto& f : layer.fields) {
      nlohmann::json kind;
      std::visit(
          [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, RangeKind>) {
              kind = {{"type", "range"}, {"lo", k.lo}, {"hi", k.hi}};
            } else if constexpr (std::is_same_v<K, EnumKind>) {
              kind = {{"type", "enum_set"}, {"values", k.values}};
            } else if constexpr (std::is_same_v<K, AddressKind>) {
              kind = {{"type", "address"}, {"family", k.family == AddressFamily::Mac ? "mac" : "ipv4"}};
            } else if constexpr (std::is_same_v<K, ComputedKind>) {
              const char* role = k.role == ComputedRole::Checksum ? "checksum"
                                 : k.role == ComputedRole::Length ? "length"
                                                                  : "count";
              kind = {{"type", "computed"}, {"role", role}};
            } else {
              kind = {{"type", "opaque_bytes"}, {"len", k.length}};
            }
          },
          f.kind);
      out.push_back({{"name", f.name},
                     {"layer", std::string(layer_name(f.layer))},
                     {"bit_offset", f.bit_offset},
                     {"bit_width", f.bit_width},
                     {"kind", kind},
                     {"fuzzable", f.fuzzable}});
    }
  }
  return out;
}

}  // namespace fuzzlab
