#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace fuzzlab {

using Bytes = std::vector<std::uint8_t>;

enum class LayerKind : std::uint8_t { Eth, Arp, Ip, Udp, Tcp, Dns, DnsRr, Telnet, Authp };

std::string_view layer_name(LayerKind kind);
std::optional<LayerKind> parse_layer(std::string_view name);

struct RangeKind {
  std::uint64_t lo;
  std::uint64_t hi;
};

struct EnumKind {
  std::vector<std::uint64_t> values;
};

enum class AddressFamily { Mac, Ipv4 };

struct AddressKind {
  AddressFamily family;
};

enum class ComputedRole { Checksum, Length, Count };

struct ComputedKind {
  ComputedRole role;
};

/// length == 0 marks the variable-length tail of a layer.
struct OpaqueKind {
  std::size_t length;
};

using FieldKind = std::variant<RangeKind, EnumKind, AddressKind, ComputedKind, OpaqueKind>;

struct FieldSchema {
  std::string name;
  LayerKind layer;
  std::uint32_t bit_offset;
  std::uint32_t bit_width;
  FieldKind kind;
  bool fuzzable;

  std::string path() const;
  bool is_computed() const { return std::holds_alternative<ComputedKind>(kind); }
  bool is_opaque() const { return std::holds_alternative<OpaqueKind>(kind); }
  bool is_variable() const;
};

struct LayerSchema {
  LayerKind kind;
  std::uint32_t bit_length;  // fixed part only
  std::vector<FieldSchema> fields;

  const FieldSchema* find(std::string_view name) const;
  const FieldSchema* tail() const;
  std::size_t fixed_bytes() const { return bit_length / 8; }
};

const LayerSchema& layer_schema(LayerKind kind);
const std::vector<LayerSchema>& all_layer_schemas();

/// Resolves "layer.field"; throws UnknownField.
const FieldSchema& field_schema(std::string_view path);
std::pair<LayerKind, std::string_view> split_path(std::string_view path);

using FieldValue = std::variant<std::uint64_t, Bytes>;

/// Throws ValueOutOfRange when the value violates the schema's kind constraint.
void validate_value(const FieldSchema& schema, const FieldValue& value);
bool value_fits(const FieldSchema& schema, const FieldValue& value);

nlohmann::json value_to_json(const FieldValue& value);
std::string to_hex(const Bytes& bytes);
Bytes from_hex(std::string_view hex);  // throws ParseError
FieldValue value_from_json(const FieldSchema& schema, const nlohmann::json& j);

std::string mac_to_string(std::uint64_t mac);
std::string ipv4_to_string(std::uint32_t ip);
std::uint32_t ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d);

constexpr std::uint64_t kBroadcastMac = 0xffffffffffffULL;

struct LayerValues {
  LayerKind kind;
  std::map<std::string, FieldValue, std::less<>> fields;

  bool operator==(const LayerValues&) const = default;
};

/// Layered packet. Field writes go through schema validation; computed
/// fields are only ever written by finalize().
class Packet {
 public:
  Packet() = default;
  explicit Packet(std::vector<LayerKind> stack);

  const std::vector<LayerValues>& layers() const { return layers_; }
  std::vector<LayerKind> stack() const;
  bool has_layer(LayerKind kind) const;
  bool has_field(std::string_view path) const;

  const FieldValue& get(std::string_view path) const;
  std::uint64_t get_uint(std::string_view path) const;
  const Bytes& get_bytes(std::string_view path) const;

  /// Validating in-place write used by packet builders. Clears finalization.
  Packet& assign(std::string_view path, FieldValue value);

  bool finalized() const { return finalized_; }
  const Bytes& raw() const { return raw_; }

  /// Link-layer padding appended after the encoded layers.
  const Bytes& trailer() const { return trailer_; }
  void set_trailer(Bytes trailer);

  /// Field maps and trailer equality; ignores finalization state.
  bool same_fields(const Packet& other) const;

  friend Packet finalize(Packet packet);
  friend Packet decode(std::span<const std::uint8_t> bytes, std::span<const LayerKind> stack);

 private:
  LayerValues* find_layer(LayerKind kind);
  const LayerValues* find_layer(LayerKind kind) const;

  std::vector<LayerValues> layers_;
  Bytes trailer_;
  Bytes raw_;
  bool finalized_ = false;
};

Packet set_field(Packet packet, std::string_view path, FieldValue value);

/// Computes length/count fields, then checksums innermost-first, and encodes.
Packet finalize(Packet packet);

Packet decode(std::span<const std::uint8_t> bytes, std::span<const LayerKind> stack);

bool is_known_stack(std::span<const LayerKind> stack);
std::size_t min_stack_bytes(std::span<const LayerKind> stack);

/// 16-bit ones'-complement internet checksum.
std::uint16_t internet_checksum(std::span<const std::uint8_t> data);

/// Byte span of one fixed-position field inside an encoded packet.
struct FieldLocation {
  std::string path;
  std::size_t bit_begin;
  std::size_t bit_width;
};

/// Fixed-position fields of a stack, absolute bit offsets from packet start.
/// Stops at the first variable-length tail.
std::vector<FieldLocation> stack_layout(std::span<const LayerKind> stack);

nlohmann::json schemas_to_json();

}  // namespace fuzzlab
