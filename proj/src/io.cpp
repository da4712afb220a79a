#include "fuzzlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fuzzlab/error.hpp"
#include "fuzzlab/labels.hpp"
#include "fuzzlab/rng.hpp"

namespace fuzzlab {

namespace {

Error line_error(std::size_t line, const std::string& what) {
  return Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

nlohmann::json packet_fields(const Packet& p) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& layer : p.layers())
    for (const auto& [name, value] : layer.fields)
      out[std::string(layer_name(layer.kind)) + "." + name] = value_to_json(value);
  return out;
}

std::vector<LayerKind> parse_stack(const nlohmann::json& j) {
  std::vector<LayerKind> stack;
  for (const auto& name : j) {
    const auto kind = parse_layer(name.get<std::string>());
    if (!kind) throw Error(ErrorCode::ParseError, "unknown layer " + name.get<std::string>());
    stack.push_back(*kind);
  }
  return stack;
}

}  // namespace

void write_traces(std::ostream& out, const std::vector<Session>& sessions) {
  for (const auto& s : sessions) {
    if (s.packets.empty())
      throw Error(ErrorCode::IoError, "session " + std::to_string(s.id) + " has no packets to record");
    const auto labels = session_labels(s);
    for (std::size_t i = 0; i < s.packets.size(); ++i) {
      const auto& cp = s.packets[i];
      nlohmann::json stack = nlohmann::json::array();
      for (auto k : cp.packet.stack()) stack.push_back(layer_name(k));
      nlohmann::json rec = {{"v", kTraceVersion},
                            {"session", s.id},
                            {"scenario", scenario_name(s.scenario)},
                            {"mode", mode_name(s.mode)},
                            {"seq", i},
                            {"tick", cp.tick},
                            {"dir", cp.dir},
                            {"stack", stack},
                            {"fields", packet_fields(cp.packet)},
                            {"raw", to_hex(cp.packet.raw())},
                            {"label", label_name(labels[i])},
                            {"session_success", s.success}};
      if (i == 0) {
        rec["complete"] = s.complete;
        rec["meta"] = s.meta;
      }
      out << rec.dump() << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "trace write failed");
}

std::vector<Session> read_traces(std::istream& in) {
  std::vector<Session> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw line_error(line, e.what());
    }
    try {
      if (rec.at("v").get<int>() != kTraceVersion)
        throw Error(ErrorCode::SchemaVersionMismatch,
                    "line " + std::to_string(line) + ": trace version " + rec.at("v").dump());
      const auto id = rec.at("session").get<std::uint64_t>();
      const auto seq = rec.at("seq").get<std::size_t>();
      if (seq == 0) {
        Session s;
        s.id = id;
        s.scenario = parse_scenario(rec.at("scenario").get<std::string>());
        s.mode = parse_mode(rec.at("mode").get<std::string>());
        s.success = rec.at("session_success").get<bool>();
        s.complete = rec.at("complete").get<bool>();
        s.meta = rec.at("meta");
        out.push_back(std::move(s));
      }
      if (out.empty() || out.back().id != id || out.back().packets.size() != seq)
        throw line_error(line, "record out of order for session " + std::to_string(id));
      const auto stack = parse_stack(rec.at("stack"));
      const Bytes raw = from_hex(rec.at("raw").get<std::string>());
      CapturedPacket cp{rec.at("dir").get<std::string>(), decode(raw, stack), rec.at("tick").get<std::uint64_t>()};
      if (packet_fields(cp.packet) != rec.at("fields")) throw line_error(line, "fields disagree with raw bytes");
      parse_label(rec.at("label").get<std::string>());
      out.back().packets.push_back(std::move(cp));
    } catch (const nlohmann::json::exception& e) {
      throw line_error(line, e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SchemaVersionMismatch) throw;
      const std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      throw line_error(line, msg);
    }
  }
  return out;
}

void write_traces(const std::filesystem::path& path, const std::vector<Session>& sessions) {
  std::ostringstream os;
  write_traces(os, sessions);
  write_file(path, os.str());
}

std::vector<Session> read_traces(const std::filesystem::path& path) {
  std::istringstream is(read_file(path));
  return read_traces(is);
}

bool same_sessions(const std::vector<Session>& a, const std::vector<Session>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Session& x = a[i];
    const Session& y = b[i];
    if (x.id != y.id || x.scenario != y.scenario || x.mode != y.mode || x.success != y.success ||
        x.complete != y.complete || x.meta != y.meta || x.packets.size() != y.packets.size())
      return false;
    for (std::size_t j = 0; j < x.packets.size(); ++j) {
      const auto& p = x.packets[j];
      const auto& q = y.packets[j];
      if (p.dir != q.dir || p.tick != q.tick || p.packet.raw() != q.packet.raw() ||
          !p.packet.same_fields(q.packet))
        return false;
    }
  }
  return true;
}

nlohmann::json sample_x_to_json(const Sample& s) {
  if (s.shape.size() == 2) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < s.shape[0]; ++r)
      rows.push_back(std::vector<std::int32_t>(s.x.begin() + static_cast<std::ptrdiff_t>(r * s.shape[1]),
                                               s.x.begin() + static_cast<std::ptrdiff_t>((r + 1) * s.shape[1])));
    return rows;
  }
  return s.x;
}

Sample sample_from_json(const nlohmann::json& rec) {
  Sample s;
  s.repr = parse_repr(rec.at("repr").get<std::string>());
  const auto& x = rec.at("x");
  if (!x.is_array()) throw Error(ErrorCode::ParseError, "x must be an array");
  if (s.repr == Repr::ByteMat) {
    for (const auto& row : x) {
      auto r = row.get<std::vector<std::int32_t>>();
      if (!s.shape.empty() && r.size() != s.shape[1]) throw Error(ErrorCode::ParseError, "ragged matrix");
      if (s.shape.empty()) s.shape = {0, r.size()};
      ++s.shape[0];
      s.x.insert(s.x.end(), r.begin(), r.end());
    }
  } else {
    s.x = x.get<std::vector<std::int32_t>>();
    s.shape = {s.x.size()};
  }
  s.y = rec.at("y").get<int>();
  if (s.y != 0 && s.y != 1) throw Error(ErrorCode::ParseError, "y must be 0 or 1");
  s.session = rec.value("session", std::int64_t{-1});
  return s;
}

void write_dataset(std::ostream& out, const Dataset& d) {
  auto emit = [&](const std::vector<Sample>& v, const char* split) {
    for (const auto& s : v)
      out << nlohmann::json{{"repr", repr_name(s.repr)},
                            {"x", sample_x_to_json(s)},
                            {"y", s.y},
                            {"split", split},
                            {"session", s.session}}
                 .dump()
          << '\n';
  };
  emit(d.split.train, "train");
  emit(d.split.test, "test");
  if (!out) throw Error(ErrorCode::IoError, "dataset write failed");
}

nlohmann::json dataset_meta(const Dataset& d, const std::string& source_hash) {
  nlohmann::json m = d.meta;
  m["repr"] = repr_name(d.repr);
  m["scenario"] = scenario_name(d.scenario);
  m["seed"] = d.split.seed;
  m["source_trace_hash"] = source_hash;
  m["train_index"] = d.split.train_index;
  m["test_index"] = d.split.test_index;
  if (d.repr == Repr::TypeSeq) m["type_table"] = type_table_to_json(d.types);
  return m;
}

Dataset read_dataset(std::istream& in, const nlohmann::json& meta) {
  Dataset d;
  try {
    d.repr = parse_repr(meta.at("repr").get<std::string>());
    d.scenario = parse_scenario(meta.at("scenario").get<std::string>());
    d.split.seed = meta.at("seed").get<std::uint64_t>();
    d.split.train_index = meta.value("train_index", std::vector<std::size_t>{});
    d.split.test_index = meta.value("test_index", std::vector<std::size_t>{});
    if (d.repr == Repr::TypeSeq) d.types = type_table_from_json(meta.at("type_table"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("dataset meta: ") + e.what());
  }
  d.meta = meta;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(text);
      Sample s = sample_from_json(rec);
      if (s.repr != d.repr) throw Error(ErrorCode::SchemaVersionMismatch, "repr differs from the metadata");
      const auto split = rec.at("split").get<std::string>();
      if (split == "train")
        d.split.train.push_back(std::move(s));
      else if (split == "test")
        d.split.test.push_back(std::move(s));
      else
        throw Error(ErrorCode::ParseError, "unknown split " + split);
    } catch (const nlohmann::json::exception& e) {
      throw line_error(line, e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SchemaVersionMismatch)
        throw Error(e.code(), "line " + std::to_string(line) + ": " + e.what());
      throw line_error(line, e.what());
    }
  }
  return d;
}

std::filesystem::path meta_path_for(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p.replace_extension(".meta.json");
  return p;
}

void write_dataset(const std::filesystem::path& path, const Dataset& d, const std::string& source_hash) {
  std::ostringstream os;
  write_dataset(os, d);
  write_file(path, os.str());
  write_json(meta_path_for(path), dataset_meta(d, source_hash));
}

Dataset read_dataset(const std::filesystem::path& path) {
  const auto meta = read_json(meta_path_for(path));
  std::istringstream is(read_file(path));
  return read_dataset(is, meta);
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string checkpoint_to_string(const Model& model) {
  std::string s = "{\"config\":" + model.config().to_json().dump() + ",\"layers\":[";
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    const Tensor& t = model.params()[i];
    if (i > 0) s += ',';
    s += "{\"shape\":" + nlohmann::json(t.shape).dump() + ",\"data\":[";
    for (std::size_t k = 0; k < t.data.size(); ++k) {
      if (k > 0) s += ',';
      s += fmt17(t.data[k]);
    }
    s += "]}";
  }
  s += "],\"loss_curve\":[";
  for (std::size_t k = 0; k < model.loss_curve.size(); ++k) {
    if (k > 0) s += ',';
    s += fmt17(model.loss_curve[k]);
  }
  s += "]}\n";
  return s;
}

Model checkpoint_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
  const ModelConfig config = ModelConfig::from_json(j.at("config"));
  std::vector<Tensor> params;
  try {
    for (const auto& l : j.at("layers")) {
      Tensor t(l.at("shape").get<std::vector<std::size_t>>());
      auto data = l.at("data").get<std::vector<double>>();
      if (data.size() != t.size()) throw Error(ErrorCode::ShapeMismatch, "checkpoint layer size");
      t.data = std::move(data);
      params.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
  Model m(config, std::move(params));
  m.loss_curve = j.value("loss_curve", std::vector<double>{});
  return m;
}

void write_checkpoint(const std::filesystem::path& path, const Model& model) {
  write_file(path, checkpoint_to_string(model));
}

Model read_checkpoint(const std::filesystem::path& path) { return checkpoint_from_string(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << content;
  if (!f) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

std::string content_hash(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string file_hash(const std::filesystem::path& path) { return content_hash(read_file(path)); }

}  // namespace fuzzlab
