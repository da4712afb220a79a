#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fuzzlab/dataset.hpp"
#include "fuzzlab/models.hpp"
#include "fuzzlab/netsim.hpp"

namespace fuzzlab {

constexpr int kTraceVersion = 1;

// Traces: one JSON record per captured packet. Session meta rides on seq 0.
void write_traces(std::ostream& out, const std::vector<Session>& sessions);
/// Throws ParseError naming the line, SchemaVersionMismatch on a foreign version.
std::vector<Session> read_traces(std::istream& in);
void write_traces(const std::filesystem::path& path, const std::vector<Session>& sessions);
std::vector<Session> read_traces(const std::filesystem::path& path);

/// Structural equality: ids, flags, meta, and every packet's fields, trailer, and bytes.
bool same_sessions(const std::vector<Session>& a, const std::vector<Session>& b);

// Datasets: records {"repr","x","y","split","session"}; metadata goes to a sidecar.
void write_dataset(std::ostream& out, const Dataset& dataset);
nlohmann::json dataset_meta(const Dataset& dataset, const std::string& source_hash);
/// Rebuilds train/test and the type table. Unknown repr -> SchemaVersionMismatch.
Dataset read_dataset(std::istream& in, const nlohmann::json& meta);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset, const std::string& source_hash);
Dataset read_dataset(const std::filesystem::path& path);
std::filesystem::path meta_path_for(const std::filesystem::path& dataset_path);

/// Nested JSON array of a sample's values following its shape.
nlohmann::json sample_x_to_json(const Sample& s);
Sample sample_from_json(const nlohmann::json& record);

// Checkpoints: doubles written with 17 significant digits.
std::string checkpoint_to_string(const Model& model);
Model checkpoint_from_string(const std::string& text);
void write_checkpoint(const std::filesystem::path& path, const Model& model);
Model read_checkpoint(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);  // throws IoError
void write_file(const std::filesystem::path& path, const std::string& content);
nlohmann::json read_json(const std::filesystem::path& path);  // throws ParseError
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// "fnv1a64:<16 hex digits>" of the bytes.
std::string content_hash(const std::string& bytes);
std::string file_hash(const std::filesystem::path& path);

}  // namespace fuzzlab
