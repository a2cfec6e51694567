#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toothseg/pipeline.hpp"

namespace httplib {
class Server;
}

namespace toothseg {

struct ServiceOptions {
  std::filesystem::path data_dir;  // images/, sequences.json, annotations/
  PipelineConfig config;
  std::optional<std::filesystem::path> static_dir;  // built UI assets, served at /
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct SequenceView {
  std::string view;
  std::string image_id;
  std::string image_file;  // relative to the data directory
};

struct SequenceRecord {
  std::string sequence_id;
  std::string captured_at;
  std::vector<SequenceView> views;  // lower, front, upper
};

/// YYYY-MM-DDTHH:MM:SS[.fraction]Z with calendar-valid fields.
bool is_iso8601_utc(const std::string& text);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Request handlers over a data directory. Handlers are usable without a
/// socket; register_routes wires them to an HTTP server.
class Service {
 public:
  explicit Service(ServiceOptions options);

  HttpResponse health() const;
  HttpResponse list_sequences() const;
  HttpResponse get_sequence(const std::string& sequence_id) const;
  HttpResponse get_image(const std::string& image_id) const;
  HttpResponse get_annotation(const std::string& sequence_id) const;
  HttpResponse post_annotation(const std::string& body);
  HttpResponse post_segment(const std::string& body) const;

  /// Called after the temporary annotation file is written and before it is
  /// renamed into place; a throwing hook simulates a crash mid-write.
  void set_commit_hook(std::function<void(const std::filesystem::path& temp)> hook);

  const std::vector<SequenceRecord>& sequences() const noexcept { return sequences_; }
  std::filesystem::path annotation_path(const std::string& sequence_id) const;

  void register_routes(httplib::Server& server);

 private:
  const SequenceRecord* find_sequence(const std::string& id) const;

  ServiceOptions options_;
  std::vector<SequenceRecord> sequences_;
  std::map<std::string, std::filesystem::path> images_;  // image_id -> absolute path
  std::mutex write_mutex_;
  std::function<void(const std::filesystem::path&)> commit_hook_;
};

/// Blocks serving HTTP on host:port until the process is stopped.
void run_server(const ServiceOptions& options, const std::string& host, int port);

}  // namespace toothseg
