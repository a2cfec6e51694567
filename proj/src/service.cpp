#include "toothseg/service.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <regex>

#include "httplib.h"
#include "toothseg/image_io.hpp"
#include "toothseg/metrics.hpp"

namespace toothseg {

namespace {

constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

HttpResponse json_response(int status, const Json& doc) { return {status, "application/json", doc.dump()}; }

HttpResponse error_response(int status, const std::string& error, const std::string& message = {}) {
  Json doc = {{"error", error}};
  if (!message.empty()) doc["message"] = message;
  return json_response(status, doc);
}

HttpResponse not_found() { return error_response(404, "not_found"); }

// Schema violation carrying the offending field path.
struct FieldError {
  std::string field;
  std::string message;
};

[[noreturn]] void reject(const std::string& field, const std::string& message) { throw FieldError{field, message}; }

const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) reject(path.empty() ? key : path + "." + key, "is required");
  return obj[key];
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

Json string_map(const Json& v, const std::string& path) {
  if (!v.is_object()) reject(path, "must be an object of strings");
  for (const auto& [key, value] : v.items()) {
    if (!value.is_string()) reject(path + "." + key, "must be a string");
  }
  return v;
}

double unit_coordinate(const Json& v, const std::string& path) {
  if (!v.is_number()) reject(path, "must be a number");
  const double d = v.get<double>();
  if (!(d >= 0.0 && d <= 1.0)) reject(path, "must be a relative coordinate in [0, 1]");
  return d;
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

}  // namespace

bool is_iso8601_utc(const std::string& text) {
  static const std::regex pattern(R"(^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(\.\d+)?Z$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) return false;
  const int year = std::stoi(m[1]), month = std::stoi(m[2]), day = std::stoi(m[3]);
  const int hour = std::stoi(m[4]), minute = std::stoi(m[5]), second = std::stoi(m[6]);
  if (month < 1 || month > 12 || hour > 23 || minute > 59 || second > 60) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  const int max_day = kDays[month - 1] + (month == 2 && leap ? 1 : 0);
  return day >= 1 && day <= max_day;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += kB64[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    const char* pos = std::strchr(kB64, ch);
    if (pos == nullptr || ch == '\0') fail(ErrorCode::InvalidArgument, "invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(pos - kB64);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {
  validate(options_.config);
  const std::filesystem::path index = options_.data_dir / "sequences.json";
  const Json doc = parse_json_file(index);
  const Json* list = &doc;
  if (doc.is_object() && doc.contains("sequences")) list = &doc["sequences"];
  if (!list->is_array()) fail(ErrorCode::CorruptFile, index.string() + ": expected a list of sequences");

  auto bad = [&](const std::string& what) { fail(ErrorCode::CorruptFile, index.string() + ": " + what); };
  for (const Json& s : *list) {
    if (!s.is_object() || !s.contains("sequence_id") || !s["sequence_id"].is_string() || !s.contains("captured_at") ||
        !s["captured_at"].is_string() || !s.contains("views") || !s["views"].is_array()) {
      bad("each sequence needs sequence_id, captured_at and views");
    }
    SequenceRecord rec{s["sequence_id"].get<std::string>(), s["captured_at"].get<std::string>(), {}};
    if (!is_iso8601_utc(rec.captured_at)) bad("sequence " + rec.sequence_id + " has a malformed captured_at");
    if (find_sequence(rec.sequence_id) != nullptr) bad("duplicate sequence " + rec.sequence_id);
    for (const Json& v : s["views"]) {
      if (!v.is_object() || !v.contains("view") || !v["view"].is_string() || !v.contains("image_id") ||
          !v["image_id"].is_string()) {
        bad("sequence " + rec.sequence_id + " has a malformed view entry");
      }
      SequenceView view{v["view"].get<std::string>(), v["image_id"].get<std::string>(), {}};
      view.image_file = v.contains("image_file") && v["image_file"].is_string() ? v["image_file"].get<std::string>()
                                                                                 : "images/" + view.image_id + ".png";
      rec.views.push_back(std::move(view));
    }
    std::vector<std::string> names;
    for (const SequenceView& v : rec.views) names.push_back(v.view);
    std::sort(names.begin(), names.end());
    if (names != std::vector<std::string>{"front", "lower", "upper"}) {
      bad("sequence " + rec.sequence_id + " must have exactly the views lower, front and upper");
    }
    for (const SequenceView& v : rec.views) {
      const std::filesystem::path file = options_.data_dir / v.image_file;
      if (!std::filesystem::is_regular_file(file)) {
        fail(ErrorCode::FileNotFound, index.string() + ": image file " + file.string() + " does not exist");
      }
      images_[v.image_id] = file;
    }
    sequences_.push_back(std::move(rec));
  }

  std::error_code ec;
  std::filesystem::create_directories(options_.data_dir / "annotations", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create annotations directory: " + ec.message());
}

const SequenceRecord* Service::find_sequence(const std::string& id) const {
  for (const SequenceRecord& s : sequences_) {
    if (s.sequence_id == id) return &s;
  }
  return nullptr;
}

std::filesystem::path Service::annotation_path(const std::string& sequence_id) const {
  return options_.data_dir / "annotations" / (sequence_id + ".json");
}

void Service::set_commit_hook(std::function<void(const std::filesystem::path&)> hook) {
  commit_hook_ = std::move(hook);
}

HttpResponse Service::health() const { return json_response(200, {{"status", "ok"}, {"version", TOOTHSEG_VERSION}}); }

namespace {

Json sequence_json(const SequenceRecord& s, bool annotated) {
  Json views = Json::array();
  for (const SequenceView& v : s.views) {
    views.push_back({{"view", v.view}, {"image_id", v.image_id}, {"image_file", v.image_file}});
  }
  return {{"sequence_id", s.sequence_id}, {"captured_at", s.captured_at}, {"views", std::move(views)},
          {"annotated", annotated}};
}

}  // namespace

HttpResponse Service::list_sequences() const {
  Json list = Json::array();
  for (const SequenceRecord& s : sequences_) {
    list.push_back(sequence_json(s, std::filesystem::exists(annotation_path(s.sequence_id))));
  }
  return json_response(200, list);
}

HttpResponse Service::get_sequence(const std::string& sequence_id) const {
  const SequenceRecord* s = find_sequence(sequence_id);
  if (s == nullptr) return not_found();
  return json_response(200, sequence_json(*s, std::filesystem::exists(annotation_path(sequence_id))));
}

HttpResponse Service::get_image(const std::string& image_id) const {
  const auto it = images_.find(image_id);
  if (it == images_.end()) return not_found();
  const auto bytes = read_file_bytes(it->second);
  const std::string ext = it->second.extension().string();
  const std::string type = ext == ".png" ? "image/png" : ext == ".ppm" ? "image/x-portable-pixmap" : "application/octet-stream";
  return {200, type, std::string(bytes.begin(), bytes.end())};
}

HttpResponse Service::get_annotation(const std::string& sequence_id) const {
  if (find_sequence(sequence_id) == nullptr) return not_found();
  const std::filesystem::path path = annotation_path(sequence_id);
  if (!std::filesystem::exists(path)) return not_found();
  return {200, "application/json", read_text(path)};
}

HttpResponse Service::post_annotation(const std::string& body) {
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const Json::parse_error& e) {
    return error_response(400, "invalid_json", e.what());
  }

  Json record;
  const SequenceRecord* seq = nullptr;
  try {
    if (!doc.is_object()) reject("<root>", "must be an object");
    const Json& version = require(doc, "schema_version", "");
    if (!version.is_number_integer() || version.get<int>() != 1) reject("schema_version", "must be 1");
    const Json& sid = require(doc, "sequence_id", "");
    if (!sid.is_string()) reject("sequence_id", "must be a string");
    const Json& captured = require(doc, "captured_at", "");
    if (!captured.is_string() || !is_iso8601_utc(captured.get<std::string>())) {
      reject("captured_at", "must be an ISO-8601 UTC timestamp");
    }
    const Json& views = require(doc, "views", "");
    if (!views.is_array() || views.empty()) reject("views", "must be a non-empty array");
    if (views.size() > 3) reject("views", "must have at most three entries");
    for (const auto& [key, value] : doc.items()) {
      if (key != "schema_version" && key != "sequence_id" && key != "captured_at" && key != "views" &&
          key != "global_notes") {
        reject(key, "is not a known field");
      }
    }

    record["schema_version"] = 1;
    record["sequence_id"] = sid;
    record["captured_at"] = captured;
    Json out_views = Json::array();
    std::vector<std::string> seen;
    for (std::size_t i = 0; i < views.size(); ++i) {
      const std::string vpath = "views[" + std::to_string(i) + "]";
      const Json& v = views[i];
      if (!v.is_object()) reject(vpath, "must be an object");
      const Json& name = require(v, "view", vpath);
      if (!name.is_string() || std::find(kViews.begin(), kViews.end(), name.get<std::string>()) == kViews.end()) {
        reject(join(vpath, "view"), "must be one of lower, front, upper");
      }
      if (std::find(seen.begin(), seen.end(), name.get<std::string>()) != seen.end()) {
        reject(join(vpath, "view"), "is repeated");
      }
      seen.push_back(name.get<std::string>());
      const Json& image_id = require(v, "image_id", vpath);
      if (!image_id.is_string()) reject(join(vpath, "image_id"), "must be a string");
      const Json& teeth = require(v, "teeth", vpath);
      if (!teeth.is_array()) reject(join(vpath, "teeth"), "must be an array");
      Json out_teeth = Json::array();
      for (std::size_t t = 0; t < teeth.size(); ++t) {
        const std::string tpath = join(vpath, "teeth") + "[" + std::to_string(t) + "]";
        const Json& tooth = teeth[t];
        if (!tooth.is_object()) reject(tpath, "must be an object");
        Json out_tooth;
        out_tooth["x"] = unit_coordinate(require(tooth, "x", tpath), join(tpath, "x"));
        out_tooth["y"] = unit_coordinate(require(tooth, "y", tpath), join(tpath, "y"));
        out_tooth["properties"] =
            tooth.contains("properties") ? string_map(tooth["properties"], join(tpath, "properties")) : Json::object();
        out_teeth.push_back(std::move(out_tooth));
      }
      out_views.push_back({{"view", name}, {"image_id", image_id}, {"teeth", std::move(out_teeth)}});
    }
    record["views"] = std::move(out_views);
    record["global_notes"] = doc.contains("global_notes") ? string_map(doc["global_notes"], "global_notes")
                                                          : Json::object();

    seq = find_sequence(sid.get<std::string>());
    if (seq != nullptr) {
      for (std::size_t i = 0; i < record["views"].size(); ++i) {
        const Json& v = record["views"][i];
        const auto match = std::find_if(seq->views.begin(), seq->views.end(),
                                        [&](const SequenceView& sv) { return sv.view == v["view"]; });
        if (match == seq->views.end() || match->image_id != v["image_id"].get<std::string>()) {
          reject("views[" + std::to_string(i) + "].image_id", "does not belong to this sequence view");
        }
      }
    }
  } catch (const FieldError& e) {
    Json err = {{"error", "invalid_annotation"}, {"field", e.field}, {"message", e.field + " " + e.message}};
    return json_response(400, err);
  }
  if (seq == nullptr) return not_found();

  const std::lock_guard lock(write_mutex_);
  const std::filesystem::path target = annotation_path(seq->sequence_id);
  if (std::filesystem::exists(target)) return error_response(409, "already_annotated");

  const std::filesystem::path temp = target.parent_path() / ("." + seq->sequence_id + ".json.tmp");
  const std::string text = to_report_text(record);
  try {
    write_text_file(temp, text);
    if (commit_hook_) commit_hook_(temp);
    std::filesystem::rename(temp, target);
  } catch (const std::exception& e) {
    std::error_code ec;
    std::filesystem::remove(temp, ec);
    return error_response(500, "write_failed", e.what());
  }
  return {201, "application/json", text};
}

HttpResponse Service::post_segment(const std::string& body) const {
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const Json::parse_error& e) {
    return error_response(400, "invalid_json", e.what());
  }
  if (!doc.is_object() || !doc.contains("image_id") || !doc["image_id"].is_string()) {
    return error_response(400, "invalid_request", "image_id (string) is required");
  }
  std::string method = "prompted";
  if (doc.contains("method")) {
    if (!doc["method"].is_string()) return error_response(400, "invalid_request", "method must be a string");
    method = doc["method"].get<std::string>();
  }
  if (method != "prompted" && method != "otsu" && method != "hsv") {
    return error_response(400, "invalid_request", "method must be prompted, otsu or hsv");
  }
  std::vector<Keypoint> keypoints;
  if (doc.contains("keypoints")) {
    const Json& list = doc["keypoints"];
    if (!list.is_array()) return error_response(400, "invalid_request", "keypoints must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Json& k = list[i];
      if (!k.is_object() || !k.contains("x_px") || !k.contains("y_px") || !k["x_px"].is_number() ||
          !k["y_px"].is_number()) {
        return error_response(400, "invalid_request", "keypoints[" + std::to_string(i) + "] needs numeric x_px and y_px");
      }
      keypoints.push_back({k["x_px"].get<double>(), k["y_px"].get<double>(), 1.0});
    }
  }

  const auto it = images_.find(doc["image_id"].get<std::string>());
  if (it == images_.end()) return not_found();
  if (method == "prompted" && keypoints.empty()) {
    return error_response(400, "no_keypoints", "prompted segmentation needs at least one keypoint");
  }

  const ImageRGB img = load_image(it->second);
  SegmentationResult result;
  try {
    if (method == "prompted") {
      result = keypoint_prompted_segment(img, keypoints, options_.config);
    } else if (method == "otsu") {
      result = segment_otsu_baseline(img, options_.config);
    } else {
      result = segment_hsv_baseline(img, options_.config);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::KeypointOutOfBounds || e.code() == ErrorCode::NoKeypoints) {
      return error_response(400, "invalid_request", e.detail());
    }
    throw;
  }

  double hint = 0.0;
  if (method == "prompted") {
    int hits = 0;
    for (const Keypoint& k : keypoints) {
      hits += result.mask(static_cast<int>(k.x), static_cast<int>(k.y)) ? 1 : 0;
    }
    hint = static_cast<double>(hits) / static_cast<double>(keypoints.size());
  } else if (!result.mask.empty()) {
    hint = static_cast<double>(count_foreground(result.mask)) / static_cast<double>(result.mask.size());
  }
  Json out;
  if (result.empty) out["error"] = "empty_segmentation";
  out["mask_png_base64"] = base64_encode(encode_png(result.mask));
  out["label_count"] = result.label_count;
  out["score_hint"] = round_significant(hint);
  return json_response(result.empty ? 422 : 200, out);
}

void Service::register_routes(httplib::Server& server) {
  auto send = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  auto guarded = [send](auto handler) {
    return [send, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        send(res, handler(req));
      } catch (const std::exception& e) {
        send(res, error_response(500, "internal_error", e.what()));
      }
    };
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Get("/api/health", guarded([this](const httplib::Request&) { return health(); }));
  server.Get("/api/sequences", guarded([this](const httplib::Request&) { return list_sequences(); }));
  server.Get(R"(/api/sequences/([^/]+))",
             guarded([this](const httplib::Request& req) { return get_sequence(req.matches[1]); }));
  server.Get(R"(/api/images/([^/]+))", guarded([this](const httplib::Request& req) { return get_image(req.matches[1]); }));
  server.Get(R"(/api/annotations/([^/]+))",
             guarded([this](const httplib::Request& req) { return get_annotation(req.matches[1]); }));
  server.Post("/api/annotations", guarded([this](const httplib::Request& req) { return post_annotation(req.body); }));
  server.Post("/api/segment", guarded([this](const httplib::Request& req) { return post_segment(req.body); }));
  if (options_.static_dir) server.set_mount_point("/", options_.static_dir->string());
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) res.set_content(R"({"error":"not_found"})", "application/json");
  });
}

void run_server(const ServiceOptions& options, const std::string& host, int port) {
  Service service(options);
  httplib::Server server;
  service.register_routes(server);
  if (!server.bind_to_port(host, port)) fail(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
  std::fprintf(stderr, "toothseg serve: listening on http://%s:%d (data: %s)\n", host.c_str(), port,
               options.data_dir.string().c_str());
  server.listen_after_bind();
}

}  // namespace toothseg
