#include "facemorph/server.hpp"

#include <charconv>
#include <cmath>
#include <mutex>
#include <regex>
#include <variant>

#include <httplib.h>

#include "facemorph/landmark_schema.hpp"

namespace facemorph {

namespace {

ApiResponse error(int status, const std::string& reason) { return {status, {{"error", reason}}}; }

std::optional<std::size_t> parse_index(const std::string& text) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

nlohmann::json points_json(const LandmarkConfig& c) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < c.rows(); ++r) out.push_back({c(r, 0), c(r, 1)});
  return out;
}

/// Accepts {"landmarks": [[x, y], ...]} or a bare array of pairs.
std::variant<LandmarkConfig, ApiResponse> points_from_body(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::out_of_range&) {
    // Well-formed but overflowing literal such as 1e999.
    return error(422, "landmark coordinates must be finite");
  } catch (const nlohmann::json::exception&) {
    return error(400, "request body is not valid JSON");
  }
  const nlohmann::json* points = &doc;
  if (doc.is_object()) {
    if (!doc.contains("landmarks")) return error(422, "body has no \"landmarks\" field");
    points = &doc["landmarks"];
  }
  if (!points->is_array()) return error(422, "landmarks must be an array of [x, y] pairs");
  if (points->size() != static_cast<std::size_t>(kLandmarkCount)) {
    return error(422, "expected 72 landmarks, got " + std::to_string(points->size()));
  }
  LandmarkConfig c(kLandmarkCount, 2);
  for (std::size_t i = 0; i < points->size(); ++i) {
    const auto& p = (*points)[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      return error(422, "landmark " + std::to_string(i + 1) + " is not a pair of numbers");
    }
    c(static_cast<Eigen::Index>(i), 0) = p[0].get<double>();
    c(static_cast<Eigen::Index>(i), 1) = p[1].get<double>();
    if (!std::isfinite(c(static_cast<Eigen::Index>(i), 0)) || !std::isfinite(c(static_cast<Eigen::Index>(i), 1))) {
      return error(422, "landmark " + std::to_string(i + 1) + " is not finite");
    }
  }
  return c;
}

constexpr const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>facemorph review</title></head>"
    "<body><h1>facemorph review server</h1><p>The review UI is not installed. The JSON API is available under "
    "<code>/api/</code>: <a href=\"/api/schema\">schema</a>, <a href=\"/api/specimens\">specimens</a>.</p>"
    "</body></html>";

}  // namespace

nlohmann::json schema_json() {
  nlohmann::json landmarks = nlohmann::json::array();
  for (const auto& def : landmark_table()) {
    landmarks.push_back({{"index", def.index},
                         {"name", def.name},
                         {"kind", to_string(def.kind)},
                         {"side", to_string(def.side)},
                         {"note", def.note}});
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : pair_map().pairs) pairs.push_back({a, b});
  nlohmann::json sliders = nlohmann::json::array();
  for (const auto& t : default_sliders(false)) {
    sliders.push_back({{"before", t.before}, {"slide", t.slide}, {"after", t.after}});
  }
  return {{"count", kLandmarkCount},
          {"landmarks", landmarks},
          {"pairs", pairs},
          {"midline", pair_map().midline},
          {"sliders", sliders}};
}

ApiResponse handle_api(Project& project, const std::string& method, const std::string& path,
                       const std::string& body) {
  static const std::regex specimen_route(R"(^/api/specimens/([^/]+)/(image|landmarks)$)");
  try {
    if (path == "/api/schema") {
      if (method != "GET") return error(405, "use GET");
      return {200, schema_json()};
    }
    if (path == "/api/specimens") {
      if (method != "GET") return error(405, "use GET");
      nlohmann::json list = nlohmann::json::array();
      for (const auto& e : project.entries()) {
        list.push_back({{"index", e.index},
                        {"id", e.id},
                        {"image", e.image_name},
                        {"image_found", e.image_found},
                        {"status", to_string(e.status)}});
      }
      return {200, list};
    }
    if (path == "/api/save") {
      if (method != "POST") return error(405, "use POST");
      try {
        project.save();
      } catch (const std::exception& e) {
        return error(500, std::string("save failed; the file on disk is unchanged: ") + e.what());
      }
      return {200, {{"saved", true}, {"path", project.tps_path()}}};
    }
    std::smatch m;
    if (std::regex_match(path, m, specimen_route)) {
      const auto index = parse_index(m[1].str());
      if (!index || *index >= project.size()) return error(404, "no specimen " + m[1].str());
      const bool image_route = m[2].str() == "image";
      if (image_route) {
        if (method != "GET") return error(405, "use GET");
        if (!project.image_path(*index)) return error(404, "image for specimen " + m[1].str() + " is missing");
        const auto img = project.image(*index);
        return {200, {{"width", img.width}, {"height", img.height}, {"pixels", base64_encode(img.pixels)}}};
      }
      if (method == "GET") {
        if (!project.image_path(*index)) {
          return error(409, "image for specimen " + m[1].str() + " is missing, so pixel coordinates are unknown");
        }
        const auto entries = project.entries();
        return {200,
                {{"index", *index},
                 {"status", to_string(entries[*index].status)},
                 {"landmarks", points_json(project.pixel_landmarks(*index))}}};
      }
      if (method == "PUT") {
        auto parsed = points_from_body(body);
        if (auto* failure = std::get_if<ApiResponse>(&parsed)) return *failure;
        if (!project.image_path(*index)) {
          return error(409, "image for specimen " + m[1].str() + " is missing, so pixel coordinates are unknown");
        }
        project.set_pixel_landmarks(*index, std::get<LandmarkConfig>(parsed));
        return {200, {{"index", *index}, {"status", to_string(ReviewStatus::reviewed)}}};
      }
      return error(405, "use GET or PUT");
    }
    return error(404, "no such endpoint: " + path);
  } catch (const std::out_of_range& e) {
    return error(404, e.what());
  } catch (const DataError& e) {
    return error(422, e.what());
  }
}

struct ReviewServer::Impl {
  Project& project;
  httplib::Server http;
  std::mutex writer;  // PUT and save run one at a time, in arrival order
};

ReviewServer::ReviewServer(Project& project, std::string ui_dir) : impl_(new Impl{project, {}, {}}) {
  auto& http = impl_->http;
  auto* impl = impl_.get();
  const auto api = [impl](const httplib::Request& req, httplib::Response& res) {
    ApiResponse out;
    if (req.method == "GET") {
      out = handle_api(impl->project, req.method, req.path, req.body);
    } else {
      std::lock_guard lock(impl->writer);
      out = handle_api(impl->project, req.method, req.path, req.body);
    }
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json; charset=utf-8");
  };
  http.Get(R"(/api/.*)", api);
  http.Put(R"(/api/.*)", api);
  http.Post(R"(/api/.*)", api);
  if (!ui_dir.empty() && http.set_mount_point("/", ui_dir)) return;
  http.Get("/", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
  });
}

ReviewServer::~ReviewServer() = default;

int ReviewServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

void ReviewServer::run() { impl_->http.listen_after_bind(); }

void ReviewServer::stop() { impl_->http.stop(); }

}  // namespace facemorph
