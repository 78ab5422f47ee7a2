#include "facemorph/tps_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace facemorph {

ParseError::ParseError(std::size_t line, const std::string& what)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  for (auto& line : lines) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  }
  return lines;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

bool parse_double(std::string_view token, double& value) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

bool parse_int(std::string_view token, long& value) {
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, value);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_fields(std::string_view line, auto is_separator) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_separator(line[i])) ++i;
    const auto start = i;
    while (i < line.size() && !is_separator(line[i])) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

void append_fixed(std::string& out, double value) {
  std::array<char, 64> buffer{};
  const auto [ptr, ec] =
      std::to_chars(buffer.data(), buffer.data() + buffer.size(), value, std::chars_format::fixed, 5);
  out.append(buffer.data(), ptr);
}

}  // namespace

std::vector<Specimen> parse_tps(std::string_view text, std::vector<std::string>* warnings) {
  const auto lines = split_lines(text);
  std::vector<Specimen> specimens;
  std::size_t i = 0;
  const auto n_lines = lines.size();

  while (i < n_lines) {
    const auto line = trim(lines[i]);
    const auto line_no = i + 1;
    if (line.empty()) {
      ++i;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_no, "expected a KEY=value line, got '" + std::string(line) + "'");
    }
    const auto key = upper(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));

    if (key == "LM") {
      long count = 0;
      if (!parse_int(value, count) || count < 0) {
        throw ParseError(line_no, "invalid landmark count '" + std::string(value) + "'");
      }
      Specimen specimen;
      specimen.landmarks.resize(count, 2);
      ++i;
      for (long k = 0; k < count; ++k) {
        while (i < n_lines && trim(lines[i]).empty()) ++i;
        if (i >= n_lines) {
          throw ParseError(i + 1, "expected coordinate " + std::to_string(k + 1) + " of " +
                                      std::to_string(count) + ", reached end of file");
        }
        const auto coord_line = trim(lines[i]);
        if (coord_line.find('=') != std::string_view::npos) {
          throw ParseError(i + 1, "expected coordinate " + std::to_string(k + 1) + " of " +
                                      std::to_string(count) + ", got '" + std::string(coord_line) +
                                      "'");
        }
        const auto fields =
            split_fields(coord_line, [](char c) { return c == ' ' || c == '\t' || c == ','; });
        double x = 0.0;
        double y = 0.0;
        if (fields.size() != 2 || !parse_double(fields[0], x) || !parse_double(fields[1], y)) {
          throw ParseError(i + 1, "non-numeric coordinate line '" + std::string(coord_line) + "'");
        }
        specimen.landmarks(k, 0) = x;
        specimen.landmarks(k, 1) = y;
        ++i;
      }
      specimens.push_back(std::move(specimen));
      continue;
    }

    if (specimens.empty()) {
      throw ParseError(line_no, "'" + key + "=' before any LM= record");
    }
    auto& current = specimens.back();
    if (key == "IMAGE") {
      current.image_name = std::string(value);
    } else if (key == "ID") {
      current.id = std::string(value);
    } else if (key == "SCALE") {
      double scale = 0.0;
      if (!parse_double(value, scale) || !(scale > 0.0) || !std::isfinite(scale)) {
        throw ParseError(line_no, "invalid SCALE '" + std::string(value) + "'");
      }
      current.scale = scale;
    } else if (warnings) {
      warnings->push_back("line " + std::to_string(line_no) + ": ignored key '" + key + "'");
    }
    ++i;
  }
  return specimens;
}

std::string write_tps(const std::vector<Specimen>& specimens) {
  std::string out;
  for (std::size_t s = 0; s < specimens.size(); ++s) {
    const auto& specimen = specimens[s];
    if (!specimen.landmarks.allFinite()) {
      throw DataError("specimen " + std::to_string(s) + " has non-finite coordinates");
    }
    out += "LM=" + std::to_string(specimen.landmarks.rows()) + "\n";
    for (Eigen::Index k = 0; k < specimen.landmarks.rows(); ++k) {
      append_fixed(out, specimen.landmarks(k, 0));
      out += ' ';
      append_fixed(out, specimen.landmarks(k, 1));
      out += '\n';
    }
    if (specimen.image_name) out += "IMAGE=" + *specimen.image_name + "\n";
    if (specimen.id) out += "ID=" + *specimen.id + "\n";
    if (specimen.scale) {
      std::array<char, 64> buffer{};
      const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), *specimen.scale);
      out += "SCALE=";
      out.append(buffer.data(), ptr);
      out += '\n';
    }
  }
  return out;
}

std::vector<SliderTriplet> parse_sliders(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<SliderTriplet> triplets;
  bool header_seen = false;
  std::size_t row = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto fields = split_fields(line, [](char c) { return c == ',' || c == ' ' || c == '\t'; });
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 3 && upper(fields[0]) == "BEFORE") continue;
    }
    ++row;
    long v[3] = {0, 0, 0};
    if (fields.size() != 3 || !parse_int(fields[0], v[0]) || !parse_int(fields[1], v[1]) ||
        !parse_int(fields[2], v[2])) {
      throw ParseError(row, "slider row must hold three integer indices");
    }
    for (long index : v) {
      if (index < 1 || index > kLandmarkCount) {
        throw ParseError(row, "slider index " + std::to_string(index) + " outside 1..72");
      }
    }
    if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2]) {
      throw ParseError(row, "slider indices must be distinct");
    }
    triplets.push_back({static_cast<LandmarkIndex>(v[0]), static_cast<LandmarkIndex>(v[1]),
                        static_cast<LandmarkIndex>(v[2])});
  }
  return triplets;
}

std::string write_sliders(const std::vector<SliderTriplet>& triplets) {
  std::ostringstream out;
  out << "before,slide,after\n";
  for (const auto& t : triplets) out << t.before << ',' << t.slide << ',' << t.after << '\n';
  return out.str();
}

LandmarkConfig pixel_to_tps(const LandmarkConfig& points, double image_height) {
  if (!(image_height > 0.0)) throw DataError("image height must be positive");
  LandmarkConfig out = points;
  out.col(1) = (image_height - points.col(1).array()).matrix();
  return out;
}

LandmarkConfig tps_to_pixel(const LandmarkConfig& points, double image_height) {
  return pixel_to_tps(points, image_height);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::string& path, std::string_view contents,
                       const std::function<void(const std::string&)>& before_rename) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + temp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(temp, ec);
      throw DataError("write to '" + temp.string() + "' failed");
    }
  }
  if (before_rename) {
    try {
      before_rename(temp.string());
    } catch (...) {
      std::error_code ignored;
      fs::remove(temp, ignored);
      throw;
    }
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw DataError("cannot replace '" + path + "'");
  }
}

}  // namespace facemorph
