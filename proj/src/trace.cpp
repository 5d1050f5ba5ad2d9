// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/trace.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <tuple>

#include "json.hpp"
#include "relcache/error.hpp"

namespace relcache {

using nlohmann::json;

std::string_view to_string(Stream stream) {
  return stream == Stream::Input ? "input" : "output";
}

namespace {

std::string describe(const RecordKey& key) {
  return "(t=" + std::to_string(key.t) + ", module=" + std::to_string(key.module) +
         ", stream=" + std::string(to_string(key.stream)) + ")";
}

}  // namespace

Trace::Trace(int n_modules, Shape shape, std::vector<int> timesteps)
    : n_modules_(n_modules), shape_(std::move(shape)), timesteps_(std::move(timesteps)) {
  if (n_modules_ < 1) throw Error(ErrorKind::InvalidArgument, "trace needs >= 1 module");
  if (shape_.empty() || std::find(shape_.begin(), shape_.end(), 0u) != shape_.end()) {
    throw Error(ErrorKind::InvalidArgument, "trace shape extents must be positive");
  }
  for (std::size_t i = 1; i < timesteps_.size(); ++i) {
    if (timesteps_[i] >= timesteps_[i - 1]) {
      throw Error(ErrorKind::InvalidArgument, "trace timesteps must strictly decrease");
    }
  }
  records_.resize(timesteps_.size() * static_cast<std::size_t>(n_modules_) * 2);
}

bool Trace::contains_timestep(int t) const {
  return std::binary_search(timesteps_.begin(), timesteps_.end(), t, std::greater<>());
}

std::size_t Trace::slot(int t, int module, Stream stream) const {
  const auto it = std::lower_bound(timesteps_.begin(), timesteps_.end(), t, std::greater<>());
  if (it == timesteps_.end() || *it != t) {
    throw Error(ErrorKind::InvalidArgument, "timestep " + std::to_string(t) + " not in trace");
  }
  if (module < 0 || module >= n_modules_) {
    throw Error(ErrorKind::InvalidArgument, "module " + std::to_string(module) + " out of range");
  }
  const auto row = static_cast<std::size_t>(it - timesteps_.begin());
  return (row * static_cast<std::size_t>(n_modules_) + static_cast<std::size_t>(module)) * 2 +
         (stream == Stream::Output ? 1 : 0);
}

void Trace::set(int t, int module, Stream stream, FeatureVec value) {
  if (value.shape() != shape_) {
    throw Error(ErrorKind::ShapeMismatch, "trace record shape differs from trace shape");
  }
  records_[slot(t, module, stream)] = std::move(value);
}

const FeatureVec& Trace::at(int t, int module, Stream stream) const {
  const auto& rec = records_[slot(t, module, stream)];
  if (!rec) {
    throw Error(ErrorKind::InsufficientData,
                "trace record missing " + describe({t, module, stream}));
  }
  return *rec;
}

bool Trace::has(int t, int module, Stream stream) const {
  return records_[slot(t, module, stream)].has_value();
}

std::optional<RecordKey> Trace::first_missing() const {
  for (int t : timesteps_) {
    for (int m = 0; m < n_modules_; ++m) {
      for (Stream s : {Stream::Input, Stream::Output}) {
        if (!has(t, m, s)) return RecordKey{t, m, s};
      }
    }
  }
  return std::nullopt;
}

void trace_write(const Trace& trace, std::ostream& out) {
  if (auto missing = trace.first_missing()) {
    throw Error(ErrorKind::InvalidArgument,
                "cannot write incomplete trace, missing " + describe(*missing));
  }
  json header = {{"type", "header"},
                 {"version", 1},
                 {"n_modules", trace.n_modules()},
                 {"shape", trace.shape()},
                 {"timesteps", trace.timesteps()}};
  out << header.dump() << '\n';
  for (int t : trace.timesteps()) {
    for (int m = 0; m < trace.n_modules(); ++m) {
      for (Stream s : {Stream::Input, Stream::Output}) {
        json rec = {{"type", "feature"},
                    {"t", t},
                    {"module", m},
                    {"stream", to_string(s)},
                    {"data", trace.at(t, m, s).data()}};
        out << rec.dump() << '\n';
      }
    }
  }
  if (!out) throw Error(ErrorKind::IoError, "failed writing trace");
}

void trace_write(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  trace_write(trace, out);
}

namespace {

[[noreturn]] void format_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorKind::FormatError, "line " + std::to_string(line_no) + ": " + what);
}

int require_int(const json& obj, const char* key, std::size_t line_no) {
  if (!obj.contains(key) || !obj[key].is_number_integer()) {
    format_error(line_no, std::string("field '") + key + "' must be an integer");
  }
  return obj[key].get<int>();
}

Trace parse_header(const std::string& line) {
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception& e) {
    format_error(1, std::string("header is not valid JSON: ") + e.what());
  }
  if (!h.is_object() || h.value("type", "") != "header") {
    format_error(1, "first line must be a header object");
  }
  if (require_int(h, "version", 1) != 1) format_error(1, "unsupported trace version");
  const int n_modules = require_int(h, "n_modules", 1);
  if (n_modules < 1) format_error(1, "n_modules must be positive");
  if (!h.contains("shape") || !h["shape"].is_array() || h["shape"].empty()) {
    format_error(1, "shape must be a non-empty array");
  }
  Shape shape;
  for (const auto& e : h["shape"]) {
    if (!e.is_number_integer() || e.get<long long>() <= 0) {
      format_error(1, "shape extents must be positive integers");
    }
    shape.push_back(e.get<std::size_t>());
  }
  if (!h.contains("timesteps") || !h["timesteps"].is_array() || h["timesteps"].empty()) {
    format_error(1, "timesteps must be a non-empty array");
  }
  std::vector<int> timesteps;
  for (const auto& e : h["timesteps"]) {
    if (!e.is_number_integer()) format_error(1, "timesteps must be integers");
    const int t = e.get<int>();
    if (!timesteps.empty() && t >= timesteps.back()) {
      format_error(1, "timesteps must strictly decrease");
    }
    timesteps.push_back(t);
  }
  return Trace(n_modules, std::move(shape), std::move(timesteps));
}

}  // namespace

Trace trace_read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::FormatError, "line 1: empty trace file");
  }
  Trace trace = parse_header(line);
  const std::size_t expected = shape_size(trace.shape());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      format_error(line_no, std::string("record is not valid JSON: ") + e.what());
    }
    if (!rec.is_object() || rec.value("type", "") != "feature") {
      format_error(line_no, "expected a feature record");
    }
    const int t = require_int(rec, "t", line_no);
    const int module = require_int(rec, "module", line_no);
    if (!trace.contains_timestep(t)) {
      format_error(line_no, "timestep " + std::to_string(t) + " not declared in header");
    }
    if (module < 0 || module >= trace.n_modules()) {
      format_error(line_no, "module " + std::to_string(module) + " out of range");
    }
    const std::string stream_name = rec.value("stream", "");
    Stream stream;
    if (stream_name == "input") {
      stream = Stream::Input;
    } else if (stream_name == "output") {
      stream = Stream::Output;
    } else {
      format_error(line_no, "stream must be \"input\" or \"output\"");
    }
    if (!rec.contains("data") || !rec["data"].is_array()) {
      format_error(line_no, "data must be an array");
    }
    const auto& data = rec["data"];
    if (data.size() != expected) {
      format_error(line_no, "shape mismatch: " + std::to_string(data.size()) +
                                " values for " + describe({t, module, stream}) +
                                ", header shape holds " + std::to_string(expected));
    }
    std::vector<double> values;
    values.reserve(expected);
    for (const auto& v : data) {
      if (!v.is_number()) format_error(line_no, "data entries must be numbers");
      values.push_back(v.get<double>());
    }
    if (trace.has(t, module, stream)) {
      format_error(line_no, "duplicate record " + describe({t, module, stream}));
    }
    try {
      trace.set(t, module, stream, FeatureVec(std::move(values), trace.shape()));
    } catch (const Error& e) {
      format_error(line_no, e.what());
    }
  }
  if (auto missing = trace.first_missing()) {
    throw Error(ErrorKind::FormatError, "missing record " + describe(*missing));
  }
  return trace;
}

Trace trace_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  return trace_read(in);
}

}  // namespace relcache
