#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gomix/runtime.hpp"

namespace gomix {

inline constexpr std::string_view trace_header =
    "seconds,evaluations,generation,population,fitness";

namespace detail {

// Shortest representation that parses back to the same double.
inline void append_double(std::string& s, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  s.append(buf, res.ptr);
}

}  // namespace detail

// Streams trace records as CSV. Improvement records are always written;
// boundary records act as a heartbeat and are dropped unless enough wall
// clock passed since the last emitted row. All numeric fields round-trip
// losslessly through parse_trace.
class CsvTraceWriter final : public TraceSink {
 public:
  explicit CsvTraceWriter(std::ostream& out, double heartbeat_seconds = 0.5)
      : out_(out), heartbeat_(heartbeat_seconds) {
    out_ << trace_header << '\n';
  }

  void improvement(const TraceRecord& r) override { write_row(r); }

  void boundary(const TraceRecord& r) override {
    if (wrote_any_ && r.seconds - last_seconds_ < heartbeat_) return;
    write_row(r);
  }

 private:
  void write_row(const TraceRecord& r) {
    row_.clear();
    detail::append_double(row_, r.seconds);
    row_.push_back(',');
    detail::append_double(row_, r.evaluations);
    row_.push_back(',');
    row_.append(std::to_string(r.generation));
    row_.push_back(',');
    row_.append(std::to_string(r.population));
    row_.push_back(',');
    detail::append_double(row_, r.fitness);
    row_.push_back('\n');
    out_ << row_;
    out_.flush();
    last_seconds_ = r.seconds;
    wrote_any_ = true;
  }

  std::ostream& out_;
  double heartbeat_;
  std::string row_;
  double last_seconds_ = 0.0;
  bool wrote_any_ = false;
};

namespace detail {

inline double parse_trace_double(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    throw std::runtime_error("trace: line " + std::to_string(line) +
                             ": bad numeric field '" + std::string(field) + "'");
  return v;
}

inline long parse_trace_long(std::string_view field, std::size_t line) {
  long v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    throw std::runtime_error("trace: line " + std::to_string(line) +
                             ": bad integer field '" + std::string(field) + "'");
  return v;
}

}  // namespace detail

inline std::vector<TraceRecord> parse_trace(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != trace_header)
    throw std::runtime_error("trace: missing or malformed header");
  ++line_no;

  std::vector<TraceRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string_view rest = line;
    std::string_view field[5];
    for (int i = 0; i < 5; ++i) {
      const std::size_t comma = rest.find(',');
      if (i < 4) {
        if (comma == std::string_view::npos)
          throw std::runtime_error("trace: line " + std::to_string(line_no) +
                                   ": expected 5 fields");
        field[i] = rest.substr(0, comma);
        rest.remove_prefix(comma + 1);
      } else {
        if (comma != std::string_view::npos)
          throw std::runtime_error("trace: line " + std::to_string(line_no) +
                                   ": expected 5 fields");
        field[i] = rest;
      }
    }
    TraceRecord r;
    r.seconds = detail::parse_trace_double(field[0], line_no);
    r.evaluations = detail::parse_trace_double(field[1], line_no);
    r.generation = detail::parse_trace_long(field[2], line_no);
    r.population = static_cast<int>(detail::parse_trace_long(field[3], line_no));
    r.fitness = detail::parse_trace_double(field[4], line_no);
    records.push_back(r);
  }
  return records;
}

// File-level invariants: wall clock and elitist fitness never go backwards.
inline bool trace_monotone(std::span<const TraceRecord> records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].seconds < records[i - 1].seconds) return false;
    if (records[i].fitness < records[i - 1].fitness) return false;
  }
  return true;
}

}  // namespace gomix
