#include "trapkit/trace_io.hpp"

#include "trapkit/units.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace trapkit {

ParseError::ParseError(const std::string& source, std::size_t line_number,
                       const std::string& message)
    : std::runtime_error(line_number > 0
                             ? source + ":" + std::to_string(line_number) + ": " + message
                             : source + ": " + message),
      line(line_number) {}

std::string format_number(double value) {
  char buf[64];
  // Shortest representation that round-trips; never more than 17 digits.
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, p);
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_field(std::string_view field, std::string_view source, std::size_t line,
                   std::string_view column) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto [p, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || p != end) {
    throw ParseError(std::string(source), line,
                     "cannot parse " + std::string(column) + " value '" + std::string(field) +
                         "'");
  }
  return v;
}

// Reads lines, stripping a trailing CR would hide CRLF input; reject it instead.
bool next_line(std::istream& is, std::string& line, std::size_t& number,
               std::string_view source) {
  if (!std::getline(is, line)) return false;
  ++number;
  if (!line.empty() && line.back() == '\r') {
    throw ParseError(std::string(source), number, "CRLF line endings are not accepted");
  }
  return true;
}

}  // namespace

void write_trace_csv(std::ostream& os, const DataTrace& trace) {
  trace.validate();
  os << "# kind=" << value_kind_name(trace.kind) << '\n';
  for (const auto& [k, v] : trace.metadata) {
    if (k == "kind") continue;
    os << "# " << k << '=' << v << '\n';
  }
  os << (trace.has_sigma() ? "time_s,value,sigma\n" : "time_s,value\n");
  for (std::size_t i = 0; i < trace.size(); ++i) {
    os << format_number(trace.times[i]) << ',' << format_number(trace.values[i]);
    if (trace.has_sigma()) os << ',' << format_number(trace.sigma[i]);
    os << '\n';
  }
}

std::string trace_to_csv(const DataTrace& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

DataTrace read_trace_csv(std::istream& is, std::string_view source) {
  DataTrace trace;
  std::string line;
  std::size_t number = 0;
  bool header_seen = false;
  bool with_sigma = false;
  while (next_line(is, line, number, source)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body(line);
      body.remove_prefix(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string key(body.substr(0, eq));
      const std::string value(body.substr(eq + 1));
      if (key == "kind") {
        try {
          trace.kind = parse_value_kind(value);
        } catch (const std::invalid_argument& e) {
          throw ParseError(std::string(source), number, e.what());
        }
      } else {
        trace.metadata[key] = value;
      }
      continue;
    }
    if (!header_seen) {
      if (line == "time_s,value") {
        with_sigma = false;
      } else if (line == "time_s,value,sigma") {
        with_sigma = true;
      } else {
        throw ParseError(std::string(source), number,
                         "expected header 'time_s,value' or 'time_s,value,sigma', got '" + line +
                             "'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split(line, ',');
    const std::size_t expected = with_sigma ? 3 : 2;
    if (fields.size() != expected) {
      throw ParseError(std::string(source), number,
                       "expected " + std::to_string(expected) + " fields, got " +
                           std::to_string(fields.size()));
    }
    const double t = parse_field(fields[0], source, number, "time_s");
    const double v = parse_field(fields[1], source, number, "value");
    if (!trace.times.empty() && !(t > trace.times.back())) {
      throw ParseError(std::string(source), number, "time_s must be strictly increasing");
    }
    trace.times.push_back(t);
    trace.values.push_back(v);
    if (with_sigma) {
      const double s = parse_field(fields[2], source, number, "sigma");
      if (!(s > 0.0)) throw ParseError(std::string(source), number, "sigma must be > 0");
      trace.sigma.push_back(s);
    }
  }
  if (!header_seen) throw ParseError(std::string(source), 0, "empty trace file (no header)");
  if (trace.times.empty()) throw ParseError(std::string(source), 0, "trace has no data rows");
  try {
    trace.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string(source), 0, e.what());
  }
  return trace;
}

DataTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_trace_csv(in, path.string());
}

std::vector<SigmaPRun> read_sigma_p_runs(std::istream& is, std::string_view source) {
  static constexpr std::string_view kHeader =
      "rb_intensity_mW_cm2,ionizing_intensity_mW_cm2,gamma_tot_per_s";
  static constexpr std::string_view kHeaderSigma =
      "rb_intensity_mW_cm2,ionizing_intensity_mW_cm2,gamma_tot_per_s,gamma_tot_sigma_per_s";
  std::vector<SigmaPRun> runs;
  std::string line;
  std::size_t number = 0;
  bool header_seen = false;
  bool with_sigma = false;
  while (next_line(is, line, number, source)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line == kHeader) {
        with_sigma = false;
      } else if (line == kHeaderSigma) {
        with_sigma = true;
      } else {
        throw ParseError(std::string(source), number,
                         "expected header '" + std::string(kHeader) + "[,gamma_tot_sigma_per_s]'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split(line, ',');
    const std::size_t expected = with_sigma ? 4 : 3;
    if (fields.size() != expected) {
      throw ParseError(std::string(source), number,
                       "expected " + std::to_string(expected) + " fields, got " +
                           std::to_string(fields.size()));
    }
    SigmaPRun run;
    const double rb = parse_field(fields[0], source, number, "rb_intensity_mW_cm2");
    const double ip = parse_field(fields[1], source, number, "ionizing_intensity_mW_cm2");
    run.gamma_total = parse_field(fields[2], source, number, "gamma_tot_per_s");
    if (with_sigma) {
      run.gamma_total_sigma = parse_field(fields[3], source, number, "gamma_tot_sigma_per_s");
    }
    try {
      run.rb_intensity = intensity_to_si(rb);
      run.ionizing_intensity = intensity_to_si(ip);
      run.validate();
    } catch (const std::exception& e) {
      throw ParseError(std::string(source), number, e.what());
    }
    runs.push_back(run);
  }
  if (!header_seen) throw ParseError(std::string(source), 0, "empty runs file (no header)");
  if (runs.empty()) throw ParseError(std::string(source), 0, "runs file has no data rows");
  return runs;
}

std::vector<SigmaPRun> read_sigma_p_runs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_sigma_p_runs(in, path.string());
}

std::string sigma_p_runs_to_csv(const std::vector<SigmaPRun>& runs) {
  const bool with_sigma = !runs.empty() && std::all_of(runs.begin(), runs.end(), [](const auto& r) {
    return r.gamma_total_sigma > 0.0;
  });
  std::ostringstream os;
  os << "rb_intensity_mW_cm2,ionizing_intensity_mW_cm2,gamma_tot_per_s";
  if (with_sigma) os << ",gamma_tot_sigma_per_s";
  os << '\n';
  for (const auto& r : runs) {
    os << format_number(r.rb_intensity / 10.0) << ',' << format_number(r.ionizing_intensity / 10.0)
       << ',' << format_number(r.gamma_total);
    if (with_sigma) os << ',' << format_number(r.gamma_total_sigma);
    os << '\n';
  }
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace trapkit
