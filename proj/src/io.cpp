#include "gflow/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace gflow {

std::string git_blob_hash(std::string_view content) {
  std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  blob += content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("SHA-1 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    const unsigned char c = digest[i];
    out += hex[c >> 4];
    out += hex[c & 15];
  }
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_w(double w) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", w);
  return buf;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string batch_csv(const SampleBatch& batch, std::string_view config_hash) {
  std::string out;
  out += "# config_hash: " + std::string(config_hash) + "\n";
  out += "# w: " + format_number(batch.meta.w) + "\n";
  out += "seed_index,x0,x_final,status";
  for (std::size_t c = 1; c < batch.dim; ++c)
    out += ",x0_" + std::to_string(c) + ",x_final_" + std::to_string(c);
  out += "\n";
  for (const auto& o : batch.outcomes) {
    out += std::to_string(o.seed_index) + "," + format_number(o.initial[0]) + "," +
           format_number(o.final_state[0]) + "," + to_string(o.status);
    for (std::size_t c = 1; c < batch.dim; ++c)
      out += "," + format_number(o.initial[c]) + "," + format_number(o.final_state[c]);
    out += "\n";
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj, std::string_view config_hash, double w,
                           std::size_t seed_index) {
  std::string out;
  out += "# config_hash: " + std::string(config_hash) + "\n";
  out += "# w: " + format_number(w) + "\n";
  out += "# seed_index: " + std::to_string(seed_index) + "\n";
  out += "s,x,q_neg,mean_pos,mean_neg,term1,term2";
  for (std::size_t c = 1; c < traj.dim; ++c) out += ",x_" + std::to_string(c);
  out += "\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out += format_number(traj.times[i]) + "," + format_number(traj.state(i));
    const auto* d = i < traj.diagnostics.size() && traj.diagnostics[i] ? &*traj.diagnostics[i]
                                                                       : nullptr;
    for (double v : {d ? d->q_neg : NAN, d ? d->mean_pos : NAN, d ? d->mean_neg : NAN,
                     d ? d->term1 : NAN, d ? d->term2 : NAN})
      out += "," + format_number(v);
    for (std::size_t c = 1; c < traj.dim; ++c) out += "," + format_number(traj.state(i, c));
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::filesystem::path& path) {
  if (s == "nan") return NAN;
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error(path.string() + ": malformed number '" + s + "'");
  return v;
}

struct CsvDoc {
  std::vector<std::pair<std::string, std::string>> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string comment(const std::string& key) const {
    for (const auto& [k, v] : comments)
      if (k == key) return v;
    return {};
  }
};

CsvDoc read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  CsvDoc doc;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string key = line.substr(1, colon - 1), val = line.substr(colon + 1);
        auto trim = [](std::string& s) {
          s.erase(0, s.find_first_not_of(' '));
          s.erase(s.find_last_not_of(' ') + 1);
        };
        trim(key);
        trim(val);
        doc.comments.emplace_back(key, val);
      }
      continue;
    }
    auto fields = split(line);
    if (doc.header.empty()) {
      doc.header = std::move(fields);
    } else {
      if (fields.size() != doc.header.size())
        throw std::runtime_error(path.string() + ": row has " + std::to_string(fields.size()) +
                                 " fields, header has " + std::to_string(doc.header.size()));
      doc.rows.push_back(std::move(fields));
    }
  }
  if (doc.header.empty()) throw std::runtime_error(path.string() + ": missing header row");
  return doc;
}

}  // namespace

BatchFile read_batch_csv(const std::filesystem::path& path) {
  const auto doc = read_csv(path);
  if (doc.header.size() < 4 || doc.header[0] != "seed_index" || doc.header[1] != "x0" ||
      doc.header[2] != "x_final" || doc.header[3] != "status" || (doc.header.size() - 4) % 2 != 0)
    throw std::runtime_error(path.string() + ": not a batch file");
  BatchFile out;
  out.config_hash = doc.comment("config_hash");
  const auto w = doc.comment("w");
  out.w = w.empty() ? NAN : parse_number(w, path);
  out.dim = 1 + (doc.header.size() - 4) / 2;
  for (const auto& r : doc.rows) {
    BatchRow row;
    row.seed_index = static_cast<std::size_t>(parse_number(r[0], path));
    row.initial.push_back(parse_number(r[1], path));
    row.final_state.push_back(parse_number(r[2], path));
    row.status = r[3];
    for (std::size_t c = 1; c < out.dim; ++c) {
      row.initial.push_back(parse_number(r[4 + 2 * (c - 1)], path));
      row.final_state.push_back(parse_number(r[5 + 2 * (c - 1)], path));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

TrajectoryFile read_trajectory_csv(const std::filesystem::path& path) {
  const auto doc = read_csv(path);
  if (doc.header.size() < 7 || doc.header[0] != "s" || doc.header[1] != "x")
    throw std::runtime_error(path.string() + ": not a trajectory file");
  TrajectoryFile out;
  out.config_hash = doc.comment("config_hash");
  const auto w = doc.comment("w");
  out.w = w.empty() ? NAN : parse_number(w, path);
  const auto idx = doc.comment("seed_index");
  out.seed_index = idx.empty() ? 0 : static_cast<std::size_t>(parse_number(idx, path));
  out.dim = 1 + (doc.header.size() - 7);
  for (const auto& r : doc.rows) {
    out.times.push_back(parse_number(r[0], path));
    out.states.push_back(parse_number(r[1], path));
    for (std::size_t c = 1; c < out.dim; ++c) out.states.push_back(parse_number(r[6 + c], path));
  }
  return out;
}

}  // namespace gflow
