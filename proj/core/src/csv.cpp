#include "ermu/csv.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>
#include <unistd.h>

namespace ermu {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          out.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

namespace {

void append_arm(std::string& o, const TrialResult& t, const ArmResult& a, char arm) {
  o += csv_field(t.family + ':' + arm);
  o += fmt::format(",{},{},{},{},", t.n, t.p, t.trial, t.seed);
  o += format_double(a.train_opt) + ',';
  o += format_double(a.test_x.value) + ',' + format_double(a.test_x.se) + ',';
  o += format_double(a.test_g.value) + ',' + format_double(a.test_g.se) + ',';
  o += fmt::format("{},", a.iterations);
  o += csv_field(flags_to_string(a.flags));
  o += "\r\n";
}

template <class T>
bool parse_int(const std::string& s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_real(const std::string& s, double& out) {
  if (s == "nan") { out = std::nan(""); return true; }
  if (s == "inf") { out = INFINITY; return true; }
  if (s == "-inf") { out = -INFINITY; return true; }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::string trials_to_csv(std::span<const TrialResult> trials) {
  std::string o(kTrialCsvHeader);
  o += "\r\n";
  for (const TrialResult& t : trials) {
    append_arm(o, t, t.x_arm, 'x');
    append_arm(o, t, t.g_arm, 'g');
  }
  return o;
}

std::vector<TrialResult> parse_trials_csv(std::string_view text, const std::string& source,
                                          CsvDiagnostics& diag) {
  using Key = std::tuple<std::string, Index, int>;
  struct Pending {
    TrialResult r;
    bool has_x = false, has_g = false;
    int line = 0;
  };
  std::map<Key, Pending> rows;

  int lineno = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      header_seen = true;
      if (line != kTrialCsvHeader) {
        diag.messages.push_back(fmt::format("{}:{}: unexpected header", source, lineno));
        return {};
      }
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    auto bad = [&](const std::string& why) {
      diag.messages.push_back(fmt::format("{}:{}: {}", source, lineno, why));
    };
    if (f.size() != 12) {
      bad(fmt::format("expected 12 fields, found {}", f.size()));
      continue;
    }
    const auto colon = f[0].rfind(':');
    if (colon == std::string::npos || colon + 2 != f[0].size() || (f[0].back() != 'x' && f[0].back() != 'g')) {
      bad("family column must end in ':x' or ':g'");
      continue;
    }
    TrialResult t;
    t.family = f[0].substr(0, colon);
    ArmResult a;
    unsigned flags = 0;
    bool ok = parse_int(f[1], t.n) && parse_int(f[2], t.p) && parse_int(f[3], t.trial) &&
              parse_int(f[4], t.seed) && parse_real(f[5], a.train_opt) &&
              parse_real(f[6], a.test_x.value) && parse_real(f[7], a.test_x.se) &&
              parse_real(f[8], a.test_g.value) && parse_real(f[9], a.test_g.se) &&
              parse_int(f[10], a.iterations);
    if (ok) {
      try {
        flags = flags_from_string(f[11]);
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) {
      bad("malformed numeric field or flag");
      continue;
    }
    a.flags = flags;
    Pending& p = rows[Key{t.family, t.n, t.trial}];
    const bool is_x = f[0].back() == 'x';
    if ((is_x && p.has_x) || (!is_x && p.has_g)) {
      bad("duplicate arm");
      continue;
    }
    if (!p.has_x && !p.has_g) {
      p.r = t;
      p.line = lineno;
    }
    (is_x ? p.r.x_arm : p.r.g_arm) = a;
    (is_x ? p.has_x : p.has_g) = true;
  }
  if (!header_seen) diag.messages.push_back(fmt::format("{}: empty file", source));

  std::vector<TrialResult> out;
  for (auto& [key, p] : rows) {
    if (!(p.has_x && p.has_g)) {
      diag.messages.push_back(fmt::format("{}:{}: trial {} of '{}' at n={} lacks its {} arm", source,
                                          p.line, std::get<2>(key), std::get<0>(key),
                                          std::get<1>(key), p.has_x ? "g" : "x"));
      continue;
    }
    out.push_back(std::move(p.r));
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += fmt::format(".tmp-{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out) out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("cannot write " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string());
  }
}

}  // namespace ermu
