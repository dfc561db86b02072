#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dpm/runner.hpp"

namespace dpm {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw std::invalid_argument("config: bad value for '" + std::string(key) + "': " + std::string(v));
  return out;
}

std::string canonical_key(std::string_view key) {
  std::string k(key);
  for (char& ch : k)
    if (ch == '_') ch = '-';
  return k;
}

}  // namespace

TestCase parse_test(std::string_view s) {
  if (s == "A" || s == "a") return TestCase::A;
  if (s == "B" || s == "b") return TestCase::B;
  if (s == "manufactured") return TestCase::manufactured;
  throw std::invalid_argument("unknown test id: " + std::string(s));
}

Partition parse_mode(std::string_view s) {
  if (s == "sd") return Partition::single;
  if (s == "dd-case1") return Partition::concentric;
  if (s == "dd-case2") return Partition::wedge;
  throw std::invalid_argument("unknown mode: " + std::string(s));
}

const char* test_name(TestCase t) {
  switch (t) {
    case TestCase::A:
      return "A";
    case TestCase::B:
      return "B";
    case TestCase::manufactured:
      return "manufactured";
  }
  return "?";
}

void apply_config_entry(RunConfig& cfg, std::string_view key_in, std::string_view value) {
  const std::string key = canonical_key(trim(key_in));
  const std::string_view v = trim(value);
  if (key == "test") cfg.test = parse_test(v);
  else if (key == "mode") cfg.mode = parse_mode(v);
  else if (key == "n") cfg.n = parse_number<int>(key, v);
  else if (key == "n1") cfg.n1 = parse_number<int>(key, v);
  else if (key == "n2") cfg.n2 = parse_number<int>(key, v);
  else if (key == "harmonics") cfg.harmonics = parse_number<int>(key, v);
  else if (key == "beta") cfg.beta = parse_number<int>(key, v);
  else if (key == "interface-harmonics") cfg.interface_harmonics = parse_number<int>(key, v);
  else if (key == "wedge-eps") cfg.wedge_eps = parse_number<double>(key, v);
  else if (key == "radius") cfg.radius = parse_number<double>(key, v);
  else if (key == "inner-radius") cfg.inner_radius = parse_number<double>(key, v);
  else if (key == "chi") cfg.chi = parse_number<double>(key, v);
  else if (key == "t-final") cfg.t_final = parse_number<double>(key, v);
  else if (key == "dt-cap-factor") cfg.dt_cap_factor = parse_number<double>(key, v);
  else if (key == "dt") cfg.dt_fixed = parse_number<double>(key, v);
  else if (key == "stoppage") cfg.stoppage = parse_number<double>(key, v);
  else if (key == "max-steps") cfg.max_steps = parse_number<long>(key, v);
  else if (key == "out") cfg.out = std::string(v);
  else if (key == "snapshot-every") cfg.snapshot_every = parse_number<long>(key, v);
  else if (key == "threads") cfg.threads = parse_number<int>(key, v);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "potential-cache-mb") cfg.potential_cache_mb = parse_number<std::size_t>(key, v);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    apply_config_entry(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

const char* const kTimeseriesHeader = "step,t,dt,max_rho,second_moment,free_energy,bep_residual,clamp";

std::string format_record(const TimeSeriesRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.step, r.t, r.dt,
                r.max_rho, r.second_moment, r.free_energy, r.bep_residual, r.clamp);
  return buf;
}

void write_timeseries(std::span<const TimeSeriesRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kTimeseriesHeader << '\n';
  for (const auto& r : records) out << format_record(r) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<TimeSeriesRecord> read_timeseries(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTimeseriesHeader)
    throw std::runtime_error("timeseries: unexpected header in " + path.string());
  std::vector<TimeSeriesRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TimeSeriesRecord r;
    std::vector<std::string_view> cols;
    std::string_view sv(line);
    for (std::size_t p = 0;;) {
      const auto c = sv.find(',', p);
      cols.push_back(sv.substr(p, c == std::string_view::npos ? std::string_view::npos : c - p));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    if (cols.size() != 8) throw std::runtime_error("timeseries: expected 8 columns");
    r.step = parse_number<long>("step", cols[0]);
    double* fields[] = {&r.t, &r.dt, &r.max_rho, &r.second_moment, &r.free_energy, &r.bep_residual, &r.clamp};
    for (int k = 0; k < 7; ++k) *fields[k] = parse_number<double>("value", cols[k + 1]);
    out.push_back(r);
  }
  return out;
}

namespace {
constexpr char kMagic[8] = {'D', 'P', 'M', '3', 0, 0, 0, 0};
constexpr std::uint32_t kSnapshotVersion = 1;
}  // namespace

void write_snapshot(const GridField& field, const GridSpec& grid, double t,
                    const std::filesystem::path& path, std::string_view name) {
  if (!field.matches(grid)) throw std::invalid_argument("write_snapshot: field/grid mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::uint32_t version = kSnapshotVersion, n = static_cast<std::uint32_t>(grid.cells);
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&grid.h), 8);
  out.write(reinterpret_cast<const char*>(&t), 8);
  for (int j = 1; j <= grid.cells; ++j)
    for (int k = 1; k <= grid.cells; ++k)
      out.write(reinterpret_cast<const char*>(field.data() + grid.index(j, k, 1)),
                static_cast<std::streamsize>(sizeof(double)) * grid.cells);
  if (!out) throw std::runtime_error("write failed: " + path.string());

  std::ofstream side(path.string() + ".txt");
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  side << "format=DPM3\nversion=" << version << "\nfield=" << name << "\nN=" << n
       << "\nh=" << num(grid.h) << "\nt=" << num(t) << "\ncube_min=" << num(grid.cube_min.x) << ','
       << num(grid.cube_min.y) << ',' << num(grid.cube_min.z) << "\norder=j,k,l (l fastest)\n";
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("snapshot: bad magic in " + path.string());
  std::uint32_t version = 0, n = 0;
  Snapshot s;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&s.h), 8);
  in.read(reinterpret_cast<char*>(&s.t), 8);
  if (!in || version != kSnapshotVersion) throw std::runtime_error("snapshot: unsupported header");
  s.cells = static_cast<int>(n);
  s.values.resize(static_cast<std::size_t>(n) * n * n);
  in.read(reinterpret_cast<char*>(s.values.data()),
          static_cast<std::streamsize>(s.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("snapshot: truncated payload");
  return s;
}

}  // namespace dpm
