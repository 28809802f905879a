#include <fstream>
#include <sstream>

#include "tollrl/errors.hpp"
#include "tollrl/netmodel.hpp"

namespace tollrl {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, int line) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw NetworkError("Parse", "line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  }
}

int to_int(const std::string& s, int line) {
  double v = to_double(s, line);
  if (v != static_cast<int>(v))
    throw NetworkError("Parse", "line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
  return static_cast<int>(v);
}

bool to_flag(const std::string& s, int line) {
  if (s == "1" || s == "yes" || s == "true" || s == "y") return true;
  if (s == "0" || s == "no" || s == "false" || s == "n" || s == "-") return false;
  throw NetworkError("Parse", "line " + std::to_string(line) + ": expected a 0/1 flag, got '" + s + "'");
}

FundamentalDiagram make_fd(const FdDefaults& d, int lanes) {
  FundamentalDiagram fd;
  fd.free_speed = d.free_speed;
  fd.capacity = d.capacity_per_lane * lanes;
  fd.jam_density = d.jam_density_per_lane * lanes;
  fd.backwave_speed = d.free_speed / d.speed_ratio;
  return fd;
}

struct PendingLink {
  Link link;
  std::string length_text;
  FdDefaults fd;
  int line = 0;
};

}  // namespace

Network parse_network(const std::string& text) {
  Network net;
  FdDefaults defaults;
  std::vector<PendingLink> pending;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw NetworkError("Parse", "line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    if (section == "grid" || section == "defaults") {
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw NetworkError("Parse", "line " + std::to_string(line_no) + ": expected key = value");
      std::string key = trim(line.substr(0, eq));
      double value = to_double(trim(line.substr(eq + 1)), line_no);
      if (section == "grid") {
        if (key == "dt") net.grid.dt = value;
        else if (key == "toll_period") net.grid.toll_period = value;
        else if (key == "horizon") net.grid.horizon = value;
        else throw NetworkError("Parse", "line " + std::to_string(line_no) + ": unknown grid key " + key);
      } else {
        if (key == "free_speed") defaults.free_speed = value;
        else if (key == "capacity_per_lane") defaults.capacity_per_lane = value;
        else if (key == "jam_density_per_lane") defaults.jam_density_per_lane = value;
        else if (key == "speed_ratio") defaults.speed_ratio = value;
        else throw NetworkError("Parse", "line " + std::to_string(line_no) + ": unknown default " + key);
      }
      continue;
    }
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (section == "nodes" || section == "origins" || section == "destinations") {
      auto& target = section == "nodes" ? net.nodes : section == "origins" ? net.origins : net.destinations;
      for (const auto& t : tok) target.push_back(to_int(t, line_no));
    } else if (section == "links") {
      if (tok.size() < 7)
        throw NetworkError("Parse", "line " + std::to_string(line_no) +
                                        ": link rows need tail head length lanes kind tolled detectored");
      PendingLink p;
      p.line = line_no;
      p.link.tail = to_int(tok[0], line_no);
      p.link.head = to_int(tok[1], line_no);
      p.length_text = tok[2];
      p.link.lanes = to_int(tok[3], line_no);
      auto kind = parse_link_kind(tok[4]);
      if (!kind) throw NetworkError("Parse", "line " + std::to_string(line_no) + ": unknown link kind " + tok[4]);
      p.link.kind = *kind;
      p.link.tolled = to_flag(tok[5], line_no);
      p.link.detectored = to_flag(tok[6], line_no);
      p.fd = defaults;
      for (size_t i = 7; i < tok.size(); ++i) {
        auto eq = tok[i].find('=');
        if (eq == std::string::npos)
          throw NetworkError("Parse", "line " + std::to_string(line_no) + ": override must be key=value");
        std::string key = tok[i].substr(0, eq);
        double v = to_double(tok[i].substr(eq + 1), line_no);
        if (key == "free_speed") p.fd.free_speed = v;
        else if (key == "capacity_per_lane") p.fd.capacity_per_lane = v;
        else if (key == "jam_density_per_lane") p.fd.jam_density_per_lane = v;
        else if (key == "speed_ratio") p.fd.speed_ratio = v;
        else throw NetworkError("Parse", "line " + std::to_string(line_no) + ": unknown override " + key);
      }
      pending.push_back(std::move(p));
    } else {
      throw NetworkError("Parse", "line " + std::to_string(line_no) + ": content outside a known section");
    }
  }

  net.default_free_speed = defaults.free_speed;
  net.cell_length = defaults.free_speed * net.grid.dt / 3600.0;
  for (auto& p : pending) {
    const std::string& s = p.length_text;
    if (!s.empty() && s.back() == 'c') {
      p.link.length = to_int(s.substr(0, s.size() - 1), p.line) * net.cell_length;
    } else {
      p.link.length = to_double(s, p.line);
    }
    p.link.fd = make_fd(p.fd, p.link.lanes);
    net.links.push_back(p.link);
  }
  return net;
}

Network load_network(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw NetworkError("Io", "cannot open network file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_network(ss.str());
}

}  // namespace tollrl
