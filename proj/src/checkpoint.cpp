#include "coretemp/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coretemp/errors.hpp"

namespace coretemp {

namespace {

constexpr const char* kMagic = "coretemp-checkpoint";

std::string hexf(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hexf(const std::string& s, const std::string& path, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ParseError(path, line, "bad number '" + s + "'");
  return v;
}

}  // namespace

std::string checkpoint_text(const Model& m) {
  std::ostringstream out;
  const auto& w = m.net.w;
  out << kMagic << ' ' << kCheckpointVersion << '\n';
  out << "hidden " << w.hidden() << '\n';
  out << "features " << w.features() << '\n';
  out << "input " << kInputDim << '\n';
  out << "window " << m.window << '\n';
  out << "freeze " << m.net.freeze.lstm << ' ' << m.net.freeze.fc1 << ' ' << m.net.freeze.fc2 << '\n';
  out << "norm_hash " << m.norm.hash() << '\n';
  out << "norm_mean";
  for (double v : m.norm.mean) out << ' ' << hexf(v);
  out << "\nnorm_std";
  for (double v : m.norm.std) out << ' ' << hexf(v);
  out << "\nlabel " << hexf(m.norm.label_mean) << ' ' << hexf(m.norm.label_std) << '\n';
  const auto flat = w.flatten();
  out << "weights " << flat.size() << '\n';
  for (double v : flat) out << hexf(v) << '\n';
  out << "end\n";
  return out.str();
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << checkpoint_text(model);
  if (!out) throw IoError("write failed for '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const std::string& key) {
    if (!std::getline(in, line)) throw ParseError(path, lineno + 1, "unexpected end of file, wanted '" + key + "'");
    ++lineno;
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) throw ParseError(path, lineno, "expected '" + key + "', got '" + k + "'");
    std::vector<std::string> toks;
    for (std::string t; ss >> t;) toks.push_back(t);
    return toks;
  };
  auto magic = next(kMagic);
  if (magic.size() != 1 || std::atoi(magic[0].c_str()) != kCheckpointVersion)
    throw ParseError(path, 1, "unsupported checkpoint version");
  const int hidden = std::atoi(next("hidden").at(0).c_str());
  const int features = std::atoi(next("features").at(0).c_str());
  if (std::atoi(next("input").at(0).c_str()) != kInputDim) throw ParseError(path, lineno, "input size mismatch");
  Model m;
  m.window = static_cast<std::size_t>(std::atoll(next("window").at(0).c_str()));
  const auto fz = next("freeze");
  if (fz.size() != 3) throw ParseError(path, lineno, "freeze mask needs 3 flags");
  m.net.freeze = {fz[0] == "1", fz[1] == "1", fz[2] == "1"};
  const auto hash = next("norm_hash");
  const auto mean = next("norm_mean");
  const auto sd = next("norm_std");
  if (mean.size() != 4 || sd.size() != 4) throw ParseError(path, lineno, "stats need 4 entries");
  for (int f = 0; f < 4; ++f) {
    m.norm.mean[f] = parse_hexf(mean[f], path, lineno - 1);
    m.norm.std[f] = parse_hexf(sd[f], path, lineno);
  }
  const auto lab = next("label");
  if (lab.size() != 2) throw ParseError(path, lineno, "label stats need 2 entries");
  m.norm.label_mean = parse_hexf(lab[0], path, lineno);
  m.norm.label_std = parse_hexf(lab[1], path, lineno);
  if (hash.size() != 1 || hash[0] != m.norm.hash()) throw ParseError(path, lineno, "normalization hash mismatch");
  if (hidden <= 0 || features <= 0) throw ParseError(path, 2, "bad layer sizes");
  m.net.w = NetWeights::zeros(hidden, features);
  const auto count = static_cast<std::size_t>(std::atoll(next("weights").at(0).c_str()));
  std::vector<double> flat;
  flat.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ParseError(path, lineno + 1, "truncated weights");
    ++lineno;
    flat.push_back(parse_hexf(line, path, lineno));
  }
  if (flat.size() != m.net.w.flatten().size()) throw ParseError(path, lineno, "weight count does not match shapes");
  m.net.w.unflatten(flat);
  next("end");
  return m;
}

}  // namespace coretemp
