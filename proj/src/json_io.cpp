#include "mvblow/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mvblow {

namespace {

using nlohmann::json;

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const char* where) {
  if (!j.is_object()) {
    throw std::invalid_argument(std::string(where) + ": expected an object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw std::invalid_argument(std::string(where) + ": unknown key \"" +
                                  it.key() + "\"");
    }
  }
}

double number_at(const json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw std::invalid_argument(std::string(where) + ": missing numeric \"" +
                                key + "\"");
  }
  return j.at(key).get<double>();
}

}  // namespace

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open for writing: " + tmp.string());
    }
    out << content;
    out.flush();
    if (!out) {
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

nlohmann::json measure_to_json(const Measure1D& mu) {
  json pieces = json::array();
  for (const Piece& p : mu.pieces()) {
    pieces.push_back({{"a", p.a}, {"b", p.b}, {"coeffs", p.coeffs}});
  }
  json atoms = json::array();
  for (const Atom& a : mu.atoms()) {
    atoms.push_back({{"x", a.x}, {"m", a.m}});
  }
  return json{{"pieces", pieces}, {"atoms", atoms}};
}

Measure1D measure_from_json(const nlohmann::json& j) {
  require_keys(j, {"pieces", "atoms"}, "measure");
  std::vector<Piece> pieces;
  if (j.contains("pieces")) {
    if (!j.at("pieces").is_array()) {
      throw std::invalid_argument("measure: \"pieces\" must be an array");
    }
    for (const json& pj : j.at("pieces")) {
      require_keys(pj, {"a", "b", "coeffs"}, "measure piece");
      Piece p;
      p.a = number_at(pj, "a", "measure piece");
      p.b = number_at(pj, "b", "measure piece");
      if (!pj.contains("coeffs") || !pj.at("coeffs").is_array()) {
        throw std::invalid_argument("measure piece: missing \"coeffs\" array");
      }
      for (const json& c : pj.at("coeffs")) {
        if (!c.is_number()) {
          throw std::invalid_argument("measure piece: coeffs must be numbers");
        }
        p.coeffs.push_back(c.get<double>());
      }
      pieces.push_back(std::move(p));
    }
  }
  std::vector<Atom> atoms;
  if (j.contains("atoms")) {
    if (!j.at("atoms").is_array()) {
      throw std::invalid_argument("measure: \"atoms\" must be an array");
    }
    for (const json& aj : j.at("atoms")) {
      require_keys(aj, {"x", "m"}, "measure atom");
      atoms.push_back(Atom{number_at(aj, "x", "measure atom"),
                           number_at(aj, "m", "measure atom")});
    }
  }
  Measure1D mu(std::move(pieces), std::move(atoms));
  mu.validate();
  return mu;
}

Measure1D load_measure_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open measure file: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("measure file " + path + ": " + e.what());
  }
  return measure_from_json(j);
}

void save_measure_file(const Measure1D& mu, const std::string& path) {
  write_text_atomic(path, measure_to_json(mu).dump(2) + "\n");
}

nlohmann::json report_to_json(const CascadeReport& rep) {
  return json{{"time", rep.time},
              {"epsilon_used", rep.epsilon_used},
              {"jump_size", rep.jump_size},
              {"iterations", rep.iterations},
              {"trace", rep.trace},
              {"post_measure", measure_to_json(rep.post_measure)}};
}

nlohmann::json reports_to_json(const std::vector<CascadeReport>& reps) {
  json arr = json::array();
  for (const CascadeReport& r : reps) arr.push_back(report_to_json(r));
  return arr;
}

std::string losses_csv(const LossPath& path,
                       const std::vector<double>* residuals) {
  const auto& t = path.times();
  const auto& v = path.values();
  if (residuals && residuals->size() != t.size()) {
    throw std::invalid_argument("losses_csv: residual count != node count");
  }
  std::ostringstream out;
  out << "t,L,L_prime,residual\n";
  double slope = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i + 1 < t.size()) {
      slope = (v[i + 1] - v[i]) / (t[i + 1] - t[i]);
    }
    double res = residuals ? (*residuals)[i] : 0.0;
    out << g17(t[i]) << ',' << g17(v[i]) << ',' << g17(slope) << ','
        << g17(res) << '\n';
  }
  return out.str();
}

std::string heatmap_csv(const std::vector<double>& ts,
                        const std::vector<double>& xs,
                        const std::vector<std::vector<double>>& rows) {
  if (ts.size() != rows.size()) {
    throw std::invalid_argument("heatmap_csv: snapshot count != time count");
  }
  std::ostringstream out;
  out << "t,x,V\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (rows[i].size() != xs.size()) {
      throw std::invalid_argument("heatmap_csv: row length != grid length");
    }
    for (std::size_t jx = 0; jx < xs.size(); ++jx) {
      out << g17(ts[i]) << ',' << g17(xs[jx]) << ',' << g17(rows[i][jx])
          << '\n';
    }
  }
  return out.str();
}

std::string heatmap_svg(const std::vector<double>& ts,
                        const std::vector<double>& xs,
                        const std::vector<std::vector<double>>& rows,
                        std::size_t max_cols) {
  if (ts.empty() || xs.size() < 2 || rows.size() != ts.size()) {
    throw std::invalid_argument("heatmap_svg: need at least one snapshot");
  }
  // Bucket columns so huge grids do not blow up the file.
  std::size_t nx = xs.size();
  std::size_t ncol = std::min(max_cols, nx);
  std::vector<std::vector<int>> shade(ts.size(), std::vector<int>(ncol, 0));
  double vmax = 0.0;
  for (const auto& row : rows) {
    if (row.size() != nx) {
      throw std::invalid_argument("heatmap_svg: row length != grid length");
    }
    for (double v : row) vmax = std::max(vmax, v);
  }
  if (vmax <= 0.0) vmax = 1.0;
  // 64 gray levels: indistinguishable from 8-bit by eye, and the coarser
  // quantization lets smooth gradients collapse into few rectangles.
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t c = 0; c < ncol; ++c) {
      std::size_t j0 = c * nx / ncol;
      std::size_t j1 = std::max(j0 + 1, (c + 1) * nx / ncol);
      double acc = 0.0;
      for (std::size_t jx = j0; jx < j1; ++jx) acc += rows[i][jx];
      double mean = acc / static_cast<double>(j1 - j0);
      int lvl = static_cast<int>(std::lround(63.0 * mean / vmax));
      lvl = std::min(63, std::max(0, lvl));
      shade[i][c] = (lvl * 255) / 63;
    }
  }

  const double plot_w = 720.0, plot_h = 400.0;
  const double ml = 64.0, mb = 44.0, mt = 16.0, mr = 16.0;
  const double W = ml + plot_w + mr, H = mt + plot_h + mb;
  double t_lo = ts.front(), t_hi = ts.back();
  if (t_hi <= t_lo) t_hi = t_lo + 1.0;
  double x_lo = xs.front(), x_hi = xs.back();

  auto px = [&](std::size_t c) { return ml + plot_w * c / double(ncol); };
  // Row i covers the time slab ending at ts[i]; t increases upward.
  auto py_top = [&](std::size_t i) {
    return mt + plot_h * (1.0 - (ts[i] - t_lo) / (t_hi - t_lo));
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
      << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H
      << "\" fill=\"white\"/>\n";
  char buf[256];
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double y0 = py_top(i);
    double y1 = (i == 0) ? mt + plot_h : py_top(i - 1);
    double hgt = y1 - y0;
    if (hgt <= 0.0) hgt = plot_h / double(ts.size());
    // Merge equal-shade runs within the row.
    std::size_t c = 0;
    while (c < ncol) {
      std::size_t c2 = c + 1;
      while (c2 < ncol && shade[i][c2] == shade[i][c]) ++c2;
      int g = shade[i][c];
      if (g > 0) {
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" "
                      "height=\"%.1f\" fill=\"#%02x%02x%02x\"/>\n",
                      px(c), y0, px(c2) - px(c), hgt, g, g, g);
        out << buf;
      }
      c = c2;
    }
  }
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  // Axis ticks: 5 per axis, short labels.
  for (int k = 0; k <= 4; ++k) {
    double fx = k / 4.0;
    double xpix = ml + plot_w * fx;
    double xval = x_lo + (x_hi - x_lo) * fx;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"black\"/>\n",
                  xpix, mt + plot_h, xpix, mt + plot_h + 5.0);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" "
                  "text-anchor=\"middle\">%.3g</text>\n",
                  xpix, mt + plot_h + 18.0, xval);
    out << buf;
    double ypix = mt + plot_h * (1.0 - fx);
    double tval = t_lo + (t_hi - t_lo) * fx;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"black\"/>\n",
                  ml - 5.0, ypix, ml, ypix);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" "
                  "text-anchor=\"end\">%.3g</text>\n",
                  ml - 8.0, ypix + 4.0, tval);
    out << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.2f\" y=\"%.2f\" font-size=\"13\" "
                "text-anchor=\"middle\">x</text>\n",
                ml + plot_w / 2.0, H - 8.0);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.2f\" y=\"%.2f\" font-size=\"13\" "
                "text-anchor=\"middle\" transform=\"rotate(-90 %.2f %.2f)\">"
                "t</text>\n",
                16.0, mt + plot_h / 2.0, 16.0, mt + plot_h / 2.0);
  out << buf;
  out << "</svg>\n";
  return out.str();
}

}  // namespace mvblow
