#include "anchorcov/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <json.hpp>

#include "anchorcov/numfmt.hpp"

namespace anchorcov {

using nlohmann::json;

namespace {

constexpr double kBoundsEps = 1e-5;  // absorbs 6-decimal quantization

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + end, '\n'));
}

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& rule) {
  throw ParseError(origin, std::nullopt, path, rule);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& origin, const std::string& path) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        ok = true;
        break;
      }
    if (!ok) fail(origin, path, "unknown field '" + item.key() + "'");
  }
}

const json& require_field(const json& obj, const char* key, const std::string& origin,
                          const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(origin, path, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& v, const std::string& origin,
                           const std::string& path) {
  if (!v.is_string()) fail(origin, path, "must be a string");
  return v.get<std::string>();
}

double require_number(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_number()) fail(origin, path, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(origin, path, "must be finite");
  return d;
}

Box require_box(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_array() || v.size() != 4)
    fail(origin, path, "must be an array [x, y, w, h]");
  double c[4];
  for (std::size_t i = 0; i < 4; ++i)
    c[i] = require_number(v[i], origin, path + "[" + std::to_string(i) + "]");
  if (!(c[2] > 0.0) || !(c[3] > 0.0))
    fail(origin, path, "width and height must be > 0");
  return Box(c[0], c[1], c[2], c[3]);
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin, line_of_byte(text, e.byte), "",
                     std::string("JSON syntax error: ") + e.what());
  }
}

// ---- deterministic JSON emission --------------------------------------

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void append_box(std::string& out, const Box& b) {
  out += '[';
  out += format_fixed6(b.x) + ", " + format_fixed6(b.y) + ", " + format_fixed6(b.w) +
         ", " + format_fixed6(b.h);
  out += ']';
}

// ---- CSV --------------------------------------------------------------

struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::vector<CsvRecord> parse_csv(const std::string& text, const std::string& origin) {
  std::vector<CsvRecord> records;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool quoted = false;
    bool done = false;
    while (!done) {
      if (quoted) {
        if (i >= n) throw ParseError(origin, rec.line, "", "unterminated quoted field");
        const char c = text[i++];
        if (c == '"') {
          if (i < n && text[i] == '"') {
            field += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line;
          field += c;
        }
        continue;
      }
      if (i >= n) {
        rec.fields.push_back(std::move(field));
        done = true;
        break;
      }
      const char c = text[i++];
      switch (c) {
        case '"':
          quoted = true;
          break;
        case ',':
          rec.fields.push_back(std::move(field));
          field.clear();
          break;
        case '\r':
          if (i < n && text[i] == '\n') break;  // consumed with the \n below
          field += c;
          break;
        case '\n':
          ++line;
          rec.fields.push_back(std::move(field));
          done = true;
          break;
        default:
          field += c;
      }
    }
    // Drop the phantom empty record a trailing newline would produce.
    if (!(rec.fields.size() == 1 && rec.fields[0].empty() && i >= n))
      records.push_back(std::move(rec));
  }
  return records;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

double parse_csv_number(const std::string& field, const std::string& origin,
                        std::size_t line, const std::string& column) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw ParseError(origin, line, column, "not a valid number: '" + field + "'");
  return value;
}

}  // namespace

// ---- annotations --------------------------------------------------------

Dataset parse_annotations(const std::string& text, const std::string& origin) {
  const json root = parse_json(text, origin);
  if (!root.is_object()) fail(origin, "", "top level must be an object");
  check_keys(root, {"images", "name", "version"}, origin, "");

  const std::string version =
      require_string(require_field(root, "version", origin, ""), origin, "version");
  if (version != "1") fail(origin, "version", "unrecognized version '" + version + "'");

  Dataset ds;
  if (root.contains("name")) ds.name = require_string(root["name"], origin, "name");

  const json& images = require_field(root, "images", origin, "");
  if (!images.is_array()) fail(origin, "images", "must be an array");

  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ipath = "images[" + std::to_string(i) + "]";
    const json& jimg = images[i];
    if (!jimg.is_object()) fail(origin, ipath, "must be an object");
    check_keys(jimg, {"height", "id", "objects", "provenance", "width"}, origin, ipath);

    ImageAnnotation img;
    img.id = require_string(require_field(jimg, "id", origin, ipath), origin,
                            ipath + ".id");
    if (img.id.empty()) fail(origin, ipath + ".id", "must be non-empty");
    if (!seen_ids.insert(img.id).second)
      fail(origin, ipath + ".id", "duplicate image id '" + img.id + "'");
    const std::string where = ipath + " (image '" + img.id + "')";

    img.width = require_number(require_field(jimg, "width", origin, ipath), origin,
                               ipath + ".width");
    img.height = require_number(require_field(jimg, "height", origin, ipath), origin,
                                ipath + ".height");
    if (!(img.width > 0.0) || !(img.height > 0.0))
      fail(origin, where, "image extent must be > 0");

    const json& objects = require_field(jimg, "objects", origin, ipath);
    if (!objects.is_array()) fail(origin, ipath + ".objects", "must be an array");
    for (std::size_t k = 0; k < objects.size(); ++k) {
      const std::string opath =
          ipath + ".objects[" + std::to_string(k) + "] (image '" + img.id + "')";
      const json& jobj = objects[k];
      if (!jobj.is_object()) fail(origin, opath, "must be an object");
      check_keys(jobj, {"bbox", "class"}, origin, opath);
      GroundtruthObject obj;
      obj.class_name = require_string(require_field(jobj, "class", origin, opath),
                                      origin, opath + ".class");
      if (obj.class_name.empty()) fail(origin, opath + ".class", "must be non-empty");
      obj.box = require_box(require_field(jobj, "bbox", origin, opath), origin,
                            opath + ".bbox");
      if (obj.box.x < -kBoundsEps || obj.box.y < -kBoundsEps ||
          obj.box.x2() > img.width + kBoundsEps ||
          obj.box.y2() > img.height + kBoundsEps)
        fail(origin, opath + ".bbox", "object box exceeds image extent");
      img.objects.push_back(std::move(obj));
    }

    if (jimg.contains("provenance")) {
      const std::string ppath = ipath + ".provenance (image '" + img.id + "')";
      const json& jprov = jimg["provenance"];
      if (!jprov.is_object()) fail(origin, ppath, "must be an object");
      check_keys(jprov, {"crop", "scale", "source_id"}, origin, ppath);
      Provenance prov;
      prov.source_id = require_string(require_field(jprov, "source_id", origin, ppath),
                                      origin, ppath + ".source_id");
      if (prov.source_id.empty()) fail(origin, ppath + ".source_id", "must be non-empty");
      prov.crop = require_box(require_field(jprov, "crop", origin, ppath), origin,
                              ppath + ".crop");
      prov.scale = require_number(require_field(jprov, "scale", origin, ppath), origin,
                                  ppath + ".scale");
      if (!(prov.scale > 0.0)) fail(origin, ppath + ".scale", "scale must be > 0");
      img.provenance = std::move(prov);
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

std::string write_annotations(const Dataset& ds) {
  std::string out = "{\n";
  out += "  \"images\": [";
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const ImageAnnotation& img = ds.images[i];
    out += i == 0 ? "\n" : ",\n";
    out += "    {\n";
    out += "      \"height\": " + format_fixed6(img.height) + ",\n";
    out += "      \"id\": ";
    append_escaped(out, img.id);
    out += ",\n";
    out += "      \"objects\": [";
    for (std::size_t k = 0; k < img.objects.size(); ++k) {
      out += k == 0 ? "\n" : ",\n";
      out += "        {\n";
      out += "          \"bbox\": ";
      append_box(out, img.objects[k].box);
      out += ",\n";
      out += "          \"class\": ";
      append_escaped(out, img.objects[k].class_name);
      out += "\n        }";
    }
    out += img.objects.empty() ? "],\n" : "\n      ],\n";
    if (img.provenance) {
      out += "      \"provenance\": {\n";
      out += "        \"crop\": ";
      append_box(out, img.provenance->crop);
      out += ",\n";
      out += "        \"scale\": " + format_fixed6(img.provenance->scale) + ",\n";
      out += "        \"source_id\": ";
      append_escaped(out, img.provenance->source_id);
      out += "\n      },\n";
    }
    out += "      \"width\": " + format_fixed6(img.width) + "\n";
    out += "    }";
  }
  out += ds.images.empty() ? "],\n" : "\n  ],\n";
  if (!ds.name.empty()) {
    out += "  \"name\": ";
    append_escaped(out, ds.name);
    out += ",\n";
  }
  out += "  \"version\": \"1\"\n";
  out += "}\n";
  return out;
}

// ---- proposals ----------------------------------------------------------

std::map<std::string, ProposalSet> parse_proposals(const std::string& text,
                                                   const std::string& origin) {
  const auto records = parse_csv(text, origin);
  if (records.empty()) throw ParseError(origin, 1, "", "missing CSV header");

  const std::vector<std::string> base = {"image_id", "score", "x", "y", "w", "h"};
  const auto& header = records[0].fields;
  bool has_level = false;
  if (header.size() == 7 && std::equal(base.begin(), base.end(), header.begin()) &&
      header[6] == "level") {
    has_level = true;
  } else if (header.size() != 6 || !std::equal(base.begin(), base.end(), header.begin())) {
    throw ParseError(origin, records[0].line, "",
                     "header must be image_id,score,x,y,w,h[,level]");
  }

  std::map<std::string, ProposalSet> sets;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t expected = has_level ? 7 : 6;
    if (rec.fields.size() != expected)
      throw ParseError(origin, rec.line, "",
                       "expected " + std::to_string(expected) + " fields, got " +
                           std::to_string(rec.fields.size()));
    const std::string& id = rec.fields[0];
    if (id.empty()) throw ParseError(origin, rec.line, "image_id", "must be non-empty");

    ScoredBox item;
    item.score = parse_csv_number(rec.fields[1], origin, rec.line, "score");
    if (!std::isfinite(item.score))
      throw ParseError(origin, rec.line, "score", "must be finite");
    const double x = parse_csv_number(rec.fields[2], origin, rec.line, "x");
    const double y = parse_csv_number(rec.fields[3], origin, rec.line, "y");
    const double w = parse_csv_number(rec.fields[4], origin, rec.line, "w");
    const double h = parse_csv_number(rec.fields[5], origin, rec.line, "h");
    if (!(w > 0.0) || !(h > 0.0))
      throw ParseError(origin, rec.line, "w,h", "width and height must be > 0");
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h))
      throw ParseError(origin, rec.line, "x,y,w,h", "must be finite");
    item.box = Box(x, y, w, h);
    if (has_level && !rec.fields[6].empty()) {
      const auto level = level_from_string(rec.fields[6]);
      if (!level)
        throw ParseError(origin, rec.line, "level",
                         "unknown level '" + rec.fields[6] + "'");
      item.level = *level;
    }
    auto& set = sets[id];
    set.image_id = id;
    set.items.push_back(item);
  }
  return sets;
}

std::string write_proposals(const std::map<std::string, ProposalSet>& sets,
                            bool with_level) {
  std::string out = "image_id,score,x,y,w,h";
  if (with_level) out += ",level";
  out += '\n';
  for (const auto& [id, set] : sets) {
    for (const auto& item : set.items) {
      out += csv_quote(id);
      out += ',' + format_fixed6(item.score);
      out += ',' + format_fixed6(item.box.x) + ',' + format_fixed6(item.box.y);
      out += ',' + format_fixed6(item.box.w) + ',' + format_fixed6(item.box.h);
      if (with_level) {
        out += ',';
        if (item.level) out += to_string(*item.level);
      }
      out += '\n';
    }
  }
  return out;
}

// ---- coverage reports -----------------------------------------------------

std::string write_report_json(const CoverageReport& report) {
  std::string out = "{\n";
  out += "  \"mabo\": " + format_fixed6(report.mabo) + ",\n";
  out += "  \"per_class\": {";
  std::size_t i = 0;
  for (const auto& [name, stats] : report.per_class) {
    out += i++ == 0 ? "\n" : ",\n";
    out += "    ";
    append_escaped(out, name);
    out += ": {\n";
    out += "      \"abo\": " + format_fixed6(stats.abo) + ",\n";
    out += "      \"n_gt\": " + std::to_string(stats.n_gt) + "\n";
    out += "    }";
  }
  out += report.per_class.empty() ? "},\n" : "\n  },\n";
  out += "  \"per_gt\": [";
  for (std::size_t k = 0; k < report.per_gt.size(); ++k) {
    const PerGtResult& r = report.per_gt[k];
    out += k == 0 ? "\n" : ",\n";
    out += "    {\n";
    out += "      \"best_box\": ";
    if (r.best_box) append_box(out, *r.best_box);
    else out += "null";
    out += ",\n";
    out += "      \"best_iou\": " + format_fixed6(r.best_iou) + ",\n";
    out += "      \"class\": ";
    append_escaped(out, r.class_name);
    out += ",\n";
    out += "      \"gt\": ";
    append_box(out, r.gt);
    out += ",\n";
    out += "      \"image_id\": ";
    append_escaped(out, r.image_id);
    out += "\n    }";
  }
  out += report.per_gt.empty() ? "],\n" : "\n  ],\n";
  out += "  \"recall\": " + format_fixed6(report.recall) + ",\n";
  out += "  \"threshold\": " + format_fixed6(report.threshold) + "\n";
  out += "}\n";
  return out;
}

CoverageReport parse_report_json(const std::string& text, const std::string& origin) {
  const json root = parse_json(text, origin);
  if (!root.is_object()) fail(origin, "", "top level must be an object");
  check_keys(root, {"mabo", "per_class", "per_gt", "recall", "threshold"}, origin, "");

  CoverageReport report;
  report.mabo = require_number(require_field(root, "mabo", origin, ""), origin, "mabo");
  report.recall =
      require_number(require_field(root, "recall", origin, ""), origin, "recall");
  report.threshold =
      require_number(require_field(root, "threshold", origin, ""), origin, "threshold");

  const json& per_class = require_field(root, "per_class", origin, "");
  if (!per_class.is_object()) fail(origin, "per_class", "must be an object");
  for (const auto& item : per_class.items()) {
    const std::string path = "per_class['" + item.key() + "']";
    const json& v = item.value();
    if (!v.is_object()) fail(origin, path, "must be an object");
    check_keys(v, {"abo", "n_gt"}, origin, path);
    ClassStats stats;
    stats.abo = require_number(require_field(v, "abo", origin, path), origin,
                               path + ".abo");
    const json& n = require_field(v, "n_gt", origin, path);
    if (!n.is_number_integer() || n.get<long long>() < 0)
      fail(origin, path + ".n_gt", "must be a non-negative integer");
    stats.n_gt = n.get<std::size_t>();
    report.per_class[item.key()] = stats;
  }

  const json& per_gt = require_field(root, "per_gt", origin, "");
  if (!per_gt.is_array()) fail(origin, "per_gt", "must be an array");
  for (std::size_t k = 0; k < per_gt.size(); ++k) {
    const std::string path = "per_gt[" + std::to_string(k) + "]";
    const json& v = per_gt[k];
    if (!v.is_object()) fail(origin, path, "must be an object");
    check_keys(v, {"best_box", "best_iou", "class", "gt", "image_id"}, origin, path);
    PerGtResult r;
    r.image_id = require_string(require_field(v, "image_id", origin, path), origin,
                                path + ".image_id");
    r.class_name = require_string(require_field(v, "class", origin, path), origin,
                                  path + ".class");
    r.gt = require_box(require_field(v, "gt", origin, path), origin, path + ".gt");
    r.best_iou = require_number(require_field(v, "best_iou", origin, path), origin,
                                path + ".best_iou");
    const json& bb = require_field(v, "best_box", origin, path);
    if (!bb.is_null()) r.best_box = require_box(bb, origin, path + ".best_box");
    report.per_gt.push_back(std::move(r));
  }
  return report;
}

std::string write_report_csv(const CoverageReport& report) {
  std::string out = "class,n_gt,abo,recall\n";
  std::size_t total = 0;
  for (const auto& [name, stats] : report.per_class) {
    out += csv_quote(name) + ',' + std::to_string(stats.n_gt) + ',' +
           format_fixed6(stats.abo) + ",\n";
    total += stats.n_gt;
  }
  out += ',' + std::to_string(total) + ',' + format_fixed6(report.mabo) + ',' +
         format_fixed6(report.recall) + '\n';
  return out;
}

// ---- sweep curves ---------------------------------------------------------

std::string write_curves_csv(const std::vector<SweepCurve>& curves) {
  std::string out = "anchor_scale,object_size,mabo\n";
  for (const auto& curve : curves) {
    for (const auto& p : curve.points) {
      out += format_fixed6(curve.anchor_scale) + ',' + format_fixed6(p.object_size) +
             ',' + format_fixed6(p.metric) + '\n';
    }
  }
  return out;
}

std::vector<SweepCurve> parse_curves_csv(const std::string& text,
                                         const std::string& origin) {
  const auto records = parse_csv(text, origin);
  if (records.empty()) throw ParseError(origin, 1, "", "missing CSV header");
  const std::vector<std::string> expected = {"anchor_scale", "object_size", "mabo"};
  if (records[0].fields != expected)
    throw ParseError(origin, records[0].line, "",
                     "header must be anchor_scale,object_size,mabo");
  std::vector<SweepCurve> curves;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != 3)
      throw ParseError(origin, rec.line, "", "expected 3 fields");
    const double scale = parse_csv_number(rec.fields[0], origin, rec.line, "anchor_scale");
    const double size = parse_csv_number(rec.fields[1], origin, rec.line, "object_size");
    const double mabo = parse_csv_number(rec.fields[2], origin, rec.line, "mabo");
    if (curves.empty() || curves.back().anchor_scale != scale)
      curves.push_back(SweepCurve{scale, {}});
    curves.back().points.push_back(SweepPoint{size, mabo});
  }
  return curves;
}

}  // namespace anchorcov
