#include "anchorcov/voc.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "anchorcov/errors.hpp"

namespace anchorcov {

namespace {

std::string decode_entities(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '&') {
      if (s.compare(i, 5, "&amp;") == 0) { out += '&'; i += 5; continue; }
      if (s.compare(i, 4, "&lt;") == 0) { out += '<'; i += 4; continue; }
      if (s.compare(i, 4, "&gt;") == 0) { out += '>'; i += 4; continue; }
      if (s.compare(i, 6, "&quot;") == 0) { out += '"'; i += 6; continue; }
      if (s.compare(i, 6, "&apos;") == 0) { out += '\''; i += 6; continue; }
    }
    out += s[i++];
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Text of the first <tag>...</tag> inside [from, to). Tolerates attributes
// on the opening tag. Returns npos positions on absence.
struct TagSpan {
  std::size_t begin = std::string::npos;  // first char of the content
  std::size_t end = std::string::npos;    // one past the content
};

TagSpan find_tag(const std::string& xml, const std::string& tag, std::size_t from,
                 std::size_t to) {
  const std::string open = "<" + tag;
  std::size_t pos = from;
  while (pos < to) {
    pos = xml.find(open, pos);
    if (pos == std::string::npos || pos >= to) return {};
    const std::size_t after = pos + open.size();
    if (after < xml.size() && (xml[after] == '>' || std::isspace(static_cast<unsigned char>(xml[after])))) {
      const std::size_t gt = xml.find('>', after);
      if (gt == std::string::npos || gt >= to) return {};
      const std::string close = "</" + tag + ">";
      const std::size_t cend = xml.find(close, gt + 1);
      if (cend == std::string::npos || cend > to) return {};
      return TagSpan{gt + 1, cend};
    }
    pos = after;  // prefix of a longer tag name, keep scanning
  }
  return {};
}

std::string require_tag_text(const std::string& xml, const std::string& tag,
                             std::size_t from, std::size_t to,
                             const std::string& origin, const std::string& path) {
  const TagSpan span = find_tag(xml, tag, from, to);
  if (span.begin == std::string::npos)
    throw ParseError(origin, std::nullopt, path, "missing <" + tag + "> element");
  return trim(decode_entities(xml.substr(span.begin, span.end - span.begin)));
}

double require_tag_number(const std::string& xml, const std::string& tag,
                          std::size_t from, std::size_t to, const std::string& origin,
                          const std::string& path) {
  const std::string text = require_tag_text(xml, tag, from, to, origin, path);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value))
    throw ParseError(origin, std::nullopt, path + "." + tag,
                     "not a valid number: '" + text + "'");
  return value;
}

}  // namespace

ImageAnnotation parse_voc_annotation(const std::string& xml, const std::string& origin) {
  const TagSpan ann = find_tag(xml, "annotation", 0, xml.size());
  if (ann.begin == std::string::npos)
    throw ParseError(origin, std::nullopt, "", "missing <annotation> element");

  ImageAnnotation img;
  img.id = require_tag_text(xml, "filename", ann.begin, ann.end, origin, "annotation");
  if (img.id.empty())
    throw ParseError(origin, std::nullopt, "annotation.filename", "must be non-empty");

  const TagSpan size = find_tag(xml, "size", ann.begin, ann.end);
  if (size.begin == std::string::npos)
    throw ParseError(origin, std::nullopt, "annotation", "missing <size> element");
  img.width = require_tag_number(xml, "width", size.begin, size.end, origin, "size");
  img.height = require_tag_number(xml, "height", size.begin, size.end, origin, "size");
  if (!(img.width > 0.0) || !(img.height > 0.0))
    throw ParseError(origin, std::nullopt, "size", "image extent must be > 0");

  std::size_t pos = ann.begin;
  int index = 0;
  for (;;) {
    const TagSpan obj = find_tag(xml, "object", pos, ann.end);
    if (obj.begin == std::string::npos) break;
    const std::string path = "object[" + std::to_string(index++) + "]";
    GroundtruthObject gt;
    gt.class_name = require_tag_text(xml, "name", obj.begin, obj.end, origin, path);
    if (gt.class_name.empty())
      throw ParseError(origin, std::nullopt, path + ".name", "must be non-empty");
    const TagSpan bnd = find_tag(xml, "bndbox", obj.begin, obj.end);
    if (bnd.begin == std::string::npos)
      throw ParseError(origin, std::nullopt, path, "missing <bndbox> element");
    const double xmin = require_tag_number(xml, "xmin", bnd.begin, bnd.end, origin, path);
    const double ymin = require_tag_number(xml, "ymin", bnd.begin, bnd.end, origin, path);
    const double xmax = require_tag_number(xml, "xmax", bnd.begin, bnd.end, origin, path);
    const double ymax = require_tag_number(xml, "ymax", bnd.begin, bnd.end, origin, path);
    if (!(xmax > xmin) || !(ymax > ymin))
      throw ParseError(origin, std::nullopt, path + ".bndbox",
                       "xmax/ymax must exceed xmin/ymin");
    gt.box = Box(xmin, ymin, xmax - xmin, ymax - ymin);
    if (gt.box.x < 0.0 || gt.box.y < 0.0 || gt.box.x2() > img.width ||
        gt.box.y2() > img.height)
      throw ParseError(origin, std::nullopt, path + ".bndbox",
                       "box exceeds image extent (image '" + img.id + "')");
    img.objects.push_back(std::move(gt));
    pos = obj.end;
  }
  return img;
}

}  // namespace anchorcov
