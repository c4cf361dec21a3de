#pragma once

#include <map>
#include <string>
#include <vector>

#include "anchorcov/coverage.hpp"
#include "anchorcov/dataset.hpp"
#include "anchorcov/errors.hpp"
#include "anchorcov/proposals.hpp"

namespace anchorcov {

// Annotation documents are JSON:
//   { "version": "1", "name"?: str,
//     "images": [ { "id": str, "width": num, "height": num,
//                   "objects": [ { "class": str, "bbox": [x, y, w, h] } ],
//                   "provenance"?: { "source_id": str, "crop": [x,y,w,h],
//                                    "scale": num } } ] }
// Parsing is strict: unknown fields, duplicate ids, and boxes outside the
// image extent are rejected with the location and the violated rule.
Dataset parse_annotations(const std::string& text,
                          const std::string& origin = "<memory>");

// Deterministic writer: alphabetically ordered keys, reals fixed at six
// decimals, 2-space indent, trailing newline. parse(write(x)) reproduces x
// up to that quantization, and write(parse(write(x))) is byte-identical.
std::string write_annotations(const Dataset& ds);

// Proposal lists are CSV with header image_id,score,x,y,w,h[,level].
// RFC 4180 quoting; rows grouped by image id, input order kept per image.
std::map<std::string, ProposalSet> parse_proposals(
    const std::string& text, const std::string& origin = "<memory>");
std::string write_proposals(const std::map<std::string, ProposalSet>& sets,
                            bool with_level);

std::string write_report_json(const CoverageReport& report);
CoverageReport parse_report_json(const std::string& text,
                                 const std::string& origin = "<memory>");

// Per-class table plus a summary row whose class column is empty (class
// names must be non-empty, so the summary cannot collide with a class).
std::string write_report_csv(const CoverageReport& report);

// Header anchor_scale,object_size,mabo; one row per curve point, curves in
// scale order, points in size order.
std::string write_curves_csv(const std::vector<SweepCurve>& curves);
std::vector<SweepCurve> parse_curves_csv(const std::string& text,
                                         const std::string& origin = "<memory>");

}  // namespace anchorcov
