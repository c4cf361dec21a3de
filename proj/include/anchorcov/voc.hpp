#pragma once

#include <string>

#include "anchorcov/dataset.hpp"

namespace anchorcov {

// Converts one VOC-style per-image XML document (<annotation> with
// <filename>, <size> and <object><name>/<bndbox> entries) into an image
// annotation. Corner coordinates are treated as continuous box edges, so
// width is xmax - xmin. The <filename> text becomes the image id.
ImageAnnotation parse_voc_annotation(const std::string& xml,
                                     const std::string& origin = "<memory>");

}  // namespace anchorcov
