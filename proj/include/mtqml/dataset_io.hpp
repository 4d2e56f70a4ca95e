#pragma once

#include <iosfwd>
#include <string>

#include "mtqml/types.hpp"

namespace mtqml {

/// CSV layout: a header line "# mtqml-dataset v1 p=<p> n=<N>", a column line
/// "re_0,im_0,...,re_{p-1},im_{p-1}", then one row per sample with 17
/// significant digits, so values round-trip exactly.
void write_dataset_csv(const Dataset& data, std::ostream& out);
void write_dataset_csv(const Dataset& data, const std::string& path);

Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);

}  // namespace mtqml
