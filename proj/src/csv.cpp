#include "bragg_qnd/csv.hpp"

#include <cstdio>

namespace bragg_qnd
{

std::string format_real(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

}  // namespace bragg_qnd
