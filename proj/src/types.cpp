#include "svol/types.hpp"

namespace svol {

const char* scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Euler:
      return "euler";
    case SchemeKind::NV:
      return "nv";
    case SchemeKind::NVd:
      return "nvd";
    case SchemeKind::NVG:
      return "nvg";
  }
  return "?";
}

SchemeKind scheme_from_name(const std::string& name) {
  if (name == "euler") return SchemeKind::Euler;
  if (name == "nv") return SchemeKind::NV;
  if (name == "nvd") return SchemeKind::NVd;
  if (name == "nvg") return SchemeKind::NVG;
  throw ValidationError("unknown scheme '" + name + "' (expected euler, nv, nvd or nvg)");
}

}  // namespace svol
