#ifndef TCLPOP_VERSION_HPP
#define TCLPOP_VERSION_HPP

namespace tclpop {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kFormatVersion = 1;

} // namespace tclpop

#endif
