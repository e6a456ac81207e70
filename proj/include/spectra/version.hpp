#pragma once

namespace spectra {

inline constexpr const char* library_version = "spectra-lab 0.1.0";

} // namespace spectra
