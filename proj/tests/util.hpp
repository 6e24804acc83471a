#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "oceanfc/error.hpp"

namespace testutil {

inline std::filesystem::path tmpdir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("oceanfc_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Code of the oceanfc::Error thrown by `fn`; InvalidArgument when nothing is thrown.
inline oceanfc::ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const oceanfc::Error& e) {
        return e.code();
    }
    return oceanfc::ErrorCode::InvalidArgument;
}

}  // namespace testutil
