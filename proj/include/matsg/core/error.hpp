#pragma once

#include <stdexcept>
#include <string>

namespace matsg {

// Contract violations and malformed inputs across all modules.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace matsg
