#include "gyrocal/errors.hpp"

namespace gyrocal {

int exit_code(const Error& e) noexcept { return static_cast<int>(e.error_class()); }

}  // namespace gyrocal
