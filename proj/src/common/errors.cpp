#include "imi/common/errors.hpp"

// Out-of-line anchor so the error hierarchy has a home translation unit.
namespace imi {}
