#pragma once

#include <mutex>

namespace hfpk::detail {

// FFTW's planner is not thread-safe; every plan create/destroy goes through this lock.
std::mutex& fftw_planner_mutex();

}  // namespace hfpk::detail
