// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace splatview {

/// Applies SPLATVIEW_THREADS (0 or unset = runtime default). Returns the thread cap in effect.
int configure_threads();

} // namespace splatview
