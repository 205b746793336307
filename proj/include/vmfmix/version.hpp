// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace vmfmix {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vmfmix
