/*
 * Copyright 2026 The mmfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MMFUSE_LOG_H_
#define MMFUSE_LOG_H_

#include <functional>
#include <string>
#include <string_view>

namespace mmfuse {

using WarningSink = std::function<void(std::string_view)>;

// Emits a warning through the current sink (stderr by default).
void Warn(std::string_view message);

// Replaces the warning sink; returns the previous one. Passing an empty
// function restores the stderr sink.
WarningSink SetWarningSink(WarningSink sink);

// Number of warnings emitted since process start.
long WarningCount();

}  // namespace mmfuse

#endif  // MMFUSE_LOG_H_
