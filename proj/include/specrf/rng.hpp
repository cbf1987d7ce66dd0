/*
 * Copyright 2026 The specrf Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace specrf {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and a path of indices,
/// e.g. derive_seed(seed, {cell, repetition}).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace specrf
