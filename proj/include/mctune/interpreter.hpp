// Copyright 2026 The mctune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*!
 * \file interpreter.hpp
 * \brief Reference interpreter for Kernel. Used as the semantic-equivalence
 *  oracle for transformed programs; annotations do not change results.
 */

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mctune/kernel.hpp"

namespace mctune {

using BufferMap = std::map<std::string, std::vector<float>>;

struct InterpretOptions {
  /// Kernels with more loop iterations than this are rejected.
  int64_t max_iterations = int64_t{1} << 26;
};

namespace detail {

/// Access flattened to a row-major offset: offset = constant + sum(coeff[l] * i_l).
struct FlatAccess {
  std::vector<int64_t> coeff;  // one per loop
  int64_t constant = 0;
};

inline FlatAccess Flatten(const Kernel& k, const Access& acc) {
  const BufferDecl& buf = k.Buffer(acc.buffer);
  FlatAccess flat;
  flat.coeff.assign(k.loops.size(), 0);
  int64_t row_stride = 1;
  for (size_t d = buf.shape.size(); d-- > 0;) {
    const IndexExpr& e = acc.indices[d];
    flat.constant += e.constant * row_stride;
    for (const auto& t : e.terms) {
      int idx = k.LoopIndex(t.loop);
      if (idx < 0) throw KernelError("index refers to unknown loop " + t.loop);
      flat.coeff[idx] += t.coeff * row_stride;
    }
    row_stride *= buf.shape[d];
  }
  return flat;
}

}  // namespace detail

/// Executes the loop nest in source order and returns the output buffer.
/// The accumulator is zeroed each time the loop at init_level is entered,
/// covering every output element addressed by the spatial loops inside it.
inline std::vector<float> Interpret(const Kernel& k, const BufferMap& inputs,
                                    const InterpretOptions& opts = {}) {
  if (k.TotalIterations() > opts.max_iterations) {
    throw KernelError("kernel " + k.name + " too large to interpret (" + std::to_string(k.TotalIterations()) +
                      " iterations)");
  }
  std::vector<const std::vector<float>*> in_data;
  std::vector<detail::FlatAccess> in_flat;
  for (const auto& acc : k.statement.inputs) {
    const BufferDecl& buf = k.Buffer(acc.buffer);
    auto it = inputs.find(acc.buffer);
    if (it == inputs.end()) throw KernelError("missing input buffer " + acc.buffer);
    if (static_cast<int64_t>(it->second.size()) != buf.NumElements()) {
      throw KernelError("input buffer " + acc.buffer + " has " + std::to_string(it->second.size()) +
                        " elements, expected " + std::to_string(buf.NumElements()));
    }
    in_data.push_back(&it->second);
    in_flat.push_back(detail::Flatten(k, acc));
  }
  const BufferDecl& out_buf = k.OutputBuffer();
  std::vector<float> out(static_cast<size_t>(out_buf.NumElements()), 0.0f);
  detail::FlatAccess out_flat = detail::Flatten(k, k.statement.output);

  const size_t n = k.loops.size();
  const size_t init_level = static_cast<size_t>(k.init_level);
  std::vector<int64_t> idx(n, 0);

  // Spatial loops at or below the init level form the init nest.
  std::vector<size_t> init_loops;
  for (size_t l = init_level; l < n; ++l) {
    if (k.loops[l].kind == LoopKind::kSpatial) init_loops.push_back(l);
  }
  auto run_init = [&]() {
    int64_t base = out_flat.constant;
    for (size_t l = 0; l < init_level; ++l) base += out_flat.coeff[l] * idx[l];
    std::vector<int64_t> sub(init_loops.size(), 0);
    while (true) {
      int64_t off = base;
      for (size_t s = 0; s < init_loops.size(); ++s) off += out_flat.coeff[init_loops[s]] * sub[s];
      out[static_cast<size_t>(off)] = 0.0f;
      size_t s = init_loops.size();
      while (s > 0) {
        --s;
        if (++sub[s] < k.loops[init_loops[s]].extent) break;
        sub[s] = 0;
        if (s == 0) return;
      }
      if (init_loops.empty()) return;
    }
  };

  run_init();
  while (true) {
    int64_t out_off = out_flat.constant;
    for (size_t l = 0; l < n; ++l) out_off += out_flat.coeff[l] * idx[l];
    float prod = 1.0f;
    for (size_t i = 0; i < in_flat.size(); ++i) {
      int64_t off = in_flat[i].constant;
      for (size_t l = 0; l < n; ++l) off += in_flat[i].coeff[l] * idx[l];
      prod *= (*in_data[i])[static_cast<size_t>(off)];
    }
    out[static_cast<size_t>(out_off)] += prod;

    // Odometer step; `changed` is the outermost loop whose index moved.
    size_t changed = n;
    size_t l = n;
    bool done = true;
    while (l > 0) {
      --l;
      if (++idx[l] < k.loops[l].extent) {
        changed = l;
        done = false;
        break;
      }
      idx[l] = 0;
    }
    if (done) break;
    if (changed < init_level) run_init();
  }
  return out;
}

}  // namespace mctune
