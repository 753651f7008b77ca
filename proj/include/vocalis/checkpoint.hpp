// Copyright 2026 Vocalis Authors
// "VCKP" checkpoint container: named, shaped f32 arrays.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "vocalis/ndarray.hpp"

namespace vocalis::nn {

struct NamedArray {
  std::string name;
  NdArray<float> array;
};

// Ordered collection of named arrays. Order is preserved on disk, so two
// snapshots of the same model compare byte-for-byte.
struct Checkpoint {
  std::vector<NamedArray> arrays;

  bool has(const std::string& name) const;
  const NdArray<float>& get(const std::string& name) const;
  void put(const std::string& name, NdArray<float> array);

  // Scalar convenience for model metadata (kind, context length, ...).
  void put_scalar(const std::string& name, float v);
  float get_scalar(const std::string& name) const;
};

// Layout: magic "VCKP", version u16, count u32, then per array:
// name (u32 byte length + UTF-8), rank u32, extents u32 each,
// row-major f32 little-endian values.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vocalis::nn
