// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vocalis::nn {

namespace {
void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}
void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

bool Checkpoint::has(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

const NdArray<float>& Checkpoint::get(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a.array;
  }
  throw std::runtime_error("checkpoint: no array named \"" + name + "\"");
}

void Checkpoint::put(const std::string& name, NdArray<float> array) {
  for (auto& a : arrays) {
    if (a.name == name) {
      a.array = std::move(array);
      return;
    }
  }
  arrays.push_back({name, std::move(array)});
}

void Checkpoint::put_scalar(const std::string& name, float v) {
  put(name, NdArray<float>({1}, std::vector<float>{v}));
}

float Checkpoint::get_scalar(const std::string& name) const { return get(name)[0]; }

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write("VCKP", 4);
  put_u16(f, 1);
  put_u32(f, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    put_u32(f, static_cast<std::uint32_t>(a.name.size()));
    f.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put_u32(f, static_cast<std::uint32_t>(a.array.rank()));
    for (int d = 0; d < a.array.rank(); ++d) {
      put_u32(f, static_cast<std::uint32_t>(a.array.extent(d)));
    }
    for (std::size_t i = 0; i < a.array.size(); ++i) {
      std::uint32_t u;
      std::memcpy(&u, &a.array[i], 4);
      put_u32(f, u);
    }
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint not found: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "VCKP", 4) != 0) {
    throw std::runtime_error("not a VCKP checkpoint: " + path);
  }
  if (get_u16(f) != 1) throw std::runtime_error("unsupported VCKP version: " + path);
  const std::uint32_t count = get_u32(f);
  Checkpoint ckpt;
  ckpt.arrays.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = get_u32(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const std::uint32_t rank = get_u32(f);
    std::vector<int> shape(rank);
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<int>(get_u32(f));
      total *= static_cast<std::size_t>(shape[d]);
    }
    std::vector<float> data(total);
    for (std::size_t i = 0; i < total; ++i) {
      const std::uint32_t u = get_u32(f);
      std::memcpy(&data[i], &u, 4);
    }
    if (!f) throw std::runtime_error("truncated VCKP checkpoint: " + path);
    ckpt.arrays.push_back({std::move(name), NdArray<float>(std::move(shape), std::move(data))});
  }
  return ckpt;
}

}  // namespace vocalis::nn
