// mixse/wav.hpp

// Copyright 2026  The mixse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixse/dsp.hpp"

namespace mixse {
namespace wav {

namespace detail {

inline uint32_t read_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("wav: truncated file: " + path);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

inline uint16_t read_u16(std::istream& in, const std::string& path) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  if (!in) throw std::runtime_error("wav: truncated file: " + path);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

inline void write_u32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline void write_u16(std::ostream& out, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff),
               static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

inline void write_header(std::ostream& out, uint16_t format, int sample_rate,
                         uint16_t bytes_per_sample, uint32_t data_bytes) {
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, format);
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<uint32_t>(sample_rate));
  write_u32(out, static_cast<uint32_t>(sample_rate) * bytes_per_sample);
  write_u16(out, bytes_per_sample);
  write_u16(out, static_cast<uint16_t>(bytes_per_sample * 8));
  out.write("data", 4);
  write_u32(out, data_bytes);
}

}  // namespace detail

/// Reads a mono PCM 16-bit or IEEE float 32-bit WAV file. Anything else is
/// rejected; no resampling is done here or anywhere downstream.
inline dsp::Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("wav: cannot open " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) {
    throw std::runtime_error("wav: not a RIFF file: " + path);
  }
  detail::read_u32(in, path);
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) {
    throw std::runtime_error("wav: not a WAVE file: " + path);
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::vector<unsigned char> data;
  bool have_data = false;

  while (in.peek() != EOF) {
    in.read(tag, 4);
    if (!in) break;
    const uint32_t size = detail::read_u32(in, path);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) throw std::runtime_error("wav: bad fmt chunk: " + path);
      format = detail::read_u16(in, path);
      channels = detail::read_u16(in, path);
      sample_rate = detail::read_u32(in, path);
      detail::read_u32(in, path);  // byte rate
      detail::read_u16(in, path);  // block align
      bits = detail::read_u16(in, path);
      in.ignore(size - 16);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(size);
      in.read(reinterpret_cast<char*>(data.data()), size);
      if (!in) throw std::runtime_error("wav: truncated data: " + path);
      have_data = true;
    } else {
      in.ignore(size);
    }
    if (size % 2 == 1) in.ignore(1);
  }
  if (!have_fmt || !have_data) {
    throw std::runtime_error("wav: missing fmt or data chunk: " + path);
  }
  if (channels != 1) {
    throw std::runtime_error("wav: only mono is supported: " + path);
  }

  dsp::Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  if (format == 1 && bits == 16) {
    const size_t n = data.size() / 2;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const int16_t v =
          static_cast<int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
      w.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const size_t n = data.size() / 4;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      uint32_t u = static_cast<uint32_t>(data[4 * i]) |
                   (static_cast<uint32_t>(data[4 * i + 1]) << 8) |
                   (static_cast<uint32_t>(data[4 * i + 2]) << 16) |
                   (static_cast<uint32_t>(data[4 * i + 3]) << 24);
      float f;
      std::memcpy(&f, &u, 4);
      w.samples[i] = static_cast<double>(f);
    }
  } else {
    throw std::runtime_error("wav: unsupported sample format in " + path);
  }
  w.validate();
  return w;
}

inline void write_wav_pcm16(const std::string& path, const dsp::Waveform& w) {
  w.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("wav: cannot write " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
  detail::write_header(out, 1, w.sample_rate, 2, data_bytes);
  for (double s : w.samples) {
    const long v = std::lround(std::clamp(s, -1.0, 1.0) * 32768.0);
    const int16_t q = static_cast<int16_t>(std::clamp<long>(v, -32768, 32767));
    detail::write_u16(out, static_cast<uint16_t>(q));
  }
  if (!out) throw std::runtime_error("wav: write failed: " + path);
}

inline void write_wav_float32(const std::string& path,
                              const dsp::Waveform& w) {
  w.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("wav: cannot write " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 4);
  detail::write_header(out, 3, w.sample_rate, 4, data_bytes);
  for (double s : w.samples) {
    const float f = static_cast<float>(s);
    uint32_t u;
    std::memcpy(&u, &f, 4);
    detail::write_u32(out, u);
  }
  if (!out) throw std::runtime_error("wav: write failed: " + path);
}

}  // namespace wav
}  // namespace mixse
