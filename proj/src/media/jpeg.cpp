// Copyright 2026 The VIDNet Authors. All Rights Reserved.
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

#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <jpeglib.h>

#include "media/media.hpp"

namespace vidnet::media {
namespace {

struct ErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<ErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void silence(j_common_ptr, int) {}

// Both stages keep no C++ objects with destructors alive across setjmp.
bool encode(const Frame& frame, int quality, unsigned char** buffer,
            unsigned long* size, std::string& error) {
  jpeg_compress_struct cinfo;
  ErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = on_error;
  jerr.pub.emit_message = silence;
  if (setjmp(jerr.jump)) {
    error = jerr.message;
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, buffer, size);
  cinfo.image_width = static_cast<JDIMENSION>(frame.width());
  cinfo.image_height = static_cast<JDIMENSION>(frame.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  cinfo.dct_method = JDCT_ISLOW;
  cinfo.optimize_coding = FALSE;
  for (int c = 0; c < cinfo.num_components; ++c) {
    cinfo.comp_info[c].h_samp_factor = 1;
    cinfo.comp_info[c].v_samp_factor = 1;
  }
  jpeg_start_compress(&cinfo, TRUE);
  const JDIMENSION stride = cinfo.image_width * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(frame.pixels().data() +
                                        cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

bool decode(const unsigned char* buffer, unsigned long size, Frame& out,
            std::string& error) {
  jpeg_decompress_struct cinfo;
  ErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = on_error;
  jerr.pub.emit_message = silence;
  if (setjmp(jerr.jump)) {
    error = jerr.message;
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, buffer, size);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  cinfo.dct_method = JDCT_ISLOW;
  jpeg_start_decompress(&cinfo);
  const JDIMENSION stride = cinfo.output_width * cinfo.output_components;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels().data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

}  // namespace

Frame jpeg_roundtrip(const Frame& frame, int quality) {
  if (quality < 1 || quality > 100)
    throw std::invalid_argument("jpeg quality must be in [1, 100], got " +
                                std::to_string(quality));
  if (frame.empty() ||
      frame.pixels().size() !=
          static_cast<std::size_t>(frame.height()) * frame.width() * 3)
    throw std::invalid_argument("jpeg_roundtrip expects an RGB frame");

  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  std::string error;
  if (!encode(frame, quality, &buffer, &size, error)) {
    std::free(buffer);
    throw std::runtime_error("jpeg encode failed: " + error);
  }
  Frame out(frame.height(), frame.width());
  const bool ok = decode(buffer, size, out, error);
  std::free(buffer);
  if (!ok) throw std::runtime_error("jpeg decode failed: " + error);
  return out;
}

}  // namespace vidnet::media
