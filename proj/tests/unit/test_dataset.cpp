// Copyright 2026 The ttsdiag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <filesystem>
#include <functional>

#include "test_support.hpp"
#include "ttsdiag/dataset.hpp"
#include "ttsdiag/digest.hpp"
#include "ttsdiag/error.hpp"

using namespace ttsdiag;
using namespace ttsdiag::testing;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

void write_task(const TempDir& tmp) {
  write_text(tmp / "task.json",
             R"({"dataset_name":"t","class0_name":"normal","class1_name":"pneumonia",)"
             R"("modality_phrase":"chest X-ray image"})");
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("three records with labels 1,1,0") {
    TempDir tmp;
    write_task(tmp);
    for (const char* n : {"a", "b", "c"}) write_bytes(tmp / (std::string(n) + ".png"), make_png(1, 1, 3));
    write_text(tmp / "manifest.jsonl",
               "{\"id\":\"a\",\"image\":\"a.png\",\"label\":1}\n"
               "{\"id\":\"b\",\"image\":\"b.png\",\"label\":1,\"split\":\"test\"}\n"
               "\n"
               "{\"id\":\"c\",\"image\":\"c.png\",\"label\":0}\r\n");
    const Dataset d = load_manifest(tmp.str());
    REQUIRE(d.samples.size() == 3);
    CHECK(d.samples[0].label + d.samples[1].label + d.samples[2].label == 2);
    CHECK(d.samples[1].split == std::optional<std::string>("test"));
    CHECK_FALSE(d.samples[0].split.has_value());
    CHECK(d.task.class1_name == "pneumonia");
    CHECK(is_hex_digest(d.source_digest));
    // Same result through the manifest path form.
    CHECK(load_manifest(tmp / "manifest.jsonl") == d);
    CHECK(filter_split(d, "test").samples.size() == 1);
    CHECK(filter_split(d, "").samples.size() == 3);
  }

  TEST_CASE("exports with 390/234 and 226/174 class counts") {
    TempDir tmp;
    make_dataset(tmp / "pneu", 234, 390, 28, "pneumoniamnist");
    const Dataset pneu = load_manifest(tmp / "pneu");
    const ValidationReport rp = validate_dataset(pneu);
    CHECK(rp.sample_count == 624);
    CHECK(rp.class_counts[1] == 390);
    CHECK(rp.class_counts[0] == 234);
    CHECK(rp.class_counts[0] + rp.class_counts[1] == rp.sample_count);
    // 28x28 images are noted but do not invalidate the dataset.
    CHECK(rp.ok());
    CHECK(rp.resolution_notes.size() == 624);

    make_dataset(tmp / "retina", 174, 226, 224, "retinamnist");
    const ValidationReport rr = validate_dataset(load_manifest(tmp / "retina"));
    CHECK(rr.class_counts[1] == 226);
    CHECK(rr.class_counts[0] == 174);
    CHECK(rr.resolution_notes.empty());
  }

  TEST_CASE("duplicate id is named") {
    TempDir tmp;
    write_task(tmp);
    write_bytes(tmp / "x.png", make_png(1, 1, 1));
    write_text(tmp / "manifest.jsonl",
               "{\"id\":\"s1\",\"image\":\"x.png\",\"label\":1}\n"
               "{\"id\":\"s1\",\"image\":\"x.png\",\"label\":0}\n");
    const std::string msg = error_of([&] { load_manifest(tmp.str()); });
    CHECK(msg.find("'s1'") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }

  TEST_CASE("record-level errors") {
    TempDir tmp;
    write_bytes(tmp / "x.png", make_png(1, 1, 1));
    CHECK(error_of([&] { parse_manifest("{\"id\":\"a\",\"image\":\"x.png\",\"label\":2}", tmp.str()); })
              .find("outside {0,1}") != std::string::npos);
    CHECK(error_of([&] { parse_manifest("{\"id\":\"a\",\"image\":\"nope.png\",\"label\":1}", tmp.str()); })
              .find("not readable") != std::string::npos);
    CHECK(error_of([&] { parse_manifest("not json", tmp.str()); }).find("line 1") !=
          std::string::npos);
    CHECK(error_of([&] { parse_manifest("{\"image\":\"x.png\",\"label\":1}", tmp.str()); })
              .find("'id'") != std::string::npos);
    // Missing files are tolerated when not checked.
    CHECK(parse_manifest("{\"id\":\"a\",\"image\":\"nope.png\",\"label\":1}", tmp.str(), false)
              .size() == 1);
  }

  TEST_CASE("task config must name two distinct classes") {
    CHECK_THROWS_AS(parse_task_config(R"({"dataset_name":"t","class0_name":"a","class1_name":"a","modality_phrase":"m"})"),
                    Error);
    CHECK_THROWS_AS(parse_task_config(R"({"dataset_name":"t","class0_name":"","class1_name":"a","modality_phrase":"m"})"),
                    Error);
    CHECK_THROWS_AS(parse_task_config(R"({"dataset_name":"t","class0_name":"a"})"), Error);
  }

  TEST_CASE("image encoding round trip and determinism") {
    TempDir tmp;
    const auto png = make_png(1, 1, 42);
    write_bytes(tmp / "one.png", png);
    const ImagePayload a = encode_image_file(tmp / "one.png");
    const ImagePayload b = encode_image_file(tmp / "one.png");
    CHECK(a.media_type == "image/png");
    CHECK(base64_decode(a.base64_data) == png);
    CHECK(a.content_digest == b.content_digest);
    CHECK(a.content_digest == sha256_hex(std::span<const std::uint8_t>(png)));
    CHECK(a.data_url().rfind("data:image/png;base64,", 0) == 0);

    write_bytes(tmp / "img.JPG", std::vector<std::uint8_t>{0xFF, 0xD8, 0xFF, 0xD9});
    CHECK(encode_image_file(tmp / "img.JPG").media_type == "image/jpeg");

    write_bytes(tmp / "img.bmp", std::vector<std::uint8_t>{'B', 'M'});
    try {
      encode_image_file(tmp / "img.bmp");
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidArgument);
      CHECK(std::string(e.what()).find("bmp") != std::string::npos);
    }
  }

  TEST_CASE("probe reads PNG and JPEG dimensions") {
    const ImageInfo png = probe_image(make_png(224, 224, 1));
    CHECK(png.format == "png");
    CHECK(png.width == 224);
    CHECK(png.height == 224);
    CHECK(png.channels == 1);

    // SOI, APP0 (len 4), SOF0 with 3 components of 30x20.
    const std::vector<std::uint8_t> jpeg = {0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x04, 0x00, 0x00,
                                            0xFF, 0xC0, 0x00, 0x11, 0x08, 0x00, 0x14, 0x00,
                                            0x1E, 0x03, 0x01, 0x22, 0x00, 0x02, 0x11, 0x01};
    const ImageInfo j = probe_image(jpeg);
    CHECK(j.format == "jpeg");
    CHECK(j.width == 30);
    CHECK(j.height == 20);
    CHECK(j.channels == 3);

    const ImageInfo junk = probe_image({1, 2, 3});
    CHECK(junk.format == "unknown");
    CHECK_FALSE(junk.width.has_value());
  }

  TEST_CASE("validation reports counts and missing files") {
    TempDir tmp;
    make_dataset(tmp.str(), 1, 1);
    Dataset d = load_manifest(tmp.str());
    ValidationReport r = validate_dataset(d);
    CHECK(r.class_counts[0] == 1);
    CHECK(r.class_counts[1] == 1);
    CHECK(r.ok());

    std::filesystem::remove(d.samples[0].image_path);
    r = validate_dataset(d);
    CHECK_FALSE(r.ok());
    REQUIRE(r.missing_files.size() == 1);
    CHECK(r.missing_files[0] == d.samples[0].image_path);

    Dataset one_class = d;
    one_class.samples.erase(one_class.samples.begin());
    CHECK_FALSE(validate_dataset(one_class).ok());
  }
}
