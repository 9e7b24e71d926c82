# Copyright 2026 The VIDNet Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes JPEG round-trip fixtures produced by Pillow's codec.

Usage: python3 make_jpeg_fixtures.py OUT_DIR
"""

import io
import sys
from pathlib import Path

import numpy as np
from PIL import Image


def roundtrip(img, quality):
    buf = io.BytesIO()
    img.save(buf, format="JPEG", quality=quality, subsampling=0)
    buf.seek(0)
    return Image.open(buf).convert("RGB")


def main():
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20260)
    noise = Image.fromarray(rng.integers(0, 256, (24, 40, 3), dtype=np.uint8))
    yy, xx = np.mgrid[0:32, 0:48]
    smooth = np.stack([128 + 80 * np.sin(0.2 * xx), 128 + 60 * np.cos(0.15 * yy),
                       (xx * 5 + yy * 3) % 256], axis=-1).astype(np.uint8)
    smooth = Image.fromarray(smooth)
    for name, img in (("noise", noise), ("smooth", smooth)):
        img.save(out / f"{name}.png")
        for q in (10, 50, 90, 100):
            roundtrip(img, q).save(out / f"{name}_q{q}.png")
    gray = Image.new("RGB", (32, 16), (128, 128, 128))
    gray.save(out / "gray.png")
    roundtrip(gray, 50).save(out / "gray_q50.png")


if __name__ == "__main__":
    main()
