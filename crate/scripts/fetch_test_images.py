#!/usr/bin/env python3
"""Prepare the standard test images used by the benchmark harness.

Test images are not redistributed with this repository. This script builds
them locally:

* cameraman256.png: the scikit-image copy of Cameraman (512x512), reduced to
  256x256 by 2x2 block averaging and rounded to 8 bits.
* house256.png, lena512.png, barbara512.png: fetched from the URLs below when
  reachable (pass --download). Place your own copies in the output directory
  otherwise.

After writing, the script prints the SHA-256 of the decoded 8-bit pixels
(row-major), which is what `deblur` checks against data/checksums.txt.
"""
import argparse
import hashlib
import os
import sys
import urllib.request

import numpy as np
from PIL import Image

SOURCES = {
    "house256.png": "https://sipi.usc.edu/database/download.php?vol=misc&img=4.1.05",
    "lena512.png": "https://sipi.usc.edu/database/download.php?vol=misc&img=4.2.04",
    "barbara512.png": "https://www.hlevkin.com/hlevkin/TestImages/barbara.bmp",
}


def pixel_digest(path):
    pixels = np.asarray(Image.open(path).convert("L"), dtype=np.uint8)
    return hashlib.sha256(pixels.tobytes()).hexdigest()


def make_cameraman(out_dir):
    from skimage import data

    cam = data.camera().astype(np.float64)
    if cam.shape == (512, 512):
        cam = cam.reshape(256, 2, 256, 2).mean(axis=(1, 3))
    cam = np.clip(np.round(cam), 0, 255).astype(np.uint8)
    path = os.path.join(out_dir, "cameraman256.png")
    Image.fromarray(cam).save(path)
    return path


def download(out_dir):
    paths = []
    for name, url in SOURCES.items():
        path = os.path.join(out_dir, name)
        try:
            with urllib.request.urlopen(url, timeout=20) as resp:
                raw = resp.read()
            tmp = path + ".download"
            with open(tmp, "wb") as fh:
                fh.write(raw)
            Image.open(tmp).convert("L").save(path)
            os.remove(tmp)
            paths.append(path)
        except Exception as exc:  # network failures are expected offline
            print(f"skipping {name}: {exc}", file=sys.stderr)
    return paths


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    parser.add_argument("--download", action="store_true")
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)
    paths = [make_cameraman(args.out)]
    if args.download:
        paths += download(args.out)
    for path in paths:
        print(f"{pixel_digest(path)}  {os.path.basename(path)}")


if __name__ == "__main__":
    main()
