#!/usr/bin/env python3
"""Checks that the on-disk dataset layout is directly numpy-loadable."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np


def main() -> int:
    semcont = sys.argv[1]
    with tempfile.TemporaryDirectory(prefix="semcont_npy_") as tmp:
        root = Path(tmp) / "data"
        subprocess.run(
            [semcont, "data", "build", "--name", "mnist", "--count", "64"],
            env={"SEMCONT_DATA_DIR": str(root), "PATH": "/usr/bin:/bin"},
            check=True,
            capture_output=True,
        )
        images = np.load(root / "mnist" / "train" / "images.npy")
        labels = np.load(root / "mnist" / "train" / "labels.npy")
        assert images.dtype == np.uint8, images.dtype
        assert images.shape == (64, 1, 28, 28), images.shape
        assert labels.dtype == np.int64, labels.dtype
        assert labels.shape == (64,), labels.shape
        assert labels.min() >= 0 and labels.max() <= 9
        assert images.max() > 128, "digit strokes missing"

        manifest = json.loads((root / "mnist" / "manifest.json").read_text())
        assert manifest["name"] == "mnist"
        assert manifest["num_classes"] == 10
        assert manifest["source"] in ("synthetic", "raw")
    print("numpy interop ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
