import os
from pathlib import Path

import pytest

MNIST_NAMES = {
    "train_images": ("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
    "train_labels": ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"),
    "test_images": ("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"),
    "test_labels": ("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"),
}


def find_mnist() -> dict[str, str] | None:
    """Locate the four MNIST IDX files (optionally gzipped) under $MNIST_DIR
    or ./data/mnist; None if any file is missing."""
    candidates = []
    if os.environ.get("MNIST_DIR"):
        candidates.append(Path(os.environ["MNIST_DIR"]))
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "mnist")
    for root in candidates:
        found = {}
        for key, names in MNIST_NAMES.items():
            for name in names:
                for suffix in ("", ".gz"):
                    p = root / f"{name}{suffix}"
                    if p.exists():
                        found[key] = str(p)
                        break
                if key in found:
                    break
        if len(found) == 4:
            return found
    return None


@pytest.fixture(scope="session")
def mnist_paths():
    paths = find_mnist()
    if paths is None:
        pytest.skip(
            "MNIST IDX files not found. Download the four files from an MNIST "
            "mirror (e.g. https://ossci-datasets.s3.amazonaws.com/mnist/) into "
            "data/mnist/ or point $MNIST_DIR at them; .gz files are accepted."
        )
    return paths
