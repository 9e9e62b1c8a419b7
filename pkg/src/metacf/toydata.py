"""Bundled small classification datasets for the desk-scale pipeline.

Ten deterministic toy datasets ship as CSVs under ``metacf/data``; they mix
numeric and categorical features and favor different learners (blobs for
kNN/perceptron, independent bits for naive Bayes, axis-aligned structure for
trees, rings/moons where linear models fail).  ``write_bundled_datasets``
regenerates the files bit-for-bit.
"""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

import numpy as np

from .experiments import Dataset, load_dataset

__all__ = [
    "BUNDLED_NAMES",
    "bundled_data_dir",
    "load_bundled",
    "load_all_bundled",
    "write_bundled_datasets",
]

BUNDLED_NAMES = (
    "blobs2",
    "blobs3",
    "rings",
    "stripes",
    "xor_cat",
    "indep_bits",
    "mixed_signal",
    "two_moons",
    "skewed_pair",
    "step_grid",
)

_GEN_SEED = 20240801


def bundled_data_dir() -> Path:
    return Path(str(files("metacf").joinpath("data")))


def load_bundled(name: str) -> Dataset:
    if name not in BUNDLED_NAMES:
        raise ValueError(f"unknown bundled dataset {name!r}")
    return load_dataset(bundled_data_dir() / f"{name}.csv")


def load_all_bundled() -> list[Dataset]:
    return [load_bundled(name) for name in BUNDLED_NAMES]


def _csv_lines(header, rows):
    lines = [",".join(header)]
    for row in rows:
        fields = []
        for v in row:
            fields.append(f"{v:.4f}" if isinstance(v, float) else str(v))
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def _blobs2(rng):
    rows = []
    for label, (cx, cy) in (("a", (0.0, 0.0)), ("b", (4.0, 4.0))):
        for _ in range(60):
            rows.append(
                [float(rng.normal(cx, 0.7)), float(rng.normal(cy, 0.7)), label]
            )
    return ["x", "y", "label"], rows


def _blobs3(rng):
    centers = {"a": (0.0, 0.0), "b": (3.0, 0.5), "c": (1.5, 3.0)}
    rows = []
    for label, (cx, cy) in centers.items():
        for _ in range(45):
            rows.append(
                [float(rng.normal(cx, 0.9)), float(rng.normal(cy, 0.9)), label]
            )
    return ["x", "y", "label"], rows


def _rings(rng):
    rows = []
    for _ in range(55):
        r = rng.uniform(0.0, 1.0)
        t = rng.uniform(0.0, 2 * np.pi)
        rows.append([float(r * np.cos(t)), float(r * np.sin(t)), "inner"])
    for _ in range(65):
        r = rng.uniform(1.8, 2.8)
        t = rng.uniform(0.0, 2 * np.pi)
        rows.append([float(r * np.cos(t)), float(r * np.sin(t)), "outer"])
    return ["x", "y", "label"], rows


def _stripes(rng):
    rows = []
    for _ in range(140):
        x = rng.uniform(-2.0, 2.0)
        y = rng.uniform(-2.0, 2.0)
        label = "hi" if y > 0.8 * x + 0.3 else "lo"
        if rng.uniform() < 0.08:
            label = "hi" if label == "lo" else "lo"
        rows.append([float(x), float(y), label])
    return ["x", "y", "label"], rows


def _xor_cat(rng):
    rows = []
    for _ in range(130):
        a = "p" if rng.uniform() < 0.5 else "q"
        b = "u" if rng.uniform() < 0.5 else "v"
        label = "on" if (a == "p") != (b == "u") else "off"
        if rng.uniform() < 0.05:
            label = "on" if label == "off" else "off"
        rows.append([a, b, float(rng.normal(0.0, 1.0)), label])
    return ["switch_a", "switch_b", "noise", "label"], rows


def _indep_bits(rng):
    prob = {"a": (0.8, 0.7, 0.3, 0.2), "b": (0.2, 0.3, 0.7, 0.8)}
    rows = []
    for label in ("a", "b"):
        for _ in range(70):
            bits = ["1" if rng.uniform() < p else "0" for p in prob[label]]
            rows.append([*bits, label])
    return ["f1", "f2", "f3", "f4", "label"], rows


def _mixed_signal(rng):
    centers = {"a": (0.0, 0.0), "b": (2.5, 1.0), "c": (1.0, 3.0)}
    hint = {"a": "red", "b": "green", "c": "blue"}
    rows = []
    for label, (cx, cy) in centers.items():
        for _ in range(45):
            color = hint[label] if rng.uniform() < 0.7 else rng.choice(
                ["red", "green", "blue"]
            )
            junk = rng.choice(["n", "s", "e", "w"])
            rows.append(
                [
                    float(rng.normal(cx, 1.0)),
                    float(rng.normal(cy, 1.0)),
                    str(color),
                    str(junk),
                    label,
                ]
            )
    return ["x", "y", "color", "junk", "label"], rows


def _two_moons(rng):
    rows = []
    for _ in range(70):
        t = rng.uniform(0.0, np.pi)
        rows.append(
            [
                float(np.cos(t) + rng.normal(0, 0.15)),
                float(np.sin(t) + rng.normal(0, 0.15)),
                "upper",
            ]
        )
    for _ in range(70):
        t = rng.uniform(0.0, np.pi)
        rows.append(
            [
                float(1.0 - np.cos(t) + rng.normal(0, 0.15)),
                float(0.5 - np.sin(t) + rng.normal(0, 0.15)),
                "lower",
            ]
        )
    return ["x", "y", "label"], rows


def _skewed_pair(rng):
    rows = []
    for _ in range(120):
        rows.append(
            [float(rng.normal(0.0, 1.0)), float(rng.uniform(-1, 1)), "common"]
        )
    for _ in range(30):
        rows.append(
            [float(rng.normal(2.2, 1.0)), float(rng.uniform(-1, 1)), "rare"]
        )
    return ["signal", "noise", "label"], rows


def _step_grid(rng):
    rows = []
    for _ in range(150):
        x = rng.uniform(0.0, 1.0)
        y = rng.uniform(0.0, 1.0)
        if x < 0.5 and y < 0.5:
            label = "sw"
        elif x >= 0.5 and y >= 0.5:
            label = "ne"
        else:
            label = "mix"
        rows.append([float(x), float(y), label])
    return ["x", "y", "label"], rows


_GENERATORS = {
    "blobs2": _blobs2,
    "blobs3": _blobs3,
    "rings": _rings,
    "stripes": _stripes,
    "xor_cat": _xor_cat,
    "indep_bits": _indep_bits,
    "mixed_signal": _mixed_signal,
    "two_moons": _two_moons,
    "skewed_pair": _skewed_pair,
    "step_grid": _step_grid,
}


def write_bundled_datasets(out_dir: Path, seed: int = _GEN_SEED) -> list[Path]:
    """Regenerate the bundled dataset CSVs deterministically."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, name in enumerate(BUNDLED_NAMES):
        rng = np.random.default_rng(seed + i)
        header, rows = _GENERATORS[name](rng)
        path = out_dir / f"{name}.csv"
        path.write_text(_csv_lines(header, rows), encoding="utf-8")
        written.append(path)
    return written
