"""CSV serialization of experiment records and the run manifest.

Floats are written with 17 significant digits so that reading a file back
reproduces the in-memory doubles exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .diagnostics import EntropyTrace, OtocMethod, OtocTrace
from .gradients import VarianceRecord
from .vqe import OptimRun

VARIANCE_HEADER = ("regime", "num_qubits", "depth", "param_index", "num_instances",
                   "mean_grad", "var_grad", "seed")
ENTROPY_HEADER = ("regime", "num_qubits", "depth", "mean_entropy_bits", "std_entropy_bits",
                  "num_instances", "seed")
OTOC_HEADER = ("regime", "num_qubits", "depth", "mean_otoc", "stderr", "method",
               "num_instances", "seed")
VQE_HEADER = ("regime", "iteration", "mean_cost", "var_cost", "mean_entropy_bits",
              "var_entropy_bits", "exact_ground_energy", "num_instances", "seed")


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def variance_rows(records: Iterable[VarianceRecord]) -> list[tuple]:
    return [(r.regime, r.num_qubits, r.depth_blocks, r.param_index, r.num_instances,
             r.mean, r.variance, r.seed) for r in records]


def entropy_rows(traces: Iterable[EntropyTrace]) -> list[tuple]:
    return [(t.regime, t.num_qubits, int(d), m, s, t.num_instances, t.seed)
            for t in traces for d, m, s in zip(t.depths, t.mean_entropy, t.std_entropy)]


def otoc_rows(traces: Iterable[OtocTrace]) -> list[tuple]:
    return [(t.regime, t.num_qubits, int(d), m, e, OtocMethod(t.method).value, t.num_instances, t.seed)
            for t in traces for d, m, e in zip(t.depths, t.mean_otoc, t.stderr)]


def vqe_rows(runs: Iterable[OptimRun]) -> list[tuple]:
    return [(r.regime, int(i), c, vc, s, vs, r.exact_ground_energy, r.num_instances, r.seed)
            for r in runs for i, c, vc, s, vs in zip(r.iterations, r.mean_cost, r.cost_variance,
                                                      r.mean_entropy, r.entropy_variance)]


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


_INT_COLUMNS = {"num_qubits", "depth", "param_index", "num_instances", "seed", "iteration"}
_STR_COLUMNS = {"regime", "method"}


def read_csv(path: Path) -> list[dict]:
    """Rows as dicts with integer, string and float columns restored."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append({k: (v if k in _STR_COLUMNS else int(v) if k in _INT_COLUMNS else float(v))
                    for k, v in row.items()})
    return out


def sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: Path, config: dict, version: str, runtime_s: float,
                   name: str = "manifest.json") -> Path:
    """Checksum every file in ``out_dir`` (except the manifest) into a JSON manifest."""
    out_dir = Path(out_dir)
    files = {p.name: sha256(p) for p in sorted(out_dir.iterdir()) if p.is_file() and p.name != name}
    manifest = {"artifact_version": version, "config": config, "files": files,
                "total_runtime_s": round(runtime_s, 3)}
    path = out_dir / name
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
