"""SVG renderings of the CSV outputs.  Purely presentational."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed ids keep repeated SVGs byte-stable
plt.rcParams["svg.hashsalt"] = "floquet-vqe"
_META = {"Date": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def _by(rows, key):
    groups = defaultdict(list)
    for r in rows:
        groups[key(r)].append(r)
    return groups


def plot_variance(rows: list[dict], x: str, path: Path, title: str) -> Path:
    """Log-scale variance against ``x`` (``num_qubits`` or ``depth``), one curve per series."""
    fig, ax = plt.subplots(figsize=(5, 4))
    series = _by(rows, (lambda r: r["regime"]) if x == "num_qubits"
                 else (lambda r: (r["regime"], r["num_qubits"])))
    for label, rs in series.items():
        rs = sorted(rs, key=lambda r: r[x])
        name = label if isinstance(label, str) else f"{label[0]} N={label[1]}"
        ax.semilogy([r[x] for r in rs], [max(r["var_grad"], 1e-300) for r in rs], "o-", label=name)
    ax.set_xlabel("qubits N" if x == "num_qubits" else "depth D")
    ax.set_ylabel("Var[dE/dtheta]")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_entropy(rows: list[dict], path: Path, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    for (regime, n), rs in _by(rows, lambda r: (r["regime"], r["num_qubits"])).items():
        rs = sorted(rs, key=lambda r: r["depth"])
        d = [r["depth"] for r in rs]
        m = [r["mean_entropy_bits"] for r in rs]
        ax.plot(d, m, label=f"{regime} N={n}")
    ax.set_xlabel("depth D")
    ax.set_ylabel("half-chain entropy (bits)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_otoc(rows: list[dict], path: Path, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    for (regime, n), rs in _by(rows, lambda r: (r["regime"], r["num_qubits"])).items():
        rs = sorted(rs, key=lambda r: r["depth"])
        d = [r["depth"] for r in rs]
        m = [r["mean_otoc"] for r in rs]
        e = [r["stderr"] for r in rs]
        ax.errorbar(d, m, yerr=e, label=f"{regime} N={n}", capsize=2)
    ax.set_xlabel("depth D")
    ax.set_ylabel("OTOC F")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_vqe(rows: list[dict], path: Path, title: str) -> Path:
    fig, (ax_c, ax_s) = plt.subplots(1, 2, figsize=(9, 4))
    ground = None
    for regime, rs in _by(rows, lambda r: r["regime"]).items():
        rs = sorted(rs, key=lambda r: r["iteration"])
        it = [r["iteration"] for r in rs]
        for ax, mean_key, var_key in ((ax_c, "mean_cost", "var_cost"),
                                      (ax_s, "mean_entropy_bits", "var_entropy_bits")):
            m = [r[mean_key] for r in rs]
            v = [r[var_key] for r in rs]
            line, = ax.plot(it, m, label=regime)
            ax.fill_between(it, [a - b for a, b in zip(m, v)], [a + b for a, b in zip(m, v)],
                            color=line.get_color(), alpha=0.2)
        ground = rs[0]["exact_ground_energy"]
    if ground is not None:
        ax_c.axhline(ground, color="k", ls="--", lw=1, label="exact")
    ax_c.set_xlabel("iteration")
    ax_c.set_ylabel("cost")
    ax_s.set_xlabel("iteration")
    ax_s.set_ylabel("half-chain entropy (bits)")
    ax_c.legend(fontsize=8)
    fig.suptitle(title)
    return _save(fig, path)
