"""CSV and SVG writers for region curves."""
from __future__ import annotations

import json
import subprocess
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable, Sequence

from .config import ScenarioConfig
from .region import RegionCurve, Scheme

CSV_NAMES = {
    Scheme.H_OMA: "oma.csv",
    Scheme.H_NOMA_SIC: "noma_sic.csv",
    Scheme.H_NOMA_PUNCTURE: "noma_puncture.csv",
    Scheme.APPENDIX_A_LB: "appendix_a_lb.csv",
    Scheme.APPENDIX_B_LB: "appendix_b_lb.csv",
    Scheme.APPENDIX_B_UB: "appendix_b_ub.csv",
}


def version() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--tags", "--dirty"],
                             cwd=Path(__file__).resolve().parent, capture_output=True, text=True,
                             timeout=5, check=True)
        described = out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        described = ""
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "0+unknown"
    return f"{pkg}+g{described}" if described else pkg


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def header_lines(cfg: ScenarioConfig, seed: int, trials: int, command: str, ver: str) -> list[str]:
    lines = [f"# command={command}", f"# seed={seed}", f"# trials={trials}", f"# version={ver}"]
    lines += [f"# config {k}={v}" for k, v in cfg.to_items()]
    return lines


def curve_rows(curve: RegionCurve, x_name: str, y_name: str) -> tuple[list[str], list[list[str]]]:
    keys = sorted({k for d in curve.diagnostics for k in d})
    rows = [[fmt(x), fmt(y)] + [fmt(d.get(k)) for k in keys]
            for (x, y), d in zip(curve.points, curve.diagnostics)]
    return [x_name, y_name] + keys, rows


def write_curve(path: Path, curve: RegionCurve, header: Sequence[str], x_name: str, y_name: str,
                notes: Iterable[str] = ()) -> Path:
    cols, rows = curve_rows(curve, x_name, y_name)
    lines = list(header) + [f"# scheme={curve.scheme.value}"] + [f"# {n}" for n in notes]
    lines.append(",".join(cols))
    lines += [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def write_table(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]],
                header: Sequence[str]) -> Path:
    lines = list(header) + [",".join(columns)] + [",".join(fmt(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def write_manifest(out_dir: Path, info: dict[str, Any]) -> Path:
    """Run metadata that varies between identical runs (wall time) lives here, not in the CSVs."""
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


STYLE = {
    Scheme.H_OMA: dict(color="black", linestyle="-", marker="o"),
    Scheme.H_NOMA_SIC: dict(color="tab:blue", linestyle="-", marker="s"),
    Scheme.H_NOMA_PUNCTURE: dict(color="tab:red", linestyle="--", marker="^"),
    Scheme.APPENDIX_A_LB: dict(color="tab:green", linestyle=":", marker=None),
    Scheme.APPENDIX_B_LB: dict(color="tab:green", linestyle=":", marker=None),
    Scheme.APPENDIX_B_UB: dict(color="tab:purple", linestyle="-.", marker=None),
}


def plot_region(path: Path, curves: Sequence[RegionCurve], x_label: str, y_label: str,
                title: str = "") -> Path:
    """One SVG with all curves; x is always the eMBB rate."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "netslice"
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for curve in curves:
        if not len(curve):
            continue
        # draw along the frontier: order by y, as curves may be flat in x
        pts = sorted(curve.points, key=lambda p: (p[1], -p[0]))
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=curve.scheme.value, markersize=3,
                **STYLE[curve.scheme])
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path
