"""CSV / manifest persistence and SVG plotting."""

import csv
import hashlib
import json
import os

import numpy as np

CSV_SCHEMAS = {
    "quantum-otoc": ["t", "C", "C1", "C2", "ReC3", "norm_tilde", "mean_energy"],
    "theta-otoc": ["t", "C", "C1", "C2", "ReC3", "norm_tilde", "mean_energy"],
    "classical-otoc": ["t", "lnCcl", "lambda", "flag"],
    "lyapunov": ["t", "lnCcl", "lambda", "flag"],
    "scaling": ["g", "N", "C_tstar", "ntilde", "ptilde2", "exhausted"],
    "portrait": ["t", "theta", "p"],
    "semiclassical": ["t", "C", "hbar2_Ccl"],
    "echo-trace": ["step", "leg", "energy", "norm"],
    "fit": ["name", "value", "stderr"],
}


class OutputError(OSError):
    pass


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    """Return (header, columns) where each column is a float array when numeric."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    if any(len(r) != len(header) for r in body):
        raise ValueError(f"{path}: malformed CSV (ragged rows)")
    cols = {}
    for i, name in enumerate(header):
        vals = [r[i] for r in body]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return header, cols


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, config, version, wall_time, guard_events, files, fits=None, status=0):
    if os.path.exists(path):
        raise OutputError(f"manifest {path} already exists")
    base = os.path.dirname(path)
    doc = {
        "config": config,
        "version": version,
        "wall_time_s": wall_time,
        "status": status,
        "guard_events": guard_events,
        "fits": fits or {},
        "files": {os.path.relpath(f, base): sha256(f) for f in files},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def verify_manifest(path):
    """Recompute checksums; returns the list of files whose digest differs."""
    with open(path) as fh:
        doc = json.load(fh)
    base = os.path.dirname(path)
    bad = []
    for rel, digest in doc["files"].items():
        full = os.path.join(base, rel)
        if not os.path.exists(full) or sha256(full) != digest:
            bad.append(rel)
    return bad


def ensure_writable(directory):
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {directory}: {exc.strerror}") from None
    if not os.access(directory, os.W_OK):
        raise OutputError(f"output directory {directory} is not writable")
    return directory


# plotting

def plot(csv_path, kind="log-linear", out=None, x=None, y=None, overlay=None, title=None):
    """Render a CSV series to a standalone SVG.

    ``kind`` is ``log-linear`` (log y vs x), ``log-log``, ``linear``,
    ``scatter``, or ``tsquared`` (stored log values against x^2).  ``overlay`` is an optional
    (x, y, label) theory curve.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, cols = read_csv(csv_path)
    if not cols or len(cols[header[0]]) == 0:
        raise ValueError(f"{csv_path}: no data rows")
    x = x or header[0]
    y = y or header[1]
    if x not in cols or y not in cols:
        raise ValueError(f"{csv_path}: missing column {x!r} or {y!r}")
    xv, yv = cols[x].astype(float), cols[y].astype(float)
    out = out or os.path.splitext(csv_path)[0] + ".svg"

    plt.rcParams["svg.hashsalt"] = "otoclab"
    fig, ax = plt.subplots(figsize=(5, 3.6))
    if kind == "scatter":
        ax.plot(xv, yv, ",", color="k", alpha=0.6)
    elif kind == "linear":
        ax.plot(xv, yv, "o-", ms=3)
    elif kind == "tsquared":
        ax.plot(xv ** 2, yv, "o-", ms=3)
        x = f"{x}^2"
    else:
        ax.plot(xv, yv, "o-", ms=3)
        ax.set_yscale("log")
        if kind == "log-log":
            ax.set_xscale("log")
        elif kind != "log-linear":
            plt.close(fig)
            raise ValueError(f"unknown plot kind {kind!r}")
    if overlay is not None:
        ox, oy, label = overlay
        ax.plot(ox, oy, "r-", lw=1, label=label)
        ax.legend(frameon=False)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out
