"""Reading data files and reading/writing sample files.

Rank files are CSV with item labels as the header and one assessor per row;
``NA`` or an empty cell marks a missing rank. Sample files are plain text:
``# key=value`` header lines (values are JSON), then one tab-separated line
per retained iteration, with rankings written as space-separated ranks and
reals written with ``repr`` so they reload bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .augmentation import MISSING, PartialRanking, TieSet
from .dynamics import DynamicPriors, DynamicSamples, TimedData
from .mixture import MixturePriors, MixtureSamples
from .ranking import ItemCatalog, PreferencePair, as_metric, transitive_closure
from .sampler import PosteriorSamples, Priors, Tuning

NA_TOKENS = {"", "NA", "na", "NaN", "nan", "."}


class DataValidationError(ValueError):
    """A data file is malformed; the message names the offending row."""


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        return [], []
    return [h.strip() for h in rows[0]], [[c.strip() for c in r] for r in rows[1:]]


def _parse_cells(cells: Sequence[str], row_no: int) -> list:
    out = []
    for c in cells:
        if c in NA_TOKENS:
            out.append(None)
            continue
        try:
            v = float(c)
        except ValueError:
            raise DataValidationError(f"row {row_no}: non-numeric cell {c!r}") from None
        if not v.is_integer():
            raise DataValidationError(f"row {row_no}: non-integer rank {c!r}")
        out.append(int(v))
    return out


def _partial(values: list, row_no: int) -> PartialRanking:
    n = len(values)
    seen: dict = {}
    for v in values:
        if v is None:
            continue
        if not 1 <= v <= n:
            raise DataValidationError(f"row {row_no}: rank {v} outside 1..{n}")
        if v in seen:
            raise DataValidationError(f"row {row_no}: rank {v} appears more than once")
        seen[v] = True
    return PartialRanking(np.array([MISSING if v is None else v for v in values], np.int64))


def load_rank_matrix(path) -> tuple[list[PartialRanking], ItemCatalog]:
    """Partial rankings (row numbers in errors are 1-based data rows) and the item catalog."""
    header, rows = _read_csv(path)
    if not header:
        raise DataValidationError(f"{path}: empty file")
    catalog = ItemCatalog(tuple(header))
    out = []
    for k, r in enumerate(rows, start=1):
        if len(r) != catalog.n:
            raise DataValidationError(f"row {k}: expected {catalog.n} cells, found {len(r)}")
        out.append(_partial(_parse_cells(r, k), k))
    return out, catalog


def complete_matrix(partials: Sequence[PartialRanking]) -> np.ndarray | None:
    """The rankings as an (N, n) array when none has missing entries, else None."""
    if all(p.is_complete() for p in partials):
        return np.array([p.entries for p in partials], dtype=np.int64).reshape(len(partials), -1)
    return None


def read_preferences(path, catalog: ItemCatalog | None = None):
    """(list of closed constraint sets, catalog) from an assessor/less/more CSV.

    Without a catalog the items are the labels seen in the file, sorted.
    """
    header, rows = _read_csv(path)
    if not header:
        return [], catalog
    need = ["assessor_id", "less_preferred", "more_preferred"]
    if header[:3] != need:
        raise DataValidationError(f"{path}: expected columns {need}, found {header}")
    if catalog is None:
        labels = sorted({r[1] for r in rows} | {r[2] for r in rows})
        catalog = ItemCatalog(tuple(labels)) if labels else None
    by_assessor: dict = {}
    for k, r in enumerate(rows, start=1):
        if len(r) < 3:
            raise DataValidationError(f"row {k}: expected 3 cells")
        try:
            pair = PreferencePair(catalog[r[1]], catalog[r[2]])
        except KeyError as e:
            raise DataValidationError(f"row {k}: {e.args[0]}") from None
        except ValueError as e:
            raise DataValidationError(f"row {k}: {e}") from None
        by_assessor.setdefault(r[0], []).append(pair)
    sets = [transitive_closure(pairs, assessor=a) for a, pairs in by_assessor.items()]
    return sets, catalog


def load_preferences(path, catalog: ItemCatalog | None = None) -> list:
    return read_preferences(path, catalog)[0]


def load_timed_ranks(path) -> tuple[TimedData, ItemCatalog]:
    """Rank rows preceded by an integer time column ``t``.

    Repeated rank values in a complete row are read as ties. Time points
    with no rows become empty slices; rows are grouped by t stably.
    """
    header, rows = _read_csv(path)
    if not header or header[0] != "t":
        raise DataValidationError(f"{path}: first column must be 't'")
    catalog = ItemCatalog(tuple(header[1:]))
    by_t: dict = {}
    for k, r in enumerate(rows, start=1):
        if len(r) != catalog.n + 1:
            raise DataValidationError(f"row {k}: expected {catalog.n + 1} cells, found {len(r)}")
        try:
            t = int(r[0])
        except ValueError:
            raise DataValidationError(f"row {k}: time {r[0]!r} is not an integer") from None
        if t < 0:
            raise DataValidationError(f"row {k}: negative time {t}")
        vals = _parse_cells(r[1:], k)
        obs = [v for v in vals if v is not None]
        if len(set(obs)) < len(obs):
            if len(obs) < len(vals):
                raise DataValidationError(f"row {k}: ties and missing ranks together "
                                          "are not supported")
            by_t.setdefault(t, []).append(TieSet.from_scores(vals))
        elif len(obs) == len(vals):
            r_ = np.array(vals, dtype=np.int64)
            if sorted(vals) != list(range(1, len(vals) + 1)):
                raise DataValidationError(f"row {k}: ranks are not 1..{len(vals)}")
            by_t.setdefault(t, []).append(r_)
        else:
            by_t.setdefault(t, []).append(_partial(vals, k))
    T = max(by_t) if by_t else 0
    return TimedData(tuple(tuple(by_t.get(t, ())) for t in range(T + 1))), catalog


def load_labels(path) -> list[str]:
    """One class label per line (a header line 'label' is skipped)."""
    lines = [x.strip() for x in Path(path).read_text().splitlines() if x.strip()]
    if lines and lines[0].lower() == "label":
        lines = lines[1:]
    return lines


def write_rank_matrix(path, rankings, catalog: ItemCatalog) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(catalog.labels)
        for r in np.asarray(rankings):
            w.writerow([("NA" if v == MISSING else int(v)) for v in r])


# ---------------------------------------------------------------- sample files


def _ranks(r) -> str:
    return " ".join(str(int(v)) for v in r)


def _reals(x) -> str:
    return " ".join(repr(float(v)) for v in np.atleast_1d(x))


def _config_dict(samples) -> dict:
    d = {"priors": asdict(samples.priors), "tuning": asdict(samples.tuning)}
    for extra in ("alpha_mode", "corrected"):
        if hasattr(samples, extra):
            d[extra] = getattr(samples, extra)
    return d


def write_samples(path, samples, catalog: ItemCatalog, meta: dict | None = None) -> None:
    model = samples.model
    head = {"model": model, "metric": samples.metric.value, "n": samples.n,
            "labels": list(catalog.labels), "samples": len(samples),
            "config": _config_dict(samples)}
    lines = []
    if model == "static":
        head["columns"] = ["iteration", "alpha", "rho"]
        for s in range(len(samples)):
            lines.append("\t".join([str(int(samples.iteration[s])), repr(float(samples.alpha[s])),
                                    _ranks(samples.rho[s])]))
    elif model == "mixture":
        C = samples.C
        head["C"] = C
        head["columns"] = (["iteration", "alpha", "tau"] + [f"rho_{c + 1}" for c in range(C)]
                           + ["z"])
        for s in range(len(samples)):
            parts = [str(int(samples.iteration[s])), _reals(samples.alpha[s]),
                     _reals(samples.tau[s])]
            parts += [_ranks(samples.rho[s, c]) for c in range(C)]
            parts.append(_ranks(samples.z[s]))
            lines.append("\t".join(parts))
    elif model == "dynamic":
        T1 = samples.alpha.shape[1]
        head["T"] = T1 - 1
        head["columns"] = (["iteration", "alpha", "beta", "sigma2"]
                           + [f"rho_{t}" for t in range(T1)])
        for s in range(len(samples)):
            parts = [str(int(samples.iteration[s])), _reals(samples.alpha[s]),
                     repr(float(samples.beta[s])), repr(float(samples.sigma2[s]))]
            parts += [_ranks(samples.rho[s, t]) for t in range(T1)]
            lines.append("\t".join(parts))
    else:
        raise ValueError(f"unknown model {model!r}")
    if meta:
        head.update(meta)
    with open(path, "w") as fh:
        for k in sorted(head):
            fh.write(f"# {k}={json.dumps(head[k], sort_keys=True)}\n")
        for line in lines:
            fh.write(line + "\n")


def _tuning(d: dict) -> Tuning:
    names = {f.name for f in fields(Tuning)}
    return Tuning(**{k: v for k, v in d.items() if k in names})


def read_header(path) -> dict:
    head = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            k, v = line[2:].rstrip("\n").split("=", 1)
            head[k] = json.loads(v)
    return head


def read_samples(path):
    """Load a sample file; returns (samples object, catalog)."""
    head = read_header(path)
    body = [ln.rstrip("\n").split("\t") for ln in Path(path).read_text().splitlines()
            if not ln.startswith("#") and ln.strip()]
    model = head["model"]
    metric = as_metric(head["metric"])
    n = int(head["n"])
    cfg = head.get("config", {})
    tuning = _tuning(cfg.get("tuning", {}))
    catalog = ItemCatalog(tuple(head["labels"]))

    def ints(s, size):
        a = np.array(s.split(), dtype=np.int64)
        if a.size != size:
            raise DataValidationError(f"{path}: expected {size} values, found {a.size}")
        return a

    def reals(s):
        return np.array([float(x) for x in s.split()])

    it = np.array([int(r[0]) for r in body], dtype=np.int64)
    if model == "static":
        alpha = np.array([float(r[1]) for r in body])
        rho = np.array([ints(r[2], n) for r in body], dtype=np.int64).reshape(-1, n)
        return PosteriorSamples(alpha, rho, it, metric, Priors(**cfg.get("priors", {})),
                                tuning), catalog
    if model == "mixture":
        C = int(head["C"])
        alpha = np.array([reals(r[1]) for r in body]).reshape(-1, C)
        tau = np.array([reals(r[2]) for r in body]).reshape(-1, C)
        rho = np.array([[ints(r[3 + c], n) for c in range(C)] for r in body],
                       dtype=np.int64).reshape(-1, C, n)
        z = np.array([np.array(r[3 + C].split(), dtype=np.int64) for r in body],
                     dtype=np.int64)
        return MixtureSamples(alpha, rho, tau, z.reshape(len(body), -1), it, metric,
                              MixturePriors(**cfg.get("priors", {})), tuning,
                              cfg.get("alpha_mode", "ordered"),
                              cfg.get("corrected", False)), catalog
    if model == "dynamic":
        T1 = int(head["T"]) + 1
        alpha = np.array([reals(r[1]) for r in body]).reshape(-1, T1)
        beta = np.array([float(r[2]) for r in body])
        sigma2 = np.array([float(r[3]) for r in body])
        rho = np.array([[ints(r[4 + t], n) for t in range(T1)] for r in body],
                       dtype=np.int64).reshape(-1, T1, n)
        return DynamicSamples(alpha, rho, beta, sigma2, it, metric,
                              DynamicPriors(**cfg.get("priors", {})), tuning), catalog
    raise DataValidationError(f"{path}: unknown model {model!r}")


def write_augmented(path, iterations, aug: np.ndarray) -> None:
    """Latent rankings per retained iteration: iteration, then one block per assessor."""
    with open(path, "w") as fh:
        for it, state in zip(iterations, aug):
            fh.write("\t".join([str(int(it))] + [_ranks(r) for r in state]) + "\n")


def read_augmented(path) -> tuple[np.ndarray, np.ndarray]:
    rows = [ln.split("\t") for ln in Path(path).read_text().splitlines() if ln.strip()]
    it = np.array([int(r[0]) for r in rows], dtype=np.int64)
    aug = np.array([[np.array(b.split(), dtype=np.int64) for b in r[1:]] for r in rows],
                   dtype=np.int64)
    return it, aug


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def bundled(name: str) -> Path:
    """Path of a CSV shipped with the package, e.g. ``bundled("potato_weighing.csv")``."""
    from importlib.resources import files
    return Path(str(files("bmallows") / "data" / name))


def load_potato(experiment: str = "weighing") -> tuple[np.ndarray, ItemCatalog, np.ndarray]:
    """(12 x 20 rankings, catalog, true ranks) for the 'weighing' or 'visual' experiment."""
    if experiment not in ("weighing", "visual"):
        raise ValueError("experiment must be 'weighing' or 'visual'")
    partials, catalog = load_rank_matrix(bundled(f"potato_{experiment}.csv"))
    truth, _ = load_rank_matrix(bundled("potato_true.csv"))
    return complete_matrix(partials), catalog, truth[0].entries.copy()
