"""Serialization: CSV schemas, JSON experiment configs, and run manifests.

All floats are written with 17 significant digits so that read(write(x))
round-trips exactly; non-finite values are rejected at write time.  Config
parsing is strict: unknown keys are errors, so typos cannot silently fall
back to defaults.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedCsv, ParseError, ValidationError
from .manifolds import (
    LabeledDataset,
    ManifoldSpec,
    NoiseModel,
    PointCloud,
    TrendSpec,
    manifold_by_kind,
)

__all__ = [
    "write_csv",
    "read_csv",
    "dataset_to_csv",
    "dataset_from_csv",
    "u_report_to_csv",
    "u_from_csv",
    "edges_to_csv",
    "extension_to_csv",
    "error_field_to_csv",
    "read_field_csv",
    "points_to_csv",
    "points_from_csv",
    "predictions_to_csv",
    "parse_config",
    "serialize_config",
    "load_config",
    "RunManifest",
    "write_manifest",
]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise MalformedCsv(f"non-finite value {value!r} rejected on write")
        return "%.17g" % value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write rows of mixed int/float/str cells; floats get 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path, expected_header=None):
    """Read a CSV into (header, rows of string lists); validates the header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedCsv(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            rows.append(row)
    if expected_header is not None and header != list(expected_header):
        raise MalformedCsv(f"{path}: header {header} != expected {list(expected_header)}")
    return header, rows


def _parse_float(cell: str, path, lineno: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise MalformedCsv(f"{path}: row {lineno}: bad float {cell!r}") from None


# --------------------------------------------------------------------------
# Dataset schema: idx,x1,...,xd,labeled,y,mu


def dataset_header(d: int):
    return ["idx"] + [f"x{a + 1}" for a in range(d)] + ["labeled", "y", "mu"]


def dataset_to_csv(path, dataset: LabeledDataset) -> None:
    cloud = dataset.cloud
    d = cloud.points.shape[1]

    def rows():
        for i in range(cloud.n):
            labeled = 1 if i < dataset.q else 0
            y = _fmt(dataset.labels[i]) if labeled else ""
            yield [i, *(_fmt(c) for c in cloud.points[i]), labeled, y, _fmt(dataset.trend_values[i])]

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset_header(d))
        for row in rows():
            writer.writerow(row)


def dataset_from_csv(path, manifold: ManifoldSpec) -> LabeledDataset:
    """Rebuild a dataset; the manifold is context the schema does not carry.

    Labeled rows must form a prefix (the first q indices), matching how
    datasets are generated.
    """
    d = manifold.ambient_dim
    header, rows = read_csv(path, dataset_header(d))
    n = len(rows)
    if n == 0:
        raise MalformedCsv(f"{path}: no data rows")
    pts = np.empty((n, d))
    labels = []
    mu = np.empty(n)
    seen_unlabeled = False
    for lineno, row in enumerate(rows, start=2):
        i = lineno - 2
        if int(row[0]) != i:
            raise MalformedCsv(f"{path}: row {lineno}: idx {row[0]} out of order")
        pts[i] = [_parse_float(c, path, lineno) for c in row[1:1 + d]]
        labeled = row[1 + d] == "1"
        if labeled:
            if seen_unlabeled:
                raise MalformedCsv(f"{path}: row {lineno}: labeled rows must form a prefix")
            labels.append(_parse_float(row[2 + d], path, lineno))
        else:
            seen_unlabeled = True
            if row[2 + d] != "":
                raise MalformedCsv(f"{path}: row {lineno}: unlabeled row carries a label")
        mu[i] = _parse_float(row[3 + d], path, lineno)
    if not labels:
        raise MalformedCsv(f"{path}: no labeled rows")
    cloud = PointCloud(manifold=manifold, points=pts, n=n, seed=0)
    return LabeledDataset(cloud=cloud, q=len(labels), labels=np.array(labels), trend_values=mu, noise_seed=0)


# --------------------------------------------------------------------------
# Small fixed schemas


def u_report_to_csv(path, u, residuals) -> None:
    write_csv(path, ["idx", "u", "residual"], ((i, u[i], residuals[i]) for i in range(len(u))))


def u_from_csv(path) -> np.ndarray:
    _, rows = read_csv(path, ["idx", "u", "residual"])
    return np.array([_parse_float(r[1], path, k + 2) for k, r in enumerate(rows)])


def edges_to_csv(path, graph, cloud) -> None:
    from .geograph import graph_edges

    ii, jj, dist, w = graph_edges(graph, cloud)
    write_csv(path, ["i", "j", "dist", "w"], zip(ii, jj, dist, w))


def extension_to_csv(path, assignment) -> None:
    write_csv(
        path,
        ["idx", "owner", "y_ext"],
        ((i, assignment.owner[i], assignment.extended_y[i]) for i in range(len(assignment.owner))),
    )


def error_field_to_csv(path, points, value, value_mu) -> None:
    """Per-point error field; ``value`` is against the modified trend,
    ``value_mu`` against the raw trend."""
    write_csv(
        path,
        ["idx", "x1", "x2", "value", "value_mu"],
        ((i, points[i, 0], points[i, 1], value[i], value_mu[i]) for i in range(len(value))),
    )


def read_field_csv(path):
    """Read a field CSV requiring columns idx,x1,x2,value (extras ignored)."""
    header, rows = read_csv(path)
    required = ["idx", "x1", "x2", "value"]
    if header[: len(required)] != required:
        raise MalformedCsv(f"{path}: header must start with {required}, got {header}")
    pts = np.empty((len(rows), 2))
    vals = np.empty(len(rows))
    for k, row in enumerate(rows):
        pts[k, 0] = _parse_float(row[1], path, k + 2)
        pts[k, 1] = _parse_float(row[2], path, k + 2)
        vals[k] = _parse_float(row[3], path, k + 2)
    return pts, vals


def points_to_csv(path, points) -> None:
    d = points.shape[1]
    header = ["idx"] + [f"x{a + 1}" for a in range(d)]
    write_csv(path, header, ((i, *points[i]) for i in range(len(points))))


def points_from_csv(path, d: int) -> np.ndarray:
    header = ["idx"] + [f"x{a + 1}" for a in range(d)]
    _, rows = read_csv(path, header)
    out = np.empty((len(rows), d))
    for k, row in enumerate(rows):
        out[k] = [_parse_float(c, path, k + 2) for c in row[1:]]
    return out


def predictions_to_csv(path, predictions) -> None:
    write_csv(path, ["idx", "prediction"], enumerate(predictions))


# --------------------------------------------------------------------------
# Experiment configuration (JSON)

_TOP_KEYS = {"manifold", "n", "q", "trend", "noise", "loss", "kernel", "schedule", "seeds", "out_dir", "knn_k"}


def _as_dict(value, default_kind_key: str, allowed: dict, what: str) -> dict:
    """Normalize a config entry (string shorthand or dict) and verify keys."""
    if isinstance(value, str):
        value = {"kind": value}
    if not isinstance(value, dict):
        raise ParseError(f"{what}: expected object or string, got {type(value).__name__}")
    if "kind" not in value:
        raise ParseError(f"{what}: missing 'kind'")
    kind = value["kind"]
    if kind not in allowed:
        raise ParseError(f"{what}: unknown kind {kind!r}")
    extra = set(value) - {"kind"} - set(allowed[kind])
    if extra:
        raise ParseError(f"{what}: unknown keys {sorted(extra)} for kind {kind!r}")
    return value


def parse_config(text: str):
    """Parse and validate a JSON experiment config, filling defaults."""
    from .experiments import ExperimentConfig, Schedule
    from .geograph import KernelSpec

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ParseError("top level must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ParseError(f"unknown config keys {sorted(unknown)}")
    if "manifold" not in raw or "n" not in raw:
        raise ParseError("config requires at least 'manifold' and 'n'")

    try:
        manifold = manifold_by_kind(raw["manifold"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    n = raw["n"]
    if not isinstance(n, int) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    q = raw.get("q", n)
    if not isinstance(q, int) or not 1 <= q <= n:
        raise ValidationError(f"q={q!r} outside [1, n={n}]")

    tdict = _as_dict(
        raw.get("trend", "paper_sine"),
        "kind",
        {"paper_sine": (), "constant": ("value",), "sum_of_sines": ("coefficients", "frequencies")},
        "trend",
    )
    if tdict["kind"] == "constant":
        trend = TrendSpec("constant", value=float(tdict.get("value", 0.0)))
    elif tdict["kind"] == "sum_of_sines":
        trend = TrendSpec(
            "sum_of_sines",
            coefficients=tuple(float(c) for c in tdict.get("coefficients", ())),
            frequencies=tuple(tuple(int(k) for k in kv) for kv in tdict.get("frequencies", ())),
        )
    else:
        trend = TrendSpec("paper_sine")

    ndict = _as_dict(
        raw.get("noise", {"kind": "sym_bernoulli", "sigma": 0.3}),
        "kind",
        {"sym_bernoulli": ("sigma",), "asym_bernoulli": ("sigma", "p_plus"), "uniform": ("sigma",)},
        "noise",
    )
    try:
        noise = NoiseModel(
            ndict["kind"],
            sigma=float(ndict.get("sigma", 0.3)),
            p_plus=float(ndict.get("p_plus", 0.8)),
        )
    except ValueError as exc:
        raise ValidationError(f"noise: {exc}") from None

    ldict = _as_dict(
        raw.get("loss", "quadratic"),
        "kind",
        {"quadratic": (), "quartic": (), "quad_quartic": ("a", "b")},
        "loss",
    )
    from .loss import LossModel

    try:
        lkind = ldict["kind"]
        loss = LossModel(lkind, a=float(ldict.get("a", 1.0)), b=float(ldict.get("b", 0.0)))
    except ValueError as exc:
        raise ValidationError(f"loss: {exc}") from None

    kdict = _as_dict(raw.get("kernel", "bump"), "kind", {"bump": (), "indicator": ()}, "kernel")
    kernel = KernelSpec(kdict["kind"], m=manifold.intrinsic_dim)

    sdict = _as_dict(
        raw.get("schedule", "paper"),
        "kind",
        {"paper": (), "explicit": ("eps", "beta")},
        "schedule",
    )
    if sdict["kind"] == "explicit":
        if "eps" not in sdict or "beta" not in sdict:
            raise ValidationError("explicit schedule requires eps and beta")
        eps, beta = float(sdict["eps"]), float(sdict["beta"])
        if not eps > 0 or beta < 0:
            raise ValidationError("explicit schedule requires eps > 0 and beta >= 0")
        schedule = Schedule("explicit", eps=eps, beta=beta)
    else:
        schedule = Schedule("paper")

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ValidationError(f"seeds must be a non-empty list of non-negative integers, got {seeds!r}")
    knn_k = raw.get("knn_k", 5)
    if not isinstance(knn_k, int) or not 1 <= knn_k <= q:
        raise ValidationError(f"knn_k={knn_k!r} outside [1, q={q}]")
    out_dir = raw.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ValidationError("out_dir must be a string or null")

    return ExperimentConfig(
        manifold=manifold,
        trend=trend,
        noise=noise,
        loss=loss,
        kernel=kernel,
        n=n,
        q=q,
        schedule=schedule,
        seeds=tuple(seeds),
        out_dir=out_dir,
        knn_k=knn_k,
    )


def serialize_config(config) -> str:
    """Canonical JSON for a config; parse(serialize(c)) == c."""
    t = config.trend
    if t.kind == "constant":
        tdict = {"kind": "constant", "value": t.value}
    elif t.kind == "sum_of_sines":
        tdict = {"kind": "sum_of_sines", "coefficients": list(t.coefficients), "frequencies": [list(k) for k in t.frequencies]}
    else:
        tdict = {"kind": "paper_sine"}
    ndict = {"kind": config.noise.kind, "sigma": config.noise.sigma}
    if config.noise.kind == "asym_bernoulli":
        ndict["p_plus"] = config.noise.p_plus
    ldict = {"kind": config.loss.kind}
    if config.loss.kind == "quad_quartic":
        ldict.update(a=config.loss.a, b=config.loss.b)
    sdict = {"kind": config.schedule.kind}
    if config.schedule.kind == "explicit":
        sdict.update(eps=config.schedule.eps, beta=config.schedule.beta)
    doc = {
        "manifold": config.manifold.kind,
        "n": config.n,
        "q": config.q,
        "trend": tdict,
        "noise": ndict,
        "loss": ldict,
        "kernel": {"kind": config.kernel.kind},
        "schedule": sdict,
        "seeds": list(config.seeds),
        "out_dir": config.out_dir,
        "knn_k": config.knn_k,
    }
    return json.dumps(doc, indent=2)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


# --------------------------------------------------------------------------
# Run manifests


@dataclass
class RunManifest:
    """Provenance record written beside experiment outputs."""

    config_json: str
    versions: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    stage_seconds: dict = field(default_factory=dict)
    output_digests: dict = field(default_factory=dict)


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, manifest: RunManifest) -> None:
    doc = {
        "config": json.loads(manifest.config_json),
        "versions": manifest.versions,
        "seeds": manifest.seeds,
        "stage_seconds": manifest.stage_seconds,
        "output_digests": manifest.output_digests,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
