"""On-disk layout for versioned artifact bundles.

Each version lives in ``store/v<NNN>/`` with one file per artifact plus a
``meta.json`` tying them together; ``store/LATEST`` names the current
version. Writes land in a temporary directory first and are renamed into
place, so a crash mid-save never leaves a half-written version visible.
Version directories are immutable once written.
"""

from __future__ import annotations

import json
import os
import uuid

import numpy as np

from .aggregation import PrincipalScoreAggregator, QualityStandardizer
from .artifacts import ArtifactBundle, HistoryRow, ModelVersion
from .dimensions import IntegrityConstraints, QualityVector, ReferenceSample, RobustZScoreDetector
from .drift import JsdDriftDetector, Pdf
from .errors import StoreError
from .predictor import GradientBoostedScoreRegressor
from .windowing import DataWindow, Reading

STORE_FORMAT_VERSION = 1

_BUNDLE_FILES = (
    "model.json",
    "standardizer.json",
    "pca.json",
    "anomaly.json",
    "reference_sample.csv",
    "reference_pdf.json",
    "divergences.log",
    "meta.json",
    "history.json",
)


def version_dir_name(version: int) -> str:
    return f"v{version:03d}"


def store_save(bundle: ArtifactBundle, root: str) -> str:
    """Persist one bundle version atomically; returns the version directory."""
    os.makedirs(root, exist_ok=True)
    final_name = version_dir_name(bundle.version.version)
    final_path = os.path.join(root, final_name)
    if os.path.exists(final_path):
        raise StoreError(f"version directory already exists: {final_path}")
    tmp_path = os.path.join(root, f".tmp-{final_name}-{uuid.uuid4().hex}")
    os.makedirs(tmp_path)
    try:
        _write_json(tmp_path, "model.json", bundle.model.to_dict())
        _write_json(tmp_path, "standardizer.json", bundle.standardizer.to_dict())
        _write_json(tmp_path, "pca.json", bundle.aggregator.to_dict())
        _write_json(tmp_path, "anomaly.json", bundle.anomaly.to_dict())
        _write_text(
            tmp_path,
            "reference_sample.csv",
            "value\n" + "".join(repr(float(v)) + "\n" for v in bundle.reference.values),
        )
        _write_json(
            tmp_path,
            "reference_pdf.json",
            {
                "bin_edges": bundle.reference_pdf.bin_edges.tolist(),
                "probs": bundle.reference_pdf.probs.tolist(),
                "smoothing": bundle.skew_smoothing,
            },
        )
        _write_text(
            tmp_path,
            "divergences.log",
            "".join(repr(float(d)) + "\n" for d in bundle.detector.divergence_history),
        )
        _write_json(tmp_path, "history.json", _history_to_json(bundle.history))
        _write_json(tmp_path, "meta.json", _meta_to_json(bundle))
        os.replace(tmp_path, final_path)
    except Exception:
        _cleanup(tmp_path)
        raise
    _write_latest(root, bundle.version.version)
    return final_path


def store_load(root: str, version: int | None = None) -> ArtifactBundle:
    """Load one version (default: LATEST); the result scores identically."""
    if version is None:
        version = read_latest(root)
    vdir = os.path.join(root, version_dir_name(version))
    if not os.path.isdir(vdir):
        raise StoreError(f"version directory not found: {vdir}")
    for name in _BUNDLE_FILES:
        if not os.path.exists(os.path.join(vdir, name)):
            raise StoreError(f"artifact file missing from {vdir}: {name}")

    meta = _read_json(vdir, "meta.json")
    if meta.get("store_format_version") != STORE_FORMAT_VERSION:
        raise StoreError(
            f"unsupported store format version {meta.get('store_format_version')!r} in {vdir}"
        )
    model = GradientBoostedScoreRegressor.from_dict(_read_json(vdir, "model.json"))
    standardizer = QualityStandardizer.from_dict(_read_json(vdir, "standardizer.json"))
    aggregator = PrincipalScoreAggregator.from_dict(_read_json(vdir, "pca.json"))
    anomaly = RobustZScoreDetector.from_dict(_read_json(vdir, "anomaly.json"))

    ref_values = _read_reference_csv(vdir)
    pdf_payload = _read_json(vdir, "reference_pdf.json")
    edges = np.asarray(pdf_payload["bin_edges"], dtype=np.float64)
    skew_smoothing = float(pdf_payload["smoothing"])
    reference_pdf = Pdf(
        bin_edges=edges, probs=np.asarray(pdf_payload["probs"], dtype=np.float64)
    )

    detector = JsdDriftDetector(
        tau=float(meta["tau"]),
        min_history=int(meta["min_history"]),
        smoothing=float(meta["drift_smoothing"]),
    ).fit(ref_values, edges)
    for line in _read_text(vdir, "divergences.log").splitlines():
        if line.strip():
            detector.record(float(line))

    constraints = IntegrityConstraints(
        min_value=float(meta["constraints"]["min_value"]),
        max_value=float(meta["constraints"]["max_value"]),
    )
    version_info = ModelVersion(
        version=int(meta["version"]),
        trigger=str(meta["trigger"]),
        created_at=int(meta["created_at"]),
        parent=None if meta["parent"] is None else int(meta["parent"]),
    )
    history = _history_from_json(_read_json(vdir, "history.json"))
    return ArtifactBundle(
        model=model,
        standardizer=standardizer,
        aggregator=aggregator,
        anomaly=anomaly,
        detector=detector,
        reference=ReferenceSample(ref_values),
        reference_pdf=reference_pdf,
        constraints=constraints,
        skew_smoothing=skew_smoothing,
        history=history,
        version=version_info,
    )


def read_latest(root: str) -> int:
    path = os.path.join(root, "LATEST")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return int(fh.read().strip())
    except FileNotFoundError as exc:
        raise StoreError(f"store has no LATEST pointer: {path}") from exc
    except ValueError as exc:
        raise StoreError(f"LATEST pointer is not an integer: {path}") from exc


def list_versions(root: str) -> list[int]:
    if not os.path.isdir(root):
        return []
    out = []
    for name in os.listdir(root):
        if name.startswith("v") and name[1:].isdigit():
            out.append(int(name[1:]))
    return sorted(out)


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------


def _meta_to_json(bundle: ArtifactBundle) -> dict:
    return {
        "store_format_version": STORE_FORMAT_VERSION,
        "version": bundle.version.version,
        "trigger": bundle.version.trigger,
        "created_at": bundle.version.created_at,
        "parent": bundle.version.parent,
        "tau": bundle.detector.tau,
        "min_history": bundle.detector.min_history,
        "drift_smoothing": bundle.detector.smoothing,
        "skew_smoothing": bundle.skew_smoothing,
        "constraints": {
            "min_value": bundle.constraints.min_value,
            "max_value": bundle.constraints.max_value,
        },
        "explained_variance_ratio": bundle.aggregator.explained_variance_ratio_,
        "degenerate_projection": bundle.aggregator.degenerate_,
        "model_fingerprint": bundle.model.fingerprint_,
        "history_rows": len(bundle.history),
    }


def _history_to_json(history: list[HistoryRow]) -> list[dict]:
    rows = []
    for row in history:
        rows.append(
            {
                "window_id": row.window.window_id,
                "terminal": row.window.terminal,
                "timestamps": [r.timestamp for r in row.window.readings],
                "values": [r.value for r in row.window.readings],
                "quality": row.quality.to_array().tolist(),
                "score": row.score,
            }
        )
    return rows


def _history_from_json(rows: list[dict]) -> list[HistoryRow]:
    out = []
    for rec in rows:
        readings = tuple(
            Reading(int(t), None if v is None else float(v))
            for t, v in zip(rec["timestamps"], rec["values"])
        )
        window = DataWindow(
            window_id=int(rec["window_id"]), readings=readings, terminal=bool(rec["terminal"])
        )
        out.append(
            HistoryRow(
                window=window,
                quality=QualityVector.from_array(rec["quality"]),
                score=float(rec["score"]),
            )
        )
    return out


def _write_json(dirpath: str, name: str, payload) -> None:
    _write_text(dirpath, name, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_text(dirpath: str, name: str, text: str) -> None:
    with open(os.path.join(dirpath, name), "w", encoding="utf-8") as fh:
        fh.write(text)


def _read_json(dirpath: str, name: str):
    try:
        with open(os.path.join(dirpath, name), "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise StoreError(f"cannot read artifact {name} in {dirpath}: {exc}") from exc


def _read_text(dirpath: str, name: str) -> str:
    try:
        with open(os.path.join(dirpath, name), "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise StoreError(f"cannot read artifact {name} in {dirpath}: {exc}") from exc


def _read_reference_csv(vdir: str) -> np.ndarray:
    text = _read_text(vdir, "reference_sample.csv")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "value":
        raise StoreError(f"reference_sample.csv in {vdir} lacks the 'value' header")
    return np.array([float(ln) for ln in lines[1:]], dtype=np.float64)


def _write_latest(root: str, version: int) -> None:
    tmp = os.path.join(root, f".LATEST-{uuid.uuid4().hex}")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(f"{version}\n")
    os.replace(tmp, os.path.join(root, "LATEST"))


def _cleanup(path: str) -> None:
    if not os.path.isdir(path):
        return
    for name in os.listdir(path):
        try:
            os.remove(os.path.join(path, name))
        except OSError:
            pass
    try:
        os.rmdir(path)
    except OSError:
        pass
