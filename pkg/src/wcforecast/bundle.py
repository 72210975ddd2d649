"""Versioned, checksummed bundle files.

Layout::

    WCFORECAST-BUNDLE
    format_version=1.1
    encoding=zlib+json
    payload_bytes=<decimal length>
    payload_sha256=<hex digest of the payload>
    <empty line>
    <payload>

The header is ASCII. The payload is zlib-compressed JSON with sorted keys;
numpy arrays are stored as ``{"__ndarray__": dtype, "shape": [...], "data":
base64 of raw little-endian bytes}`` so floats round-trip bit-exactly. The
file contains no timestamps: the same bundle always serializes to the same
bytes.

Version history: 1.0 had no ``grid_results`` or ``test_match_ids``; both
default to empty lists on load.
"""
from __future__ import annotations

import base64
import hashlib
import json
import zlib
from pathlib import Path

import numpy as np

from . import models
from .dataset import TeamProfile
from .errors import BundleError
from .features import PcaModel, Scaler
from .training import FORMAT_VERSION, EnsembleBundle, FamilyModel

MAGIC = b"WCFORECAST-BUNDLE"
SUPPORTED_VERSIONS = ("1.0", "1.1")
ENCODING = "zlib+json"


def _encode(obj):
    if isinstance(obj, np.ndarray):
        arr = np.ascontiguousarray(obj)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        return {
            "__ndarray__": arr.dtype.str,
            "shape": list(arr.shape),
            "data": base64.b64encode(arr.tobytes()).decode("ascii"),
        }
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            raw = base64.b64decode(obj["data"])
            return np.frombuffer(raw, dtype=np.dtype(obj["__ndarray__"])).reshape(obj["shape"]).copy()
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def bundle_to_dict(bundle: EnsembleBundle) -> dict:
    pca = None
    if bundle.pca is not None:
        pca = {
            "components": bundle.pca.components,
            "explained_variance": bundle.pca.explained_variance,
            "center": bundle.pca.center,
            "all_variances": bundle.pca.all_variances,
        }
    return {
        "format_version": FORMAT_VERSION,
        "seed": int(bundle.seed),
        "attributes": list(bundle.attributes),
        "fallback_depth": int(bundle.fallback_depth),
        "config": dict(sorted(bundle.config.items())),
        "scaler": {
            "means": bundle.scaler.means,
            "stds": bundle.scaler.stds,
            "floored": list(bundle.scaler.floored),
        },
        "pca": pca,
        "members": [
            {
                "family": m.family,
                "params": m.params,
                "seed": int(m.seed),
                "use_pca": bool(m.use_pca),
                "n_features": int(m.model.n_features),
                "state": m.model.get_state(),
            }
            for m in bundle.members
        ],
        "profiles": [
            {"team": p.team, "year": p.year, "features": list(p.features), "roster_size": p.roster_size}
            for _, p in sorted(bundle.profiles.items())
        ],
        "grid_results": bundle.grid_results,
        "test_match_ids": list(bundle.test_match_ids),
    }


def bundle_from_dict(data: dict, version: str) -> EnsembleBundle:
    try:
        scaler = Scaler(
            np.asarray(data["scaler"]["means"], dtype=float),
            np.asarray(data["scaler"]["stds"], dtype=float),
            tuple(data["scaler"].get("floored", ())),
        )
        pca = None
        if data.get("pca") is not None:
            p = data["pca"]
            pca = PcaModel(p["components"], p["explained_variance"], p["center"], p["all_variances"])
        members = []
        for m in data["members"]:
            model = models.restore(m["family"], m["seed"], m["params"], m["n_features"], m["state"])
            members.append(FamilyModel(m["family"], m["params"], m["seed"], m["use_pca"], model))
        profiles = {
            (p["team"], int(p["year"])): TeamProfile(
                p["team"], int(p["year"]), tuple(float(v) for v in p["features"]), int(p["roster_size"])
            )
            for p in data["profiles"]
        }
        bundle = EnsembleBundle(
            scaler=scaler,
            pca=pca,
            members=members,
            attributes=list(data["attributes"]),
            profiles=profiles,
            fallback_depth=int(data.get("fallback_depth", 2)),
            seed=int(data["seed"]),
            config=dict(data.get("config", {})),
            grid_results=list(data.get("grid_results", [])),
            test_match_ids=list(data.get("test_match_ids", [])),
            format_version=version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"malformed bundle payload: {exc!r}") from exc
    bundle.check()
    return bundle


def encode_payload(data: dict) -> bytes:
    text = json.dumps(_encode(data), sort_keys=True, separators=(",", ":"))
    return zlib.compress(text.encode("utf-8"), 9)


def write_container(payload: bytes, version: str = FORMAT_VERSION) -> bytes:
    header = [
        MAGIC.decode(),
        f"format_version={version}",
        f"encoding={ENCODING}",
        f"payload_bytes={len(payload)}",
        f"payload_sha256={hashlib.sha256(payload).hexdigest()}",
    ]
    return ("\n".join(header) + "\n\n").encode("ascii") + payload


def save_bundle(bundle: EnsembleBundle, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = write_container(encode_payload(bundle_to_dict(bundle)))
    path.write_bytes(blob)
    return path


def read_container(blob: bytes) -> tuple[str, dict]:
    head, sep, payload = blob.partition(b"\n\n")
    if not sep:
        raise BundleError("truncated file: no header terminator")
    try:
        lines = head.decode("ascii").split("\n")
    except UnicodeDecodeError:
        raise BundleError("corrupt header: not ASCII") from None
    if lines[0].encode() != MAGIC:
        raise BundleError("not a bundle file (bad magic line)")
    fields = {}
    for line in lines[1:]:
        key, eq, value = line.partition("=")
        if not eq:
            raise BundleError(f"corrupt header line {line!r}")
        fields[key] = value
    version = fields.get("format_version")
    if version not in SUPPORTED_VERSIONS:
        raise BundleError(f"unknown format_version {version!r} (supported: {', '.join(SUPPORTED_VERSIONS)})")
    if fields.get("encoding") != ENCODING:
        raise BundleError(f"unsupported encoding {fields.get('encoding')!r}")
    try:
        expected = int(fields["payload_bytes"])
        digest = fields["payload_sha256"]
    except (KeyError, ValueError):
        raise BundleError("corrupt header: missing payload size or checksum") from None
    if len(payload) < expected:
        raise BundleError(f"truncated file: payload has {len(payload)} of {expected} bytes")
    if len(payload) > expected:
        raise BundleError(f"trailing data: payload has {len(payload)} bytes, header says {expected}")
    if hashlib.sha256(payload).hexdigest() != digest:
        raise BundleError("checksum mismatch: payload is corrupted")
    try:
        data = json.loads(zlib.decompress(payload).decode("utf-8"))
    except (zlib.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleError(f"undecodable payload: {exc}") from exc
    return version, _decode(data)


def load_bundle(path: str | Path) -> EnsembleBundle:
    path = Path(path)
    if not path.exists():
        raise BundleError(f"bundle not found: {path}")
    version, data = read_container(path.read_bytes())
    return bundle_from_dict(data, version)
