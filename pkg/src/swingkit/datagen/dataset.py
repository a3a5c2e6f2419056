"""Dataset persistence: manifest.json plus one GSMB blob per array.

Per swing the manifest lists metadata, event frames, and relative file paths:
`<id>.pose.bin` (T x 156 float32), `<id>.imu.bin` (T x 9 float32), optional
`<id>.root.bin` (T x 3 float32 root path) and `<id>.tok.bin` (T x 5 uint16
token grid).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import gsmb
from ..errors import FormatError
from ..kinematics import MotionSequence
from .generator import PlayerProfile, SwingRecord

MANIFEST = "manifest.json"


def write_dataset(records: list[SwingRecord], out_dir,
                  tokens: dict[str, np.ndarray] | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    swings = []
    for rec in records:
        files = {"pose": f"{rec.swing_id}.pose.bin", "imu": f"{rec.swing_id}.imu.bin"}
        gsmb.write_array(out / files["pose"], rec.motion.sixd.astype(np.float32))
        gsmb.write_array(out / files["imu"], rec.sensor.astype(np.float32))
        if rec.motion.root is not None:
            files["root"] = f"{rec.swing_id}.root.bin"
            gsmb.write_array(out / files["root"], rec.motion.root.astype(np.float32))
        if tokens and rec.swing_id in tokens:
            files["tok"] = f"{rec.swing_id}.tok.bin"
            gsmb.write_array(out / files["tok"], tokens[rec.swing_id].astype(np.uint16))
        swings.append({
            "id": rec.swing_id,
            "player_id": rec.profile.player_id,
            "sex": rec.profile.sex,
            "age": rec.profile.age,
            "style": [float(v) for v in rec.profile.style],
            "club": rec.club,
            "fps": rec.fps,
            "events": [int(e) for e in rec.events],
            "files": files,
        })
    doc = {"format": "swingkit-dataset", "version": 1, "swings": swings}
    (out / MANIFEST).write_text(json.dumps(doc, indent=1))


def read_manifest(dir_path) -> dict:
    path = Path(dir_path) / MANIFEST
    if not path.exists():
        raise FormatError(f"{path}: missing dataset manifest")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if doc.get("format") != "swingkit-dataset":
        raise FormatError(f"{path}: not a swingkit dataset manifest")
    return doc


def read_dataset(dir_path) -> list[SwingRecord]:
    base = Path(dir_path)
    doc = read_manifest(base)
    records = []
    for entry in doc["swings"]:
        files = entry["files"]
        for key in ("pose", "imu"):
            if not (base / files[key]).exists():
                raise FormatError(f"{base / MANIFEST}: listed file "
                                  f"{files[key]!r} is missing")
        pose = gsmb.read_array(base / files["pose"])
        imu = gsmb.read_array(base / files["imu"])
        root = None
        if "root" in files:
            if not (base / files["root"]).exists():
                raise FormatError(f"{base / MANIFEST}: listed file "
                                  f"{files['root']!r} is missing")
            root = gsmb.read_array(base / files["root"])
        profile = PlayerProfile(entry["player_id"], entry["sex"], entry["age"],
                                np.asarray(entry["style"]))
        records.append(SwingRecord(
            entry["id"], profile, entry["club"], entry["fps"],
            MotionSequence(pose, entry["fps"], root), imu,
            np.asarray(entry["events"], dtype=np.int64)))
    return records


def write_tokens(dir_path, tokens: dict[str, np.ndarray]) -> None:
    """Attach token grids to an existing dataset directory."""
    base = Path(dir_path)
    doc = read_manifest(base)
    by_id = {s["id"]: s for s in doc["swings"]}
    for swing_id, grid in tokens.items():
        if swing_id not in by_id:
            raise FormatError(f"{base / MANIFEST}: unknown swing id {swing_id!r}")
        fname = f"{swing_id}.tok.bin"
        gsmb.write_array(base / fname, np.asarray(grid).astype(np.uint16))
        by_id[swing_id]["files"]["tok"] = fname
    (base / MANIFEST).write_text(json.dumps(doc, indent=1))


def read_tokens(dir_path) -> dict[str, np.ndarray]:
    base = Path(dir_path)
    doc = read_manifest(base)
    out = {}
    for entry in doc["swings"]:
        if "tok" in entry["files"]:
            path = base / entry["files"]["tok"]
            if not path.exists():
                raise FormatError(f"{base / MANIFEST}: listed file "
                                  f"{entry['files']['tok']!r} is missing")
            out[entry["id"]] = gsmb.read_array(path).astype(np.int64)
    return out
