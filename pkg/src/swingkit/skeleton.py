"""The 26-body kinematic tree: bodies, joints, limits, body-part partition.

Conventions: right-handed global frame, +z up, +y forward, +x toward the
subject's right; offsets in meters, expressed in the parent body frame;
angles in radians. The local rotation of a body relative to its parent is
the ordered product of rotations about its joint's DOF axes (intrinsic),
so multi-DOF joints need mutually orthogonal axes.

The pose vector layout is body-major 6D (6 channels per body) with bodies
ordered part-major: left arm, right arm, left leg, right leg, backbone.
This makes each part a contiguous slice of the 156-wide pose row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

PART_NAMES = ("left_arm", "right_arm", "left_leg", "right_leg", "backbone")
PART_WIDTHS = {"left_arm": 36, "right_arm": 36, "left_leg": 30, "right_leg": 30,
               "backbone": 24}


@dataclass
class Dof:
    name: str
    axis: np.ndarray          # unit vector in the parent frame
    limits: tuple[float, float]


@dataclass
class Joint:
    body: int                 # child body index
    dofs: list[Dof]


@dataclass
class SkeletonConfig:
    bodies: list[str]
    parents: list[int]             # -1 for the root
    offsets: np.ndarray            # (n_bodies, 3), meters, parent frame
    joints: list[Joint]            # one per body, in body order
    partition: dict[str, list[int]]

    # derived, filled by validate()
    root: int = field(default=-1, repr=False)
    topo_order: list[int] = field(default_factory=list, repr=False)
    dof_names: list[str] = field(default_factory=list, repr=False)
    dof_limits: np.ndarray = field(default=None, repr=False)

    @property
    def n_bodies(self) -> int:
        return len(self.bodies)

    @property
    def n_dofs(self) -> int:
        return sum(len(j.dofs) for j in self.joints)

    @property
    def pose_width(self) -> int:
        return 6 * self.n_bodies

    def body_index(self, name: str) -> int:
        try:
            return self.bodies.index(name)
        except ValueError:
            raise ValidationError(f"unknown body {name!r}") from None

    def part_slices(self) -> list[tuple[str, slice]]:
        """Contiguous 6D channel ranges, one per part, in partition order."""
        out, start = [], 0
        for part in PART_NAMES:
            width = 6 * len(self.partition[part])
            out.append((part, slice(start, start + width)))
            start += width
        return out

    def dof_slices(self) -> dict[int, slice]:
        """Per-body slice into the 52-wide joint-angle vector."""
        out, start = {}, 0
        for joint in self.joints:
            out[joint.body] = slice(start, start + len(joint.dofs))
            start += len(joint.dofs)
        return out

    def validate(self) -> "SkeletonConfig":
        n = self.n_bodies
        roots = [i for i, p in enumerate(self.parents) if p < 0]
        if len(roots) != 1:
            raise ValidationError(f"expected exactly one root body, found {len(roots)}")
        self.root = roots[0]
        if self.bodies[self.root] != "pelvis":
            raise ValidationError("the tree must be rooted at the pelvis")

        # parents form a tree: walking up from any body terminates at the root
        order, seen = [], set()
        remaining = set(range(n))
        while remaining:
            chain = []
            b = next(iter(remaining))
            while b not in seen:
                if b in chain:
                    raise ValidationError(f"parent cycle through body {self.bodies[b]}")
                chain.append(b)
                if self.parents[b] < 0:
                    break
                b = self.parents[b]
            for c in reversed(chain):
                seen.add(c)
                order.append(c)
                remaining.discard(c)
        # topological order: parents before children
        depth = [0] * n
        for i in range(n):
            p, d = i, 0
            while self.parents[p] >= 0:
                p = self.parents[p]
                d += 1
            depth[i] = d
        self.topo_order = sorted(range(n), key=lambda i: (depth[i], i))

        covered = sorted(idx for part in PART_NAMES for idx in self.partition[part])
        if covered != list(range(n)):
            raise ValidationError("partition must cover every body exactly once")
        for part in PART_NAMES:
            width = 6 * len(self.partition[part])
            if width != PART_WIDTHS[part]:
                raise ValidationError(f"part {part}: 6D width {width} "
                                      f"!= expected {PART_WIDTHS[part]}")
            # the pose layout requires contiguous, ordered part slices
            idxs = self.partition[part]
            if idxs != list(range(idxs[0], idxs[0] + len(idxs))):
                raise ValidationError(f"part {part}: body indices must be contiguous")

        if self.n_dofs != 52:
            raise ValidationError(f"expected 52 joint DOF, found {self.n_dofs}")
        for joint in self.joints:
            axes = np.stack([d.axis for d in joint.dofs])
            norms = np.linalg.norm(axes, axis=1)
            if not np.allclose(norms, 1.0, atol=1e-9):
                raise ValidationError(f"non-unit DOF axis on body "
                                      f"{self.bodies[joint.body]}")
            gram = axes @ axes.T
            if not np.allclose(gram, np.eye(len(axes)), atol=1e-9):
                raise ValidationError(f"joint on body {self.bodies[joint.body]} "
                                      f"has non-orthogonal DOF axes")
            for d in joint.dofs:
                lo, hi = d.limits
                if not lo < hi:
                    raise ValidationError(f"dof {d.name}: empty limit range")

        self.dof_names = [d.name for j in self.joints for d in j.dofs]
        self.dof_limits = np.array([d.limits for j in self.joints for d in j.dofs])
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        return self

    # ---- JSON round trip ----------------------------------------------
    def to_json(self) -> str:
        doc = {
            "format": "swingkit-skeleton",
            "version": 1,
            "bodies": [{"name": b, "parent": self.bodies[p] if p >= 0 else None,
                        "offset": [float(v) for v in self.offsets[i]]}
                       for i, (b, p) in enumerate(zip(self.bodies, self.parents))],
            "joints": [{"body": self.bodies[j.body],
                        "dofs": [{"name": d.name,
                                  "axis": [float(v) for v in d.axis],
                                  "limits": [float(d.limits[0]), float(d.limits[1])]}
                                 for d in j.dofs]}
                       for j in self.joints],
            "partition": {part: [self.bodies[i] for i in idxs]
                          for part, idxs in self.partition.items()},
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "SkeletonConfig":
        doc = json.loads(text)
        if doc.get("format") != "swingkit-skeleton":
            raise ValidationError("not a skeleton document")
        names = [b["name"] for b in doc["bodies"]]
        index = {n: i for i, n in enumerate(names)}
        parents = [index[b["parent"]] if b["parent"] is not None else -1
                   for b in doc["bodies"]]
        offsets = np.array([b["offset"] for b in doc["bodies"]], dtype=np.float64)
        joints = [Joint(index[j["body"]],
                        [Dof(d["name"], np.asarray(d["axis"], dtype=np.float64),
                             (d["limits"][0], d["limits"][1])) for d in j["dofs"]])
                  for j in doc["joints"]]
        partition = {part: [index[n] for n in body_names]
                     for part, body_names in doc["partition"].items()}
        return cls(names, parents, offsets, joints, partition).validate()

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "SkeletonConfig":
        return cls.from_json(Path(path).read_text())


# ---- the default skeleton ---------------------------------------------------

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


def _mirror(offset):
    return [-offset[0], offset[1], offset[2]]


def default_skeleton() -> SkeletonConfig:
    """Neutral adult proportions; 26 bodies, 52 DOF, 6/6/5/5/4 partition."""
    arm_r = {
        "clavicle_r": ("thorax", [0.03, 0.02, 0.20]),
        "scapula_r": ("clavicle_r", [0.14, -0.03, 0.0]),
        "humerus_r": ("scapula_r", [0.05, 0.0, -0.02]),
        "ulna_r": ("humerus_r", [0.0, 0.0, -0.29]),
        "radius_r": ("ulna_r", [0.02, 0.01, -0.02]),
        "hand_r": ("radius_r", [0.0, 0.0, -0.24]),
    }
    leg_r = {
        "femur_r": ("pelvis", [0.09, 0.0, -0.03]),
        "tibia_r": ("femur_r", [0.0, 0.0, -0.41]),
        "talus_r": ("tibia_r", [0.0, 0.0, -0.40]),
        "calcn_r": ("talus_r", [0.0, -0.04, -0.04]),
        "toes_r": ("calcn_r", [0.0, 0.17, 0.0]),
    }
    backbone = {
        "pelvis": (None, [0.0, 0.0, 0.0]),
        "lumbar": ("pelvis", [0.0, 0.0, 0.14]),
        "thorax": ("lumbar", [0.0, 0.0, 0.16]),
        "head": ("thorax", [0.0, 0.0, 0.30]),
    }

    bodies: list[str] = []
    parent_names: list[str | None] = []
    offsets: list[list[float]] = []

    def add(table, mirror=False):
        for name, (parent, off) in table.items():
            n = name.replace("_r", "_l") if mirror else name
            p = parent.replace("_r", "_l") if mirror and parent and parent.endswith("_r") \
                else parent
            bodies.append(n)
            parent_names.append(p)
            offsets.append(_mirror(off) if mirror else list(off))

    add(arm_r, mirror=True)   # left arm: indices 0..5
    add(arm_r)                # right arm: 6..11
    add(leg_r, mirror=True)   # left leg: 12..16
    add(leg_r)                # right leg: 17..21
    add(backbone)             # backbone: 22..25

    index = {n: i for i, n in enumerate(bodies)}
    parents = [index[p] if p is not None else -1 for p in parent_names]

    pi = np.pi
    wide = (-pi, pi)

    def spine_dofs(prefix, rot=(-1.2, 1.2), bend=(-0.6, 0.6), ext=(-0.8, 0.8)):
        # axial rotation first: it carries the largest range in a swing, and
        # a first-axis angle can never trip the middle-axis gimbal flag
        return [Dof(f"{prefix}_rotation", _Z, rot),
                Dof(f"{prefix}_bending", _Y, bend),
                Dof(f"{prefix}_extension", _X, ext)]

    def joints_for_side(side):
        s = side
        return {
            f"clavicle_{s}": [Dof(f"clavicle_{s}_elevation", _X, (-0.6, 0.6)),
                              Dof(f"clavicle_{s}_protraction", _Z, (-0.6, 0.6))],
            f"scapula_{s}": [Dof(f"scapula_{s}_rotation", _Z, (-0.6, 0.6)),
                             Dof(f"scapula_{s}_tilt", _Y, (-0.5, 0.5)),
                             Dof(f"scapula_{s}_winging", _X, (-0.5, 0.5))],
            f"humerus_{s}": [Dof(f"shoulder_{s}_flexion", _X, (-1.6, 2.6)),
                             Dof(f"shoulder_{s}_adduction", _Y, (-1.4, 1.4)),
                             Dof(f"shoulder_{s}_rotation", _Z, (-1.5, 1.5))],
            f"ulna_{s}": [Dof(f"elbow_{s}_flexion", _X, (-0.1, 2.6))],
            f"radius_{s}": [Dof(f"forearm_{s}_pronation", _Z, (-1.6, 1.6))],
            f"hand_{s}": [Dof(f"wrist_{s}_flexion", _X, (-1.3, 1.3)),
                          Dof(f"wrist_{s}_deviation", _Y, (-0.9, 0.9))],
            f"femur_{s}": [Dof(f"hip_{s}_flexion", _X, (-0.7, 2.0)),
                           Dof(f"hip_{s}_adduction", _Y, (-0.9, 0.9)),
                           Dof(f"hip_{s}_rotation", _Z, (-1.1, 1.1))],
            f"tibia_{s}": [Dof(f"knee_{s}_flexion", _X, (-2.4, 0.1))],
            f"talus_{s}": [Dof(f"ankle_{s}_dorsiflexion", _X, (-0.9, 0.9)),
                           Dof(f"ankle_{s}_inversion", _Y, (-0.6, 0.6))],
            f"calcn_{s}": [Dof(f"subtalar_{s}_rotation", _Z, (-0.6, 0.6))],
            f"toes_{s}": [Dof(f"mtp_{s}_flexion", _X, (-0.9, 0.9))],
        }

    dof_table: dict[str, list[Dof]] = {
        "pelvis": spine_dofs("pelvis", rot=(-1.6, 1.6), bend=(-0.7, 0.7),
                             ext=(-1.0, 1.0)),
        "lumbar": spine_dofs("lumbar"),
        "thorax": spine_dofs("thorax"),
        "head": spine_dofs("neck", rot=(-1.3, 1.3)),
    }
    dof_table.update(joints_for_side("l"))
    dof_table.update(joints_for_side("r"))

    joints = [Joint(i, dof_table[name]) for i, name in enumerate(bodies)]
    partition = {
        "left_arm": list(range(0, 6)),
        "right_arm": list(range(6, 12)),
        "left_leg": list(range(12, 17)),
        "right_leg": list(range(17, 22)),
        "backbone": list(range(22, 26)),
    }
    return SkeletonConfig(bodies, parents, np.array(offsets), joints,
                          partition).validate()
