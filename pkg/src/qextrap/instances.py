"""Built-in challenge instances and the JSON instance format.

Gen files::

    {"kind": "gen", "weights": [...], "challenges": [0, 2, ...] or [[[re, im], ...], ...],
     "targets": [[[re, im], ...], ...], "s_dim": 4, "basis_kind": "classical", "name": "..."}

Task files::

    {"kind": "task", "amplitudes": [[re, im], ...], "dims": [dA, dB], "cut": 1}

Norm errors up to 1e-9 pass silently, up to 1e-6 are renormalized with a
warning, and anything larger is rejected.
"""

from __future__ import annotations

import json
import math
import warnings
from pathlib import Path

import numpy as np

from .commit import GenInstance, hadamard_instance
from .qcore import StateVector, haar_state
from .rng import stream

SILENT_TOL = 1e-9
RENORM_TOL = 1e-6
BUILTIN = ("degenerate", "excited", "bb84", "haar", "hadamard", "cloneable")


class InstanceError(ValueError):
    pass


def builtin_instance(name: str, m: int = 1) -> GenInstance:
    """Shipped instance ``name`` with an m-qubit message register."""
    dim = 2**m
    e = np.eye(dim, dtype=complex)
    if name == "degenerate":
        return GenInstance.classical([1.0], [0], [e[0]], name=name)
    if name == "excited":
        return GenInstance.classical([1.0], [0], [e[-1]], name=name)
    if name == "bb84":
        plus = np.ones(dim, dtype=complex) / math.sqrt(dim)
        minus = np.kron(np.array([1, -1]) / math.sqrt(2), np.ones(dim // 2) / math.sqrt(dim // 2)).astype(complex)
        return GenInstance.classical([0.5] * 4, [0, 1, 2, 3], [e[0], e[-1], plus, minus], name=name)
    if name == "haar":
        rng = stream(2024, m)
        w = rng.random(3) + 0.1
        targets = [haar_state(dim, rng).amps for _ in range(3)]
        return GenInstance.classical(w / np.linalg.norm(w), [0, 1, 2], targets, name=name)
    if name == "hadamard":
        return hadamard_instance(m)
    if name == "cloneable":
        # challenges |+>, |-> (cloned by a Hadamard-conjugated copy), targets |0>, |1...1>
        h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
        return GenInstance([math.sqrt(0.5)] * 2, h, [e[0], e[-1]], m, "cloneable", name)
    raise InstanceError(f"unknown built-in instance {name!r}; choose from {', '.join(BUILTIN)}")


def _complex_vec(x, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InstanceError(f"{what} must be a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def _normalize(v: np.ndarray, what: str, sq: bool = True) -> np.ndarray:
    """Apply the tolerance policy to a vector that should have unit norm."""
    n = float(np.sum(np.abs(v) ** 2)) if sq else float(np.linalg.norm(v))
    err = abs(n - 1)
    if err > RENORM_TOL:
        raise InstanceError(f"{what} has norm error {err:.3e} > {RENORM_TOL}")
    if err >= SILENT_TOL:
        warnings.warn(f"{what} renormalized (norm error {err:.3e})", RuntimeWarning, stacklevel=3)
        return v / math.sqrt(n) if sq else v / n
    return v


def gen_from_dict(d: dict) -> GenInstance:
    try:
        w = np.asarray(d["weights"], dtype=float)
        raw_ch, raw_tg = d["challenges"], d["targets"]
    except KeyError as exc:
        raise InstanceError(f"gen instance is missing field {exc}") from None
    w = _normalize(w, "weights")
    targets = np.array([_normalize(_complex_vec(t, f"target {i}"), f"target {i}")
                        for i, t in enumerate(raw_tg)])
    kind = d.get("basis_kind", "classical")
    name = d.get("name", "file")
    m = round(math.log2(targets.shape[1]))
    if 2**m != targets.shape[1]:
        raise InstanceError(f"target length {targets.shape[1]} is not a power of two")
    if all(isinstance(c, int) for c in raw_ch):
        s_dim = int(d.get("s_dim", max(raw_ch) + 1))
        if len(set(raw_ch)) != len(raw_ch):
            i = next(i for i, c in enumerate(raw_ch) if raw_ch.index(c) != i)
            raise InstanceError(f"challenges {raw_ch.index(raw_ch[i])} and {i} are not orthogonal")
        try:
            return GenInstance.classical(w, raw_ch, targets, s_dim, name)
        except ValueError as exc:
            raise InstanceError(str(exc)) from None
    ch = np.array([_normalize(_complex_vec(c, f"challenge {i}"), f"challenge {i}")
                   for i, c in enumerate(raw_ch)])
    try:
        return GenInstance(w, ch, targets, m, kind, name)
    except ValueError as exc:
        raise InstanceError(str(exc)) from None


def task_state_from_dict(d: dict) -> tuple[StateVector, int]:
    amps = _complex_vec(d["amplitudes"], "amplitudes")
    amps = _normalize(amps, "task state")
    dims = tuple(int(x) for x in d.get("dims", (len(amps),)))
    return StateVector.from_amplitudes(amps, dims), int(d.get("cut", 1))


def load_instance(source: str, m: int = 1):
    """Built-in name (optionally ``name:m``) or path to a JSON instance file.

    Returns a :class:`GenInstance` for gen files and built-ins, and a
    :class:`~qextrap.extrap.QExtrapTask` for task files.
    """
    name, _, mm = source.partition(":")
    if name in BUILTIN and not Path(source).exists():
        return builtin_instance(name, int(mm) if mm else m)
    path = Path(source)
    if not path.exists():
        raise InstanceError(f"instance {source!r} is neither a built-in name nor an existing file")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON in {source}: {exc}") from None
    kind = d.get("kind")
    if kind == "gen":
        return gen_from_dict(d)
    if kind == "task":
        from .extrap import make_task

        state, cut = task_state_from_dict(d)
        return make_task(state, cut)
    raise InstanceError(f"instance kind must be 'gen' or 'task', got {kind!r}")


def gen_to_dict(gen: GenInstance) -> dict:
    def pairs(v):
        return [[float(z.real), float(z.imag)] for z in v]

    if gen.basis_kind == "classical":
        ch = [int(np.argmax(np.abs(c))) for c in gen.challenges]
    else:
        ch = [pairs(c) for c in gen.challenges]
    return {"kind": "gen", "name": gen.name, "basis_kind": gen.basis_kind, "s_dim": gen.s_dim,
            "weights": [float(b) for b in gen.betas], "challenges": ch,
            "targets": [pairs(t) for t in gen.targets]}
