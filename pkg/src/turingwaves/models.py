"""System descriptors for viscous conservation laws ``u_t + f(u; eps)_x = D u_xx``.

The flux is linear plus a polynomial acting on the first component only::

    f(u; eps) = A(eps) u + N(u),    N(u) = beta * (p(u_1), 0, ..., 0)

where ``A(eps)`` is ``A_base`` with ``eps`` added at one designated entry.

Systems are stored as JSON documents::

    {
      "label": "quadratic",
      "A": [[1, 0, 0], [0, 2.605173614560316, 0], [0, 0, 3]],
      "eps_slot": [1, 1],
      "D": [[1, 0, 2], [0, 1, 1], [1, -2, 1]],
      "nonlinearity": {"kind": "quadratic"},
      "beta": -10
    }

Matrices are row-major nested lists; ``eps_slot`` is a zero-based
``[row, col]`` pair; ``n`` may be given and is then checked against the
matrices.  ``nonlinearity.kind`` is one of ``none``, ``quadratic``,
``cubic`` or ``homotopy`` (the latter needs ``h`` in ``[0, 1]``).
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

__all__ = [
    "ConfigError",
    "Nonlinearity",
    "SystemSpec",
    "load_system",
    "load_fixture",
    "system_from_dict",
    "evaluate_A",
    "evaluate_flux",
    "evaluate_flux_jacobian",
    "FIXTURES",
]

NONLINEARITY_KINDS = ("none", "quadratic", "cubic", "homotopy")
FIXTURES = ("quadratic", "cubic_super", "cubic_sub", "singeg", "identity_viscosity", "heat", "linear")


class ConfigError(ValueError):
    """Raised for malformed system documents."""


@dataclass(frozen=True)
class Nonlinearity:
    kind: str = "none"
    h: float | None = None

    def __post_init__(self):
        if self.kind not in NONLINEARITY_KINDS:
            raise ConfigError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "homotopy":
            if self.h is None or not (0.0 <= self.h <= 1.0):
                raise ConfigError("homotopy nonlinearity needs h in [0, 1]")

    def weights(self) -> tuple[float, float]:
        """Return the (quadratic, cubic) weights of the scalar polynomial."""
        if self.kind == "quadratic":
            return 1.0, 0.0
        if self.kind == "cubic":
            return 0.0, 1.0
        if self.kind == "homotopy":
            return 1.0 - self.h, self.h
        return 0.0, 0.0

    def scalar(self, s, beta):
        w2, w3 = self.weights()
        return beta * (w2 * s**2 + w3 * s**3)

    def scalar_derivative(self, s, beta):
        w2, w3 = self.weights()
        return beta * (2.0 * w2 * s + 3.0 * w3 * s**2)

    def scalar_second_derivative(self, s, beta):
        w2, w3 = self.weights()
        return beta * (2.0 * w2 + 6.0 * w3 * s)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "homotopy":
            d["h"] = self.h
        return d


@dataclass(frozen=True)
class SystemSpec:
    """An n x n viscous conservation law with a one-entry bifurcation parameter."""

    A_base: np.ndarray
    D: np.ndarray
    eps_slot: tuple[int, int] = (1, 1)
    nonlinearity: Nonlinearity = field(default_factory=Nonlinearity)
    beta: float = 0.0
    label: str = "system"

    def __post_init__(self):
        A = np.array(self.A_base, dtype=float)
        D = np.array(self.D, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError(f"A must be square, got shape {A.shape}")
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ConfigError(f"D must be square, got shape {D.shape}")
        if A.shape != D.shape:
            raise ConfigError(f"dimension mismatch: A is {A.shape}, D is {D.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(D)) and np.isfinite(self.beta)):
            raise ConfigError("non-finite entries in system")
        i, j = (int(k) for k in self.eps_slot)
        if not (0 <= i < A.shape[0] and 0 <= j < A.shape[0]):
            raise ConfigError(f"eps_slot {self.eps_slot} outside a {A.shape[0]}x{A.shape[0]} matrix")
        A.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "A_base", A)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "eps_slot", (i, j))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def n(self) -> int:
        return self.A_base.shape[0]

    @property
    def eps_direction(self) -> np.ndarray:
        """dA/deps: a matrix with a single unit entry."""
        E = np.zeros((self.n, self.n))
        E[self.eps_slot] = 1.0
        return E

    def replace(self, **changes) -> "SystemSpec":
        return dataclasses.replace(self, **changes)

    def with_homotopy(self, h: float) -> "SystemSpec":
        return self.replace(nonlinearity=Nonlinearity("homotopy", float(h)))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "A": self.A_base.tolist(),
            "eps_slot": list(self.eps_slot),
            "D": self.D.tolist(),
            "nonlinearity": self.nonlinearity.to_dict(),
            "beta": self.beta,
        }


def system_from_dict(doc: dict[str, Any]) -> SystemSpec:
    try:
        A = doc["A"]
        D = doc["D"]
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r}") from None
    try:
        A = np.array(A, dtype=float)
        D = np.array(D, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrices must be numeric row-major lists: {exc}") from None
    nl = doc.get("nonlinearity", {"kind": "none"})
    if isinstance(nl, str):
        nl = {"kind": nl}
    spec = SystemSpec(
        A_base=A,
        D=D,
        eps_slot=tuple(doc.get("eps_slot", (1, 1) if A.shape[0] > 1 else (0, 0))),
        nonlinearity=Nonlinearity(nl.get("kind", "none"), nl.get("h")),
        beta=float(doc.get("beta", 0.0)),
        label=str(doc.get("label", "system")),
    )
    if "n" in doc and int(doc["n"]) != spec.n:
        raise ConfigError(f"declared n={doc['n']} but matrices are {spec.n}x{spec.n}")
    return spec


def load_system(source: str | Path | dict) -> SystemSpec:
    """Load a system from a JSON file path, a JSON string, or an already-parsed dict."""
    if isinstance(source, dict):
        return system_from_dict(source)
    text = None
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text()
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return system_from_dict(doc)


def load_fixture(name: str) -> SystemSpec:
    """Load one of the bundled fixtures by name (see ``FIXTURES``)."""
    ref = resources.files("turingwaves") / "fixtures" / f"{name}.json"
    if not ref.is_file():
        raise ConfigError(f"no bundled fixture named {name!r}; choose from {FIXTURES}")
    return system_from_dict(json.loads(ref.read_text()))


def evaluate_A(spec: SystemSpec, eps: float) -> np.ndarray:
    A = np.array(spec.A_base)
    A[spec.eps_slot] += eps
    return A


def _nonlinear(spec: SystemSpec, u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u, dtype=float)
    out[..., 0] = spec.nonlinearity.scalar(u[..., 0], spec.beta)
    return out


def evaluate_flux(spec: SystemSpec, u, eps: float) -> np.ndarray:
    """Flux ``A(eps) u + N(u)``; ``u`` may carry leading batch axes (..., n)."""
    u = np.asarray(u, dtype=float)
    return u @ evaluate_A(spec, eps).T + _nonlinear(spec, u)


def evaluate_flux_jacobian(spec: SystemSpec, u, eps: float) -> np.ndarray:
    """Jacobian ``A(eps) + dN(u)``; batched over leading axes of ``u``."""
    u = np.asarray(u, dtype=float)
    J = np.broadcast_to(evaluate_A(spec, eps), u.shape[:-1] + (spec.n, spec.n)).copy()
    J[..., 0, 0] += spec.nonlinearity.scalar_derivative(u[..., 0], spec.beta)
    return J
