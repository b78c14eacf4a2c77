"""Built-in spray definitions.

Every acceptance check runs from these presets, so the coefficient
strings are part of the contract:

* flat2 / flat3: straight-line sprays with the Euclidean norm candidate;
* anderson-thompson: the classical planar system x1'' + (x1')^2 + (x2')^2
  = 0, x2'' + 4 x1' x2' = 0, projectively metrizable but not variational;
* yang(lambda): the Euclidean norm spray shifted by -2*lambda*|y|*C,
  isotropic of constant flag curvature lambda^2;
* riemannian: geodesics of the curved diagonal metric
  (1+x2^2) dx1^2 + (1+x1^2) dx2^2.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .expression import Expression, parse
from .spray import Spray


@dataclass(frozen=True)
class SprayDefinition:
    """A spray given by expression strings, plus optional candidates."""

    name: str
    dim: int
    G: tuple
    F: str | None = None
    theta: tuple | None = None
    description: str = ""

    def build(self) -> Spray:
        return Spray.from_strings(self.dim, self.G)

    def finsler_expression(self) -> Expression | None:
        return parse(self.F, self.dim) if self.F else None

    def theta_expressions(self):
        if not self.theta:
            return None
        return [parse(s, self.dim) for s in self.theta]

    def as_dict(self) -> dict:
        out = {"name": self.name, "dim": self.dim, "G": list(self.G)}
        if self.F:
            out["F"] = self.F
        if self.theta:
            out["theta"] = list(self.theta)
        return out


def _euclidean_norm(n: int) -> str:
    return "sqrt(" + "+".join(f"y{i+1}^2" for i in range(n)) + ")"


def flat_definition(n: int) -> SprayDefinition:
    return SprayDefinition(
        name=f"flat{n}",
        dim=n,
        G=tuple(["0"] * n),
        F=_euclidean_norm(n),
        description="straight lines; metrized by the Euclidean norm",
    )


def yang_definition(lam: float = 0.5) -> SprayDefinition:
    norm = _euclidean_norm(2)
    return SprayDefinition(
        name=f"yang({lam:g})",
        dim=2,
        G=(f"{lam:g}*{norm}*y1", f"{lam:g}*{norm}*y2"),
        F=norm,
        description="projectively flat with constant flag curvature lambda^2; "
                    "projectively but not Finsler metrizable",
    )


ANDERSON_THOMPSON = SprayDefinition(
    name="anderson-thompson",
    dim=2,
    G=("(y1^2+y2^2)/2", "2*y1*y2"),
    F=_euclidean_norm(2),
    description="planar system x'' + (x')^2 + (y')^2 = 0, y'' + 4 x' y' = 0; "
                "not variational, hence not Finsler metrizable",
)

RIEMANNIAN = SprayDefinition(
    name="riemannian",
    dim=2,
    G=("(x2*y1*y2-x1*y2^2/2)/(1+x2^2)", "(x1*y1*y2-x2*y1^2/2)/(1+x1^2)"),
    F="sqrt((1+x2^2)*y1^2+(1+x1^2)*y2^2)",
    description="geodesic spray of the diagonal metric "
                "(1+x2^2) dx1^2 + (1+x1^2) dx2^2",
)

_YANG_PATTERN = re.compile(r"^yang(?:\((?:lambda=)?(?P<lam>[-+0-9.eE]+)\))?$")

PRESET_NAMES = ("flat2", "flat3", "anderson-thompson", "yang", "riemannian")


def get_preset(name: str) -> SprayDefinition:
    """Resolve a preset name; yang accepts yang, yang(0.5), yang(lambda=0.5)."""
    key = name.strip().lower()
    if key == "flat2":
        return flat_definition(2)
    if key == "flat3":
        return flat_definition(3)
    if key == "anderson-thompson":
        return ANDERSON_THOMPSON
    if key == "riemannian":
        return RIEMANNIAN
    m = _YANG_PATTERN.match(key)
    if m:
        lam = float(m.group("lam")) if m.group("lam") else 0.5
        return yang_definition(lam)
    raise KeyError(
        f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
    )
