"""Central-difference verification of reverse-mode gradients.

Run in 64-bit: perturbing float32 parameters at h=1e-5 drowns the signal in
rounding noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class EntryReport:
    param: str
    index: int
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    per_param: dict[str, float] = field(default_factory=dict)
    worst: EntryReport | None = None
    unverifiable: list[tuple[str, int]] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        return max(self.per_param.values()) if self.per_param else 0.0

    def passed(self, tol: float) -> bool:
        return not self.unverifiable and self.max_rel_error < tol

    def summary(self) -> str:
        lines = [f"{name}: max rel err {err:.3e}" for name, err in self.per_param.items()]
        if self.worst:
            lines.append(f"worst: {self.worst.param}[{self.worst.index}] "
                         f"analytic={self.worst.analytic:.6e} numeric={self.worst.numeric:.6e} "
                         f"rel={self.worst.rel_error:.3e}")
        if self.unverifiable:
            lines.append(f"unverifiable entries: {self.unverifiable}")
        return "\n".join(lines)


def grad_check(loss_fn, params: dict[str, Tensor], h: float = 1e-5,
               max_entries_per_param: int | None = None,
               rng: np.random.Generator | None = None,
               denom_floor: float = 1e-6) -> GradCheckReport:
    """Compare reverse-mode gradients of `loss_fn()` against central differences.

    `loss_fn` is a zero-argument closure over `params` returning a scalar
    Tensor. Each checked entry is perturbed by +/-h and the relative error
    |num - ana| / max(|num|, |ana|, denom_floor) recorded; the report lists
    the worst entry per parameter. Entries where the perturbed loss is not
    finite are marked unverifiable instead of failing.
    """
    for p in params.values():
        p.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()}

    report = GradCheckReport()
    for name, p in params.items():
        flat = p.data.reshape(-1)
        n = flat.size
        if max_entries_per_param is not None and n > max_entries_per_param:
            if rng is None:
                rng = np.random.default_rng(0)
            indices = rng.choice(n, size=max_entries_per_param, replace=False)
        else:
            indices = np.arange(n)
        worst_err = 0.0
        ana_flat = analytic[name].reshape(-1)
        for idx in indices:
            orig = flat[idx]
            flat[idx] = orig + h
            up = float(loss_fn().data.reshape(-1)[0])
            flat[idx] = orig - h
            down = float(loss_fn().data.reshape(-1)[0])
            flat[idx] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                report.unverifiable.append((name, int(idx)))
                continue
            num = (up - down) / (2.0 * h)
            ana = float(ana_flat[idx])
            rel = abs(num - ana) / max(abs(num), abs(ana), denom_floor)
            if rel > worst_err:
                worst_err = rel
            if report.worst is None or rel > report.worst.rel_error:
                report.worst = EntryReport(name, int(idx), ana, num, rel)
        report.per_param[name] = worst_err
    return report
