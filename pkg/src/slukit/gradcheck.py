"""Central-difference gradient verification against the tape.

The checker never reuses tape gradients for its reference values: every
scalar parameter is perturbed by +-eps and the loss re-evaluated, so the
comparison is a genuinely independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DeterminismError, DomainError
from .params import ParameterStore
from .tape import backward, recording


@dataclass
class GradCheckReport:
    """Per-parameter worst relative error between autodiff and central differences."""

    per_param: dict[str, float] = field(default_factory=dict)
    n_checked: int = 0

    @property
    def max_relative_error(self) -> float:
        return max(self.per_param.values(), default=0.0)

    @property
    def worst_param(self) -> str | None:
        if not self.per_param:
            return None
        return max(self.per_param, key=lambda k: self.per_param[k])

    def format_lines(self) -> list[str]:
        lines = [
            f"{name} max_rel_err={err:.3e}" for name, err in self.per_param.items()
        ]
        lines.append(
            f"overall max_rel_err={self.max_relative_error:.3e} "
            f"({self.n_checked} scalars checked)"
        )
        return lines


def finite_diff_check(loss_fn, params: ParameterStore, eps: float = 1e-5) -> GradCheckReport:
    """Compare tape gradients of ``loss_fn(params)`` with central differences.

    ``loss_fn`` must be deterministic (dropout off); two baseline evaluations
    are compared exactly and a mismatch raises DeterminismError. The relative
    error per scalar is |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8).
    """
    if not 0.0 < eps <= 1e-2:
        raise DomainError(f"eps must lie in (0, 1e-2], got {eps}")
    base1 = loss_fn(params).item()
    base2 = loss_fn(params).item()
    if base1 != base2:
        raise DeterminismError(
            f"loss is not deterministic: {base1!r} != {base2!r} on identical evaluations"
        )

    with recording() as rec:
        loss = loss_fn(params)
    backward(loss)
    ad_grads = params.gradients(rec)

    report = GradCheckReport()
    for name, tensor in params.items():
        flat = tensor.data.reshape(-1)
        ad = ad_grads.get(name)
        ad_flat = ad.reshape(-1) if ad is not None else None
        worst = 0.0
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            plus = loss_fn(params).item()
            flat[k] = orig - eps
            minus = loss_fn(params).item()
            flat[k] = orig
            g_fd = (plus - minus) / (2.0 * eps)
            g_ad = float(ad_flat[k]) if ad_flat is not None else 0.0
            rel = abs(g_ad - g_fd) / max(abs(g_ad), abs(g_fd), 1e-8)
            if rel > worst:
                worst = rel
        report.per_param[name] = worst
        report.n_checked += flat.size
    return report
