"""Finite-difference verification of the analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from samplepairing.nn.network import Network, NetworkSpec, loss_xent_soft


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    worst_index: tuple
    analytic: float
    numeric: float
    n_checked: int
    n_refined: int  # entries re-evaluated with a smaller step after a kink crossing
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def __str__(self) -> str:
        return (
            f"max rel error {self.max_rel_error:.3e} at {self.worst_param}{list(self.worst_index)} "
            f"(analytic {self.analytic:.6e}, numeric {self.numeric:.6e}); "
            f"{self.n_checked} entries, {self.n_refined} refined, tol {self.tolerance:g}"
        )


def relative_error(a: float, n: float, floor: float = 1e-7) -> float:
    return abs(a - n) / max(abs(a), abs(n), floor)


def grad_check(
    spec: NetworkSpec,
    tolerance: float = 1e-4,
    rng: np.random.Generator | int = 0,
    batch: int = 16,
    eps: float = 1e-3,
    params: list[str] | None = None,
    max_refine: int = 3,
    stencil: int = 4,
) -> GradCheckReport:
    """Compare backprop against central differences for every parameter.

    ``stencil`` selects the 2-point central quotient or the 4-point
    central quotient ``(8(f(h) - f(-h)) - (f(2h) - f(-2h))) / 12h``.
    Runs in float64 in training mode; the dropout masks are regenerated from
    one fixed seed on every evaluation, so they stay constant. If a
    perturbation flips a ReLU sign or a pooling argmax the step is divided
    by 10 (up to ``max_refine`` times) so the difference quotient is taken
    on a single smooth piece.
    """
    rng = np.random.default_rng(rng)
    net = Network(spec, rng, dtype=np.float64)
    # move off the trivial init so batch-norm affine parameters get exercised
    for layer in net.layers:
        for k, p in layer.params.items():
            if k in ("gamma", "beta", "b"):
                p += rng.normal(0.0, 0.2, size=p.shape)
    x = rng.random((batch,) + spec.input_shape)
    targets = rng.dirichlet(np.ones(spec.n_classes), size=batch)
    mask_seed = int(rng.integers(2**31))
    buffers = {k: v.copy() for k, v in net.buffers().items()}

    def loss_at():
        logits = net.forward(x, train=True, rng=np.random.default_rng(mask_seed))
        return loss_xent_soft(logits, targets)

    _, dlogits = loss_at()
    base_sig = net.nonsmooth_signature()
    analytic = {k: g.copy() for k, g in net.backward(dlogits).items()}

    if stencil not in (2, 4):
        raise ValueError("stencil must be 2 or 4")
    offsets = (1, -1) if stencil == 2 else (1, -1, 2, -2)
    named = net.named_params()
    names = params if params is not None else list(named)
    worst = (-1.0, "", (), 0.0, 0.0)
    n_checked = n_refined = 0
    for name in names:
        p = named[name]
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            h = eps
            for attempt in range(max_refine + 1):
                f, smooth = {}, True
                for step in offsets:
                    p[idx] = orig + step * h
                    f[step] = loss_at()[0]
                    smooth = smooth and net.nonsmooth_signature() == base_sig
                p[idx] = orig
                if smooth or attempt == max_refine:
                    break
                h /= 10.0
            if h != eps:
                n_refined += 1
            if stencil == 2:
                numeric = (f[1] - f[-1]) / (2 * h)
            else:
                numeric = (8 * (f[1] - f[-1]) - (f[2] - f[-2])) / (12 * h)
            a = analytic[name][idx]
            err = relative_error(a, numeric)
            n_checked += 1
            if err > worst[0]:
                worst = (err, name, idx, float(a), float(numeric))
    net.set_buffers(buffers)
    net.clear_caches()
    return GradCheckReport(worst[0], worst[1], tuple(int(i) for i in worst[2]), worst[3], worst[4],
                           n_checked, n_refined, tolerance)
