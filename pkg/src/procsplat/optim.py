"""A small Adam optimizer over named parameter arrays.

Parameters are identified by hashable keys (one per asset array), so
moment state survives across iterations, and `resize` keeps it aligned
when rows are pruned or appended during densification.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class _Moments:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


@dataclass
class Adam:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    state: "dict[object, _Moments]" = field(default_factory=dict)

    def step(self, key, param: np.ndarray, grad: np.ndarray, lr: float) -> None:
        """One in-place update of ``param`` using its persistent moments."""
        if param.shape != grad.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match "
                             f"parameter shape {param.shape} for {key!r}")
        st = self.state.get(key)
        if st is None:
            st = _Moments(np.zeros_like(param), np.zeros_like(param))
            self.state[key] = st
        elif st.m.shape != param.shape:
            raise ValueError(f"stale optimizer state for {key!r}: call resize "
                             f"after changing the parameter row count")
        st.t += 1
        st.m = self.beta1 * st.m + (1.0 - self.beta1) * grad
        st.v = self.beta2 * st.v + (1.0 - self.beta2) * grad * grad
        m_hat = st.m / (1.0 - self.beta1 ** st.t)
        v_hat = st.v / (1.0 - self.beta2 ** st.t)
        param -= lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def resize(self, key, keep: "np.ndarray | None" = None, extra: int = 0) -> None:
        """Filter state rows by mask ``keep`` and append ``extra`` zero rows."""
        st = self.state.get(key)
        if st is None:
            return
        if keep is not None:
            st.m = st.m[keep]
            st.v = st.v[keep]
        if extra:
            pad = (extra,) + st.m.shape[1:]
            st.m = np.concatenate([st.m, np.zeros(pad)])
            st.v = np.concatenate([st.v, np.zeros(pad)])

    def drop(self, key) -> None:
        self.state.pop(key, None)


def exponential_lr(step: int, lr_init: float, lr_final: float, max_steps: int) -> float:
    """Log-linear interpolation from lr_init to lr_final over max_steps."""
    if max_steps <= 0 or lr_init <= 0:
        return lr_init
    frac = min(max(step / max_steps, 0.0), 1.0)
    return float(lr_init * (lr_final / lr_init) ** frac)
