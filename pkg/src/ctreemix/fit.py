"""Fitting a context-tree mixture to a series and updating it online.

The first max(depth, order) samples of the input are consumed as the
initial conditioning segment and never scored; every later sample is routed
through the trie.  After the initial fit the model can absorb one sample at
a time, refreshing only the D+1 affected nodes, which reproduces a
from-scratch refit exactly for the conjugate AR leaves.
"""

from __future__ import annotations

from collections import deque
from typing import Optional, Sequence

import numpy as np

from .quantizer import Quantizer
from .tree import ContextTrie, TreeModel, default_beta

# Online ARCH refit policy: cheap warm steps most of the time, a periodic
# full refresh to stay aligned with batch refits.
ARCH_WARM_ITERS = 2
ARCH_FULL_REFRESH_EVERY = 50


class FittedModel:
    """A fitted trie plus the rolling history needed to predict and update."""

    def __init__(self, model, quantizer: Quantizer, depth: int, beta: Optional[float] = None):
        m = quantizer.alphabet_size
        if beta is None:
            beta = default_beta(m)
        self.model = model
        self.quantizer = quantizer
        self.depth = depth
        self.beta = beta
        self.trie = ContextTrie(model, m, depth, beta)
        self.init_len = max(depth, model.order)
        self._history: deque[float] = deque(maxlen=max(self.init_len, 1))
        self._steps_since_fit = 0
        self._map_tree: Optional[TreeModel] = None

    # -- state derived from the rolling history ------------------------------

    def current_context(self) -> tuple[int, ...]:
        h = self._history
        return tuple(self.quantizer(h[-1 - d]) for d in range(self.depth))

    def current_lags(self) -> tuple[float, ...]:
        h = self._history
        return tuple(h[-1 - d] for d in range(self.model.order))

    # -- fitting and sequential updates --------------------------------------

    def _ingest(self, x: float) -> list:
        path = self.trie.observe(x, self.current_context(), self.current_lags())
        self._history.append(x)
        return path

    def update(self, x: float) -> None:
        """Absorb one new sample and refresh evidence, MAP tree and parameters."""
        context = self.current_context()
        path = self._ingest(x)
        self._steps_since_fit += 1
        if self.model.kind == "arch":
            if self._steps_since_fit % ARCH_FULL_REFRESH_EVERY == 0:
                for _, node in self.trie.nodes():
                    node.state.dirty = True
                self.trie.full_sweep()
            else:
                for node in path:
                    self.model.warm_refit(node.state, ARCH_WARM_ITERS)
                self.trie.refresh_path(context)
        else:
            self.trie.refresh_path(context)
        self._map_tree = self.trie.map_tree()

    # -- queries --------------------------------------------------------------

    @property
    def num_scored(self) -> int:
        return self.trie.num_obs

    def log_evidence(self) -> float:
        return self.trie.log_evidence()

    def map_tree(self) -> TreeModel:
        if self._map_tree is None:
            self._map_tree = self.trie.map_tree()
        return self._map_tree

    def map_posterior(self) -> float:
        return self.trie.posterior_of(self.map_tree())

    def posterior_of(self, tree: TreeModel) -> float:
        return self.trie.posterior_of(tree)

    def sample_trees(self, k: int, rng: np.random.Generator) -> list[TreeModel]:
        return [self.trie.sample_tree(rng) for _ in range(k)]

    def predict_next(self) -> tuple[float, float]:
        """One-step predictive mean and variance from the MAP tree and parameters."""
        tree = self.map_tree()
        leaf = tree.state_of(self.current_context())
        node = self.trie.walk(leaf)
        state = node.state if node is not None else None
        return self.model.predict_from_state(state, self.current_lags(), self.trie.root.state)

    def leaf_parameters(self, tree: Optional[TreeModel] = None) -> dict[tuple[int, ...], dict]:
        """MAP parameter document for every leaf of the given (default MAP) tree."""
        if tree is None:
            tree = self.map_tree()
        out = {}
        for leaf in tree.leaves:
            node = self.trie.walk(leaf)
            state = node.state if node is not None else None
            doc = self.model.leaf_param_doc(state)
            if self.model.kind == "arch" and doc["alpha"] is None:
                doc = self.model.leaf_param_doc(self.trie.root.state)
                doc["count"] = 0
            out[leaf] = doc
        return out


def fit_series(
    series: Sequence[float],
    model,
    quantizer: Quantizer,
    depth: int,
    beta: Optional[float] = None,
) -> FittedModel:
    """Fit a context-tree mixture on a full series and run the sweeps."""
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not np.all(np.isfinite(series)):
        raise ValueError("series contains non-finite values")
    fitted = FittedModel(model, quantizer, depth, beta)
    if len(series) < fitted.init_len:
        raise ValueError(
            f"series of length {len(series)} is shorter than the "
            f"initial segment of {fitted.init_len} samples"
        )
    for v in series[: fitted.init_len]:
        fitted._history.append(float(v))
    for v in series[fitted.init_len :]:
        fitted._ingest(float(v))
    fitted.trie.full_sweep()
    fitted._map_tree = fitted.trie.map_tree()
    return fitted
