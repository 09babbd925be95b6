"""Experiment configuration shared by the CLI and the run functions."""

from __future__ import annotations

from dataclasses import dataclass, field

EXPERIMENTS = ("gauss-validate", "long-context", "eps-sweep", "search-sim", "audit-dump")


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 10_000
    n_list: list[int] = field(default_factory=list)
    sigma: float = 1.0
    sigma_list: list[float] = field(default_factory=list)
    mu: float = 0.0
    eps: list[float] = field(default_factory=lambda: [0.01])
    trials: int = 100
    seed: int = 0
    k: int = 16
    input: str | None = None
    output: str | None = None
    cells: int = 32
    strict: bool = False
    figures: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; pick one of {EXPERIMENTS}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.eps:
            raise ValueError("need at least one epsilon")
        for e in self.eps:
            if not 0.0 < e < 1.0:
                raise ValueError(f"epsilon {e} outside (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def sigmas(self) -> list[float]:
        return self.sigma_list if self.sigma_list else [self.sigma]

    @property
    def lengths(self) -> list[int]:
        return self.n_list if self.n_list else [self.n]
