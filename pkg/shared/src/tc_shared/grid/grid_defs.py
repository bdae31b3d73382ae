from __future__ import annotations

from enum import Enum


class GridScheme(Enum):
    UNIFORM = "uniform"  # equal cells, nodes at (i - 1/2) h
    STRETCHED = "stretched"  # sinh-clustered cells near the origin


class NormKind(Enum):
    L2 = "L2"
    X = "X"  # L2 with weight 1/r^2
    H1 = "H1"  # Dirichlet H1 form
    HM1 = "Hm1"  # dual of the Dirichlet H1 form
    M = "M"  # L2 with weight r e^{r^2/4}
