"""Shared exception types."""


class NonConvergent(RuntimeError):
    """An adaptive quadrature failed to meet its tolerance within caps."""


class TailNotResolved(RuntimeError):
    """Doubling the truncation length never met the tail criterion."""


class SingularOperator(RuntimeError):
    """(I - K) is numerically singular on the current grid."""


class PsiTooSmall(RuntimeError):
    """|psi(tau)| fell below the non-vanishing guard."""


class NoConvergence(RuntimeError):
    """An iterative solver exhausted its iteration budget."""


class WeightVanishes(RuntimeError):
    """A kernel weight function vanished at a quadrature node."""
