"""Exception types shared across the package."""


class EnumerationBudgetError(RuntimeError):
    """An exact enumeration would exceed the configured state budget."""

    def __init__(self, states, budget):
        super().__init__(
            f"enumeration needs {states} states but the budget is {budget}; "
            "pass a larger budget to proceed"
        )
        self.states = states
        self.budget = budget


class AlreadyFixedError(ValueError):
    """A database position was conditioned twice."""


class ZeroProbabilityError(ValueError):
    """A template distribution was conditioned on a zero-probability event."""


class NotSamplableError(ValueError):
    """The half-line property failed; carries the witness."""

    def __init__(self, eps, outcome, context=""):
        detail = f" ({context})" if context else ""
        super().__init__(
            f"half-line property fails at eps={eps} "
            f"with witness outcome {outcome}{detail}"
        )
        self.eps = eps
        self.outcome = outcome
