"""Exception taxonomy.

ValueError subclasses signal bad input (CLI exit code 2); NumericalContractError
signals a violated numerical contract discovered at run time (CLI exit code 3),
e.g. a covariance that fails the PSD check or a near-coincident configuration.
"""


class NumericalContractError(RuntimeError):
    """A numerical invariant the pipeline relies on failed to hold."""


class NotPositiveSemidefinite(NumericalContractError):
    """Covariance has an eigenvalue below the tolerated floor."""

    def __init__(self, eigenvalue: float, floor: float):
        self.eigenvalue = eigenvalue
        self.floor = floor
        super().__init__(
            f"matrix is not positive semidefinite: eigenvalue {eigenvalue:.6e} "
            f"below floor {-floor:.6e}"
        )


class NearCoincidentConfiguration(NumericalContractError):
    """Point configuration too close to coincident for a stable Schur complement."""


class PatternTooLarge(ValueError):
    """Moment pattern beyond the exact-evaluation cap; use the Monte Carlo route."""


class AcceptanceFailure(RuntimeError):
    """A statistical acceptance bound requested via --assert was violated (exit 4)."""
