"""Exception types raised across the package."""

import numpy as np


class InvalidArgumentError(ValueError):
    pass


class IsolatedUnitError(InvalidArgumentError):
    """A unit has no neighbours, so its neighbourhood average is undefined."""

    def __init__(self, units):
        self.units = list(units)
        shown = ", ".join(str(u) for u in self.units[:10])
        more = "" if len(self.units) <= 10 else f" (+{len(self.units) - 10} more)"
        super().__init__(f"isolated units (0-based): {shown}{more}")


class NonPositiveDefiniteError(np.linalg.LinAlgError):
    pass


class CollinearityError(np.linalg.LinAlgError):
    pass


class InsufficientDataError(ValueError):
    pass


class MissingColumnError(KeyError):
    pass


class InvalidStateError(ValueError):
    pass


class DegenerateChainError(ValueError):
    pass


class SchemaError(ValueError):
    pass
